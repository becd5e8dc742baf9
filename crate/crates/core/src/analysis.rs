//! Dynamical characterization: turning points, orbit period, bifurcation
//! sweeps and divergence timing between trajectories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{initialize_state, simulate, CircuitParams, Trajectory, STEPS_PER_PERIOD};
use crate::error::{invalid, Error, Result};
use crate::memristor::MemristorIV;
use crate::signal::{square_wave, DEFAULT_PERIOD};

pub const DEFAULT_HYSTERESIS: f64 = 2e-3;
pub const DEFAULT_CLUSTER_EPS: f64 = 2e-3;
/// Longest orbit period searched for, in drive periods.
pub const MAX_ORBIT_PERIOD: usize = 8;
const MIN_EXTREMA: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

impl ExtremumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExtremumKind::Max => "max",
            ExtremumKind::Min => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub t: f64,
    pub v: f64,
    pub kind: ExtremumKind,
}

/// Turning points of `v` inside `[window_start, window_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaSet {
    pub window_start: f64,
    pub window_end: f64,
    pub points: Vec<Extremum>,
}

impl ExtremaSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, kind: ExtremumKind) -> usize {
        self.points.iter().filter(|e| e.kind == kind).count()
    }

    pub fn values(&self, kind: ExtremumKind) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter(move |e| e.kind == kind).map(|e| e.v)
    }
}

/// Zig-zag turning-point detector on `values`: a running extreme is
/// confirmed once the signal retreats from it by more than `eps`.
fn zigzag(t: &[f64], values: &[f64], eps: f64) -> Vec<Extremum> {
    #[derive(Clone, Copy)]
    enum Dir {
        Unknown { lo: usize, hi: usize },
        Up(usize),
        Down(usize),
    }
    let mut out = Vec::new();
    if values.is_empty() {
        return out;
    }
    let mut dir = Dir::Unknown { lo: 0, hi: 0 };
    for k in 1..values.len() {
        let x = values[k];
        dir = match dir {
            Dir::Unknown { mut lo, mut hi } => {
                if x - values[lo] > eps {
                    Dir::Up(k)
                } else if values[hi] - x > eps {
                    Dir::Down(k)
                } else {
                    if x < values[lo] {
                        lo = k;
                    }
                    if x > values[hi] {
                        hi = k;
                    }
                    Dir::Unknown { lo, hi }
                }
            }
            Dir::Up(c) => {
                if x > values[c] {
                    Dir::Up(k)
                } else if values[c] - x > eps {
                    out.push(Extremum {
                        t: t[c],
                        v: values[c],
                        kind: ExtremumKind::Max,
                    });
                    Dir::Down(k)
                } else {
                    Dir::Up(c)
                }
            }
            Dir::Down(c) => {
                if x < values[c] {
                    Dir::Down(k)
                } else if x - values[c] > eps {
                    out.push(Extremum {
                        t: t[c],
                        v: values[c],
                        kind: ExtremumKind::Min,
                    });
                    Dir::Up(k)
                } else {
                    Dir::Down(c)
                }
            }
        };
    }
    out
}

/// Local maxima and minima of `v` after discarding the first
/// `discard_periods` drive periods. Reversals smaller than `hysteresis_eps`
/// are ignored; kinds strictly alternate.
pub fn local_extrema(
    traj: &Trajectory,
    discard_periods: usize,
    drive_period: f64,
    hysteresis_eps: f64,
) -> Result<ExtremaSet> {
    if !(drive_period > 0.0) || !(hysteresis_eps >= 0.0) {
        return Err(invalid(
            "drive_period/hysteresis_eps",
            "must be positive / non-negative",
        ));
    }
    if traj.len() < 2 {
        return Err(Error::WindowTooShort("trajectory has fewer than 2 samples".into()));
    }
    let start_t = traj.t[0] + discard_periods as f64 * drive_period;
    let end_t = *traj.t.last().expect("nonempty");
    // Allow for rounding in the grid when the discard lands on a grid point.
    let tol = 1e-9 * traj.dt();
    let first = traj.t.partition_point(|&t| t < start_t - tol);
    if end_t <= start_t || traj.len() - first < 3 {
        return Err(Error::WindowTooShort(format!(
            "trajectory ends at {end_t:e} s, discard window ends at {start_t:e} s"
        )));
    }
    Ok(ExtremaSet {
        window_start: start_t,
        window_end: end_t,
        points: zigzag(&traj.t[first..], &traj.v[first..], hysteresis_eps),
    })
}

/// Greedy 1-D clustering: sorted values split wherever the gap exceeds `eps`.
/// Returns the cluster label of each input value (labels ordered by value).
pub fn cluster_labels(values: &[f64], eps: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut labels = vec![0; values.len()];
    let mut label = 0;
    for w in 0..order.len() {
        if w > 0 && values[order[w]] - values[order[w - 1]] > eps {
            label += 1;
        }
        labels[order[w]] = label;
    }
    labels
}

pub fn cluster_count(values: &[f64], eps: f64) -> usize {
    cluster_labels(values, eps).into_iter().max().map_or(0, |m| m + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitTag {
    Period(usize),
    Aperiodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub tag: OrbitTag,
    pub cluster_eps: f64,
}

impl OrbitClass {
    pub fn is_periodic(&self) -> bool {
        matches!(self.tag, OrbitTag::Period(_))
    }
}

impl std::fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.tag {
            OrbitTag::Period(n) => write!(f, "period-{n}"),
            OrbitTag::Aperiodic => write!(f, "aperiodic"),
        }
    }
}

/// Classifies the orbit by the sequence of clustered maxima seen in each
/// drive period. `Period(n)` when that sequence repeats with the smallest
/// `n ≤ 8` over at least two repetitions, otherwise `Aperiodic`.
pub fn classify_orbit(ext: &ExtremaSet, drive_period: f64, cluster_eps: f64) -> Result<OrbitClass> {
    if ext.len() < MIN_EXTREMA {
        return Err(Error::TooFewExtrema {
            needed: MIN_EXTREMA,
            found: ext.len(),
        });
    }
    let maxima: Vec<&Extremum> = ext.points.iter().filter(|e| e.kind == ExtremumKind::Max).collect();
    let values: Vec<f64> = maxima.iter().map(|e| e.v).collect();
    let labels = cluster_labels(&values, cluster_eps);

    let span = (ext.window_end - ext.window_start) / drive_period;
    let periods = (span + 1e-9).floor() as usize;
    let mut signature: Vec<Vec<usize>> = vec![Vec::new(); periods];
    for (e, &label) in maxima.iter().zip(&labels) {
        let p = ((e.t - ext.window_start) / drive_period).floor() as usize;
        if p < periods {
            signature[p].push(label);
        }
    }
    let tag = (1..=MAX_ORBIT_PERIOD)
        .find(|&n| periods >= 2 * n && (0..periods - n).all(|k| signature[k] == signature[k + n]))
        .map_or(OrbitTag::Aperiodic, OrbitTag::Period);
    Ok(OrbitClass { tag, cluster_eps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub amplitude: f64,
    pub v: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub periods: usize,
    pub discard_periods: usize,
    pub steps_per_period: usize,
    pub drive_period: f64,
    pub offset: f64,
    pub hysteresis_eps: f64,
    pub cluster_eps: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            periods: 40,
            discard_periods: 15,
            steps_per_period: STEPS_PER_PERIOD,
            drive_period: DEFAULT_PERIOD,
            offset: 0.0,
            hysteresis_eps: DEFAULT_HYSTERESIS,
            cluster_eps: DEFAULT_CLUSTER_EPS,
        }
    }
}

/// Everything the sweep learned at one drive amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeResult {
    pub amplitude: f64,
    pub extrema: ExtremaSet,
    /// Distinct extremum levels (maxima and minima together).
    pub clusters: usize,
    /// `None` when too few extrema were found to classify.
    pub orbit: Option<OrbitClass>,
}

impl AmplitudeResult {
    pub fn points(&self) -> impl Iterator<Item = BifurcationPoint> + '_ {
        self.extrema.points.iter().map(move |e| BifurcationPoint {
            amplitude: self.amplitude,
            v: e.v,
            kind: e.kind,
        })
    }
}

/// Drives the circuit (initialized to the positive equilibrium) with a
/// square wave of amplitude `amplitude` and collects its steady-state
/// turning points.
pub fn analyze_amplitude(
    amplitude: f64,
    params: &CircuitParams,
    model: &MemristorIV,
    cfg: &SweepConfig,
) -> Result<AmplitudeResult> {
    if cfg.discard_periods >= cfg.periods || cfg.steps_per_period < 2 {
        return Err(invalid(
            "sweep",
            "need periods > discard_periods and >= 2 steps per period",
        ));
    }
    let init = initialize_state(1, params, model)?;
    let drive = square_wave(amplitude, cfg.offset, cfg.drive_period, cfg.periods)?;
    let traj = simulate(
        &drive,
        params,
        model,
        init,
        cfg.drive_period / cfg.steps_per_period as f64,
    )?;
    let extrema = local_extrema(&traj, cfg.discard_periods, cfg.drive_period, cfg.hysteresis_eps)?;
    let levels: Vec<f64> = extrema.points.iter().map(|e| e.v).collect();
    let clusters = cluster_count(&extrema.values(ExtremumKind::Max).collect::<Vec<_>>(), cfg.cluster_eps)
        + cluster_count(&extrema.values(ExtremumKind::Min).collect::<Vec<_>>(), cfg.cluster_eps);
    debug_assert!(clusters <= levels.len());
    let orbit = classify_orbit(&extrema, cfg.drive_period, cfg.cluster_eps).ok();
    Ok(AmplitudeResult {
        amplitude,
        extrema,
        clusters,
        orbit,
    })
}

/// Bifurcation sweep over drive amplitudes, one independent simulation per
/// amplitude, results in input order.
pub fn bifurcation_sweep(
    amplitudes: &[f64],
    params: &CircuitParams,
    model: &MemristorIV,
    cfg: &SweepConfig,
) -> Result<Vec<AmplitudeResult>> {
    if amplitudes.is_empty() {
        return Err(invalid("amplitudes", "sweep needs at least one amplitude"));
    }
    amplitudes
        .par_iter()
        .map(|&u| {
            analyze_amplitude(u, params, model, cfg).map_err(|e| Error::Sweep {
                amplitude: u,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Flattens sweep results into `(U, v, kind)` points.
pub fn bifurcation_points(results: &[AmplitudeResult]) -> Vec<BifurcationPoint> {
    results.iter().flat_map(|r| r.points()).collect()
}

/// First time at which the two output voltages differ by more than
/// `threshold`, or `None`.
pub fn divergence_time(a: &Trajectory, b: &Trajectory, threshold: f64) -> Result<Option<f64>> {
    if a.t.len() != b.t.len() || a.t.iter().zip(&b.t).any(|(x, y)| x != y) {
        return Err(Error::Shape("trajectories are on different time grids".into()));
    }
    Ok(a.v
        .iter()
        .zip(&b.v)
        .position(|(x, y)| (x - y).abs() > threshold)
        .map(|k| a.t[k]))
}
