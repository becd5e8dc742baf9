//! The driven memristive oscillator:
//!
//! ```text
//! C dv/dt = i − G_N·v − i_m(v)
//! L di/dt = u − R·i − v
//! ```
//!
//! with `G_N < 0` an ideal negative conductance and `i_m` the memristor
//! characteristic. Integration is fixed-step classical RK4 on a grid aligned
//! with every drive discontinuity.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::memristor::MemristorIV;
use crate::signal::{init_prefix, polarity_sign, Waveform};

/// Conductance that reproduces the reference component values with `k = 5`.
pub const REFERENCE_G_MAX: f64 = 1.4771e-5;
pub const REFERENCE_K: f64 = 5.0;
pub const REFERENCE_C: f64 = 10e-9;

/// Runaway guard on |v|, volts.
pub const V_LIMIT: f64 = 10.0;
/// Runaway guard on |i|, amperes.
pub const I_LIMIT: f64 = 1e-3;

/// Step used for the initialization pulse and settling gap.
pub const INIT_DT: f64 = 0.5e-6;
/// Default number of RK4 steps per drive period.
pub const STEPS_PER_PERIOD: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Capacitance, F.
    pub c: f64,
    /// Series resistance, Ω.
    pub r: f64,
    /// Inductance, H.
    pub l: f64,
    /// Signed conductance of the active element, S.
    pub g_n: f64,
}

impl CircuitParams {
    pub fn new(c: f64, r: f64, l: f64, g_n: f64) -> Result<Self> {
        let p = Self::passive(c, r, l)?;
        if !(g_n.is_finite() && g_n < 0.0) {
            return Err(invalid("g_n", "must be a negative conductance"));
        }
        Ok(Self { g_n, ..p })
    }

    /// Circuit with the active element removed (`G_N = 0`).
    pub fn passive(c: f64, r: f64, l: f64) -> Result<Self> {
        for (name, x) in [("c", c), ("r", r), ("l", l)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(Self { c, r, l, g_n: 0.0 })
    }

    /// Component values produced by the design rules at the reference point.
    pub fn reference() -> Self {
        size_circuit(REFERENCE_G_MAX, REFERENCE_K, REFERENCE_C).expect("reference sizing is valid")
    }

    pub fn r_n(&self) -> f64 {
        -1.0 / self.g_n
    }

    /// Net linear conductance at the origin seen by the capacitor node.
    fn net_linear(&self, model: &MemristorIV) -> f64 {
        self.g_n + model.g1 + 1.0 / self.r
    }

    /// True when the undriven circuit has two nonzero equilibria.
    pub fn is_bistable(&self, model: &MemristorIV) -> bool {
        self.net_linear(model) < 0.0
    }
}

/// Component sizing: `R = 1/(k·g_max)`, `R_N = R·k/(1+k)`, `G_N = −1/R_N`,
/// `L = C·R²`.
pub fn size_circuit(g_max: f64, k: f64, c: f64) -> Result<CircuitParams> {
    for (name, x) in [("g_max", g_max), ("k", k), ("c", c)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(invalid(name, "must be positive"));
        }
    }
    let r = 1.0 / (k * g_max);
    let r_n = r * k / (1.0 + k);
    CircuitParams::new(c, r, c * r * r, -1.0 / r_n)
}

/// Equilibrium voltages of the undriven circuit, ascending.
pub fn equilibria(params: &CircuitParams, model: &MemristorIV) -> Result<Vec<f64>> {
    let a = params.net_linear(model);
    if a >= 0.0 {
        return Ok(vec![0.0]);
    }
    if model.g3 == 0.0 {
        return Err(Error::Degenerate(
            "linear memristor with net negative conductance has no bounded equilibria".into(),
        ));
    }
    let v = (-a / model.g3).sqrt();
    Ok(vec![-v, 0.0, v])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitState {
    /// Memristor voltage (circuit output), V.
    pub v: f64,
    /// Inductor current, A.
    pub i: f64,
}

impl CircuitState {
    pub const ORIGIN: CircuitState = CircuitState { v: 0.0, i: 0.0 };

    pub fn new(v: f64, i: f64) -> Self {
        Self { v, i }
    }

    /// Rest state at equilibrium voltage `v` with zero drive.
    pub fn at_rest(v: f64, params: &CircuitParams) -> Self {
        Self { v, i: -v / params.r }
    }

    pub fn negated(&self) -> Self {
        Self { v: -self.v, i: -self.i }
    }

    fn check(&self, t: f64) -> Result<()> {
        let ok = self.v.is_finite() && self.i.is_finite() && self.v.abs() <= V_LIMIT && self.i.abs() <= I_LIMIT;
        if ok {
            Ok(())
        } else {
            Err(Error::Runaway {
                t,
                v: self.v,
                i: self.i,
            })
        }
    }
}

/// Right-hand side `(dv/dt, di/dt)`.
pub fn derivatives(state: &CircuitState, u: f64, params: &CircuitParams, model: &MemristorIV) -> Result<(f64, f64)> {
    ensure_finite(state.v, "v")?;
    ensure_finite(state.i, "i")?;
    ensure_finite(u, "u")?;
    Ok(rhs(state.v, state.i, u, params, model))
}

#[inline(always)]
fn rhs(v: f64, i: f64, u: f64, p: &CircuitParams, m: &MemristorIV) -> (f64, f64) {
    ((i - p.g_n * v - m.current_unchecked(v)) / p.c, (u - i * p.r - v) / p.l)
}

/// Something that can be sampled as a drive level.
pub trait Drive {
    fn level(&self, t: f64) -> Result<f64>;
}

impl Drive for Waveform {
    fn level(&self, t: f64) -> Result<f64> {
        self.value(t)
    }
}

impl<F: Fn(f64) -> f64> Drive for F {
    fn level(&self, t: f64) -> Result<f64> {
        Ok(self(t))
    }
}

/// One classical RK4 step sampling the drive at `t`, `t + dt/2`, `t + dt`.
pub fn step_rk4<D: Drive + ?Sized>(
    state: &CircuitState,
    t: f64,
    dt: f64,
    drive: &D,
    params: &CircuitParams,
    model: &MemristorIV,
) -> Result<CircuitState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    let u0 = drive.level(t)?;
    let um = drive.level(t + 0.5 * dt)?;
    let u1 = drive.level(t + dt)?;
    let next = rk4(state.v, state.i, [u0, um, u1], dt, params, model);
    next.check(t + dt)?;
    Ok(next)
}

#[inline(always)]
fn rk4(v: f64, i: f64, u: [f64; 3], dt: f64, p: &CircuitParams, m: &MemristorIV) -> CircuitState {
    let h = 0.5 * dt;
    let (k1v, k1i) = rhs(v, i, u[0], p, m);
    let (k2v, k2i) = rhs(v + h * k1v, i + h * k1i, u[1], p, m);
    let (k3v, k3i) = rhs(v + h * k2v, i + h * k2i, u[1], p, m);
    let (k4v, k4i) = rhs(v + dt * k3v, i + dt * k3i, u[2], p, m);
    CircuitState {
        v: v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        i: i + dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i),
    }
}

/// Uniform-grid time series of drive, output voltage and inductor current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub i: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    pub fn final_state(&self) -> CircuitState {
        let n = self.len() - 1;
        CircuitState::new(self.v[n], self.i[n])
    }

    /// Checks equal lengths ≥ 2 and a constant step.
    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if n < 2 || self.u.len() != n || self.v.len() != n || self.i.len() != n {
            return Err(Error::Shape("trajectory columns must share a length >= 2".into()));
        }
        let dt = self.dt();
        if !(dt > 0.0) {
            return Err(Error::Shape("time must increase".into()));
        }
        for (k, &t) in self.t.iter().enumerate() {
            let expect = self.t[0] + k as f64 * dt;
            if ((t - expect) / dt).abs() > 1e-6 {
                return Err(Error::Shape(format!("non-uniform grid at index {k}")));
            }
        }
        Ok(())
    }
}

/// Integrates the circuit across `drive` from `init` with step `dt`.
///
/// `dt` must divide every segment duration and square half-period; each
/// step then sees a constant drive level and no step straddles a jump.
pub fn simulate(
    drive: &Waveform,
    params: &CircuitParams,
    model: &MemristorIV,
    init: CircuitState,
    dt: f64,
) -> Result<Trajectory> {
    let levels = drive.discretize(dt)?;
    if levels.is_empty() {
        return Err(invalid("drive", "waveform is empty"));
    }
    ensure_finite(init.v, "initial v")?;
    ensure_finite(init.i, "initial i")?;
    let n = levels.len();
    let mut traj = Trajectory {
        t: Vec::with_capacity(n + 1),
        u: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        i: Vec::with_capacity(n + 1),
    };
    let mut s = init;
    traj.t.push(0.0);
    traj.u.push(levels[0]);
    traj.v.push(s.v);
    traj.i.push(s.i);
    for (k, &u) in levels.iter().enumerate() {
        s = rk4(s.v, s.i, [u; 3], dt, params, model);
        let t = (k + 1) as f64 * dt;
        s.check(t)?;
        traj.t.push(t);
        traj.u.push(levels[(k + 1).min(n - 1)]);
        traj.v.push(s.v);
        traj.i.push(s.i);
    }
    Ok(traj)
}

/// Final state only; avoids storing the trajectory.
pub fn integrate_final(
    drive: &Waveform,
    params: &CircuitParams,
    model: &MemristorIV,
    init: CircuitState,
    dt: f64,
) -> Result<CircuitState> {
    let levels = drive.discretize(dt)?;
    let mut s = init;
    for (k, &u) in levels.iter().enumerate() {
        s = rk4(s.v, s.i, [u; 3], dt, params, model);
        s.check((k + 1) as f64 * dt)?;
    }
    Ok(s)
}

/// Output voltage at the given step indices (0 is the initial state), which
/// must be ascending and within the drive. Equivalent to indexing
/// `simulate(..).v` without storing the trajectory.
pub fn sample_voltage(
    drive: &Waveform,
    params: &CircuitParams,
    model: &MemristorIV,
    init: CircuitState,
    dt: f64,
    at: &[usize],
) -> Result<Vec<f64>> {
    let levels = drive.discretize(dt)?;
    if at.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("at", "sample indices must be ascending"));
    }
    if let Some(&last) = at.last() {
        if last > levels.len() {
            return Err(Error::Shape(format!(
                "sample index {last} beyond {} steps",
                levels.len()
            )));
        }
    }
    ensure_finite(init.v, "initial v")?;
    ensure_finite(init.i, "initial i")?;
    let mut out = Vec::with_capacity(at.len());
    let mut next = at.iter().peekable();
    let mut s = init;
    let mut k = 0;
    loop {
        while next.next_if(|&&idx| idx == k).is_some() {
            out.push(s.v);
        }
        if next.peek().is_none() {
            break;
        }
        s = rk4(s.v, s.i, [levels[k]; 3], dt, params, model);
        k += 1;
        s.check(k as f64 * dt)?;
    }
    Ok(out)
}

/// Applies the ±0.2 V initialization pulse from rest, lets the circuit settle
/// with zero drive, and returns the resulting state.
pub fn initialize_state(polarity: i8, params: &CircuitParams, model: &MemristorIV) -> Result<CircuitState> {
    let sign = polarity_sign(polarity)?;
    if equilibria(params, model)?.len() < 3 {
        return Err(Error::Initialization(
            "circuit has a single equilibrium; no polarity can be selected".into(),
        ));
    }
    let s = integrate_final(&init_prefix(polarity)?, params, model, CircuitState::ORIGIN, INIT_DT)?;
    if s.v * sign <= 0.0 {
        return Err(Error::Initialization(format!(
            "settled at v = {:e} V, wrong sign for polarity {polarity}",
            s.v
        )));
    }
    Ok(s)
}
