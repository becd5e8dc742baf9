//! Single memristor crosspoint column computing a pruned readout's weighted
//! sum as a current, with program-and-verify conductance tuning.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::readout::LinearReadout;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceProgramModel {
    /// Conductance per unit compliance current, S/A.
    pub alpha: f64,
    /// Relative programming noise, redrawn on every SET pulse.
    pub sigma_prog: f64,
    /// Relative noise of the verify read.
    pub sigma_read: f64,
    pub g_min: f64,
    pub g_max: f64,
}

impl Default for DeviceProgramModel {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            sigma_prog: 0.05,
            sigma_read: 0.01,
            g_min: 1e-6,
            g_max: 100e-6,
        }
    }
}

impl DeviceProgramModel {
    pub fn noiseless(self) -> Self {
        Self {
            sigma_prog: 0.0,
            sigma_read: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", "must be > 0"));
        }
        if !(self.sigma_prog >= 0.0 && self.sigma_read >= 0.0)
            || !self.sigma_prog.is_finite()
            || !self.sigma_read.is_finite()
        {
            return Err(invalid("sigma_prog/sigma_read", "must be finite and >= 0"));
        }
        if !(self.g_min > 0.0 && self.g_min < self.g_max) || !self.g_max.is_finite() {
            return Err(invalid("g_min/g_max", "need 0 < g_min < g_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PVConfig {
    pub i_cc0: f64,
    pub delta_icc: f64,
    pub g_th_fraction: f64,
    pub max_iters: usize,
}

impl Default for PVConfig {
    fn default() -> Self {
        Self {
            i_cc0: 5e-6,
            delta_icc: 1e-6,
            g_th_fraction: 0.95,
            max_iters: 10_000,
        }
    }
}

impl PVConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_cc0 > 0.0 && self.delta_icc > 0.0) || !self.i_cc0.is_finite() || !self.delta_icc.is_finite() {
            return Err(invalid("i_cc0/delta_icc", "must be > 0"));
        }
        if !(self.g_th_fraction > 0.0 && self.g_th_fraction <= 1.0) {
            return Err(invalid("g_th_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Target conductances for the surviving features of a readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMapping {
    pub targets: Vec<f64>,
    pub i_th: f64,
    /// Siemens per weight unit.
    pub weight_scale: f64,
    pub feature_indices: Vec<usize>,
}

/// Scales the surviving weights so the largest lands on `g_max`; the bias
/// becomes the threshold current `i_th = −s·b`, so that
/// `Σ G_j x_j ≥ i_th` exactly when `w·x + b ≥ 0`.
pub fn map_weights(readout: &LinearReadout, dev: &DeviceProgramModel) -> Result<WeightMapping> {
    dev.validate()?;
    let feature_indices = readout.active_indices();
    if feature_indices.is_empty() {
        return Err(Error::UnsupportedMapping("readout has no surviving weights".into()));
    }
    let w: Vec<f64> = feature_indices.iter().map(|&j| readout.weights[j]).collect();
    if let Some((k, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::UnsupportedMapping(format!(
            "weight {v} on feature {} is not positive; a single column only encodes positive \
             weights (retrain with nonnegative = true, or use a differential G+/G- pair)",
            feature_indices[k]
        )));
    }
    let w_max = w.iter().cloned().fold(0.0, f64::max);
    let s = dev.g_max / w_max;
    // The largest weight maps to g_max exactly, not s·w_max (which can round up).
    let targets: Vec<f64> = w
        .iter()
        .map(|&v| if v == w_max { dev.g_max } else { (s * v).min(dev.g_max) })
        .collect();
    if let Some(g) = targets.iter().find(|&&g| g < dev.g_min) {
        return Err(Error::UnsupportedMapping(format!(
            "scaled conductance {g:e} S is below g_min = {:e} S",
            dev.g_min
        )));
    }
    Ok(WeightMapping {
        targets,
        i_th: -s * readout.bias,
        weight_scale: s,
        feature_indices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgramStep {
    pub iteration: usize,
    pub i_cc: f64,
    pub g_true: f64,
    pub g_read: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramOutcome {
    pub target: f64,
    pub achieved: f64,
    /// Number of compliance increments applied.
    pub iterations: usize,
    pub relative_error: f64,
    pub trace: Vec<ProgramStep>,
}

/// SET pulses at compliance `i_cc0 + k·ΔI` until the verify read reaches
/// `g_th_fraction · target`. The device saturates at `[g_min, g_max]`.
pub fn program_and_verify(
    target: f64,
    dev: &DeviceProgramModel,
    pv: &PVConfig,
    rng: &mut impl rand::Rng,
) -> Result<ProgramOutcome> {
    dev.validate()?;
    pv.validate()?;
    if !(target > 0.0 && target <= dev.g_max) {
        return Err(invalid("target", format!("{target:e} S not in (0, g_max]")));
    }
    let threshold = pv.g_th_fraction * target;
    let mut trace = Vec::new();
    for k in 0..=pv.max_iters {
        let i_cc = pv.i_cc0 + k as f64 * pv.delta_icc;
        let g_true = (dev.alpha * i_cc * (1.0 + rng::gaussian(rng, dev.sigma_prog))).clamp(dev.g_min, dev.g_max);
        let g_read = g_true * (1.0 + rng::gaussian(rng, dev.sigma_read));
        trace.push(ProgramStep {
            iteration: k,
            i_cc,
            g_true,
            g_read,
        });
        if g_read >= threshold {
            return Ok(ProgramOutcome {
                target,
                achieved: g_true,
                iterations: k,
                relative_error: (g_true - target).abs() / target,
                trace,
            });
        }
    }
    Err(Error::ProgrammingFailure {
        target,
        max_iters: pv.max_iters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosspointColumn {
    pub conductances: Vec<f64>,
    pub i_th: f64,
    pub weight_scale: f64,
    pub feature_indices: Vec<usize>,
}

impl CrosspointColumn {
    /// Column holding exactly the target conductances.
    pub fn ideal(m: &WeightMapping) -> Self {
        Self {
            conductances: m.targets.clone(),
            i_th: m.i_th,
            weight_scale: m.weight_scale,
            feature_indices: m.feature_indices.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.conductances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conductances.is_empty()
    }

    /// Picks this column's inputs out of a full feature row.
    pub fn inputs(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.feature_indices
            .iter()
            .map(|&j| {
                row.get(j)
                    .copied()
                    .ok_or_else(|| Error::Shape(format!("row has {} features, column reads {j}", row.len())))
            })
            .collect()
    }
}

/// Programs every device of the mapping, each from its own seed stream.
pub fn program_column(
    mapping: &WeightMapping,
    dev: &DeviceProgramModel,
    pv: &PVConfig,
    seed: u64,
) -> Result<(CrosspointColumn, Vec<ProgramOutcome>)> {
    let outcomes = mapping
        .targets
        .iter()
        .enumerate()
        .map(|(k, &g)| program_and_verify(g, dev, pv, &mut rng::stream(seed, &[0x5850, k as u64])))
        .collect::<Result<Vec<_>>>()?;
    let column = CrosspointColumn {
        conductances: outcomes.iter().map(|o| o.achieved).collect(),
        ..CrosspointColumn::ideal(mapping)
    };
    Ok((column, outcomes))
}

/// Output current `Σ G_j x_j` and the thresholded class.
pub fn mac_infer(column: &CrosspointColumn, x: &[f64]) -> Result<(f64, u8)> {
    if x.len() != column.len() {
        return Err(Error::Shape(format!(
            "{} inputs for a column of {} devices",
            x.len(),
            column.len()
        )));
    }
    let i_out: f64 = column.conductances.iter().zip(x).map(|(g, v)| g * v).sum();
    Ok((i_out, (i_out >= column.i_th) as u8))
}

/// Fraction of full feature rows the column classifies as `labels` (0/1).
pub fn column_accuracy(column: &CrosspointColumn, rows: &[Vec<f64>], labels: &[u8]) -> Result<f64> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::Shape(
            "rows and labels must be nonempty and equal in length".into(),
        ));
    }
    let mut correct = 0;
    for (row, &l) in rows.iter().zip(labels) {
        if mac_infer(column, &column.inputs(row)?)?.1 == l {
            correct += 1;
        }
    }
    Ok(correct as f64 / rows.len() as f64)
}
