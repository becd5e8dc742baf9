//! Experiment configuration: one TOML (or JSON) file per run.

use std::path::{Path, PathBuf};

use memchaos_core::analysis::SweepConfig;
use memchaos_core::circuit::{size_circuit, REFERENCE_C, REFERENCE_G_MAX, REFERENCE_K};
use memchaos_core::crosspoint::{DeviceProgramModel, PVConfig};
use memchaos_core::experiment::linspace;
use memchaos_core::memristor::DEFAULT_RHO;
use memchaos_core::signal::PAPER_2BIT_AMPLITUDES;
use memchaos_core::{
    AcquisitionConfig, AmplitudeTable, BoolFn, CircuitParams, Error, MemristorIV, Method, StreamConfig, TrainConfig,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; overrides the acquisition, split and programming seeds.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub memristor: MemristorSection,
    pub circuit: CircuitSection,
    pub signal: SignalSection,
    pub stream: StreamConfig,
    pub acquisition: AcquisitionConfig,
    pub train: TrainConfig,
    pub sweep: SweepSection,
    /// Memristor low-voltage resistances to run the tasks at. Empty means
    /// just `memristor.r_low_voltage`.
    pub states: Vec<f64>,
    pub static_task: StaticTask,
    pub stream_task: StreamTask,
    pub crosspoint: CrosspointSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemristorSection {
    pub r_low_voltage: f64,
    pub rho: f64,
}

impl Default for MemristorSection {
    fn default() -> Self {
        Self {
            r_low_voltage: 465e3,
            rho: DEFAULT_RHO,
        }
    }
}

/// Either sized from `(c, k, g_max)` or given explicitly with `r`, `l`, `g_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    pub c: f64,
    pub k: f64,
    pub g_max: f64,
    pub r: Option<f64>,
    pub l: Option<f64>,
    pub g_n: Option<f64>,
}

impl Default for CircuitSection {
    fn default() -> Self {
        Self {
            c: REFERENCE_C,
            k: REFERENCE_K,
            g_max: REFERENCE_G_MAX,
            r: None,
            l: None,
            g_n: None,
        }
    }
}

/// Static amplitude table: explicit levels, or evenly spaced from `u_min`
/// to `u_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    pub n_bits: usize,
    pub amplitudes: Option<Vec<f64>>,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            n_bits: 2,
            amplitudes: Some(PAPER_2BIT_AMPLITUDES.to_vec()),
            u_min: None,
            u_max: None,
        }
    }
}

impl SignalSection {
    pub fn table(&self) -> Result<AmplitudeTable, Error> {
        match (&self.amplitudes, self.u_min, self.u_max) {
            (Some(a), None, None) => AmplitudeTable::explicit(self.n_bits, a.clone()),
            (None, Some(lo), Some(hi)) => AmplitudeTable::linear(self.n_bits, lo, hi),
            _ => Err(user("signal: give either `amplitudes` or both `u_min` and `u_max`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub amplitudes: Option<Vec<f64>>,
    pub range: Option<Range>,
    pub analysis: SweepConfig,
}

impl SweepSection {
    pub fn amplitudes(&self) -> Result<Vec<f64>, Error> {
        let a = match (&self.amplitudes, &self.range) {
            (Some(a), None) => a.clone(),
            (None, Some(r)) => linspace(r.start, r.stop, r.count),
            (None, None) => return Err(user("sweep: no amplitudes given")),
            (Some(_), Some(_)) => return Err(user("sweep: give either `amplitudes` or `range`, not both")),
        };
        if a.is_empty() {
            return Err(user("sweep: amplitude list is empty"));
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticTask {
    pub functions: Vec<BoolFn>,
    pub methods: Vec<Method>,
    /// Also train on the drive amplitude alone, bypassing the reservoir.
    pub ablation: bool,
    /// Weight counts for the pruning curve; empty disables it.
    pub pruning: Vec<usize>,
    pub tune: Option<StaticTune>,
    pub readout: Option<ReadoutExport>,
    pub write_datasets: bool,
}

impl Default for StaticTask {
    fn default() -> Self {
        Self {
            functions: vec![BoolFn::Xor],
            methods: vec![Method::Ridge],
            ablation: false,
            pruning: Vec::new(),
            tune: None,
            readout: None,
            write_datasets: false,
        }
    }
}

/// Grid searched before the static task; the best candidate per function
/// replaces `states`, `memristor.rho` and the amplitude table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticTune {
    pub states: Vec<f64>,
    pub rhos: Vec<f64>,
    pub tables: Vec<Vec<f64>>,
}

/// Pruned readout persisted for the crosspoint command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutExport {
    pub keep: usize,
    /// Non-negative refit; walks `states` for the first one whose readout
    /// keeps all `keep` weights positive.
    pub positive: bool,
    pub min_val_acc: f64,
}

impl Default for ReadoutExport {
    fn default() -> Self {
        Self {
            keep: 4,
            positive: true,
            min_val_acc: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: BoolFn,
    pub inputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamTask {
    pub functions: Vec<FunctionSpec>,
    /// Fraction of streams used for training; replaces `train.split` here.
    pub split: f64,
    pub traces: bool,
    /// Lags for the fading-memory profile; 0 disables it.
    pub memory_lags: usize,
    pub tune: Option<StreamTune>,
}

impl Default for StreamTask {
    fn default() -> Self {
        Self {
            functions: (2..=4)
                .map(|inputs| FunctionSpec {
                    name: BoolFn::Xor,
                    inputs,
                })
                .collect(),
            split: 0.5,
            traces: true,
            memory_lags: 0,
            tune: None,
        }
    }
}

/// Grid of stream configurations scored on 2-, 3- and 4-input parity. The
/// winner replaces `states`, `memristor.rho` and the stream levels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamTune {
    pub states: Vec<f64>,
    pub rhos: Vec<f64>,
    /// `[u_low, u_high]` pairs.
    pub levels: Vec<[f64; 2]>,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrosspointSection {
    pub device: DeviceProgramModel,
    pub pv: PVConfig,
    /// Independent programming runs of the column.
    pub trials: usize,
}

impl Default for CrosspointSection {
    fn default() -> Self {
        Self {
            device: DeviceProgramModel::default(),
            pv: PVConfig::default(),
            trials: 1,
        }
    }
}

pub(crate) fn user(msg: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: "config",
        reason: msg.into(),
    }
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| user(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| user(format!("{}: {e}", path.display())))
        }
    }

    /// Pushes the master seed into every seeded component.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.acquisition.rng_seed = s;
            self.train.split_seed = s;
        }
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.acquisition.rng_seed)
    }

    pub fn circuit(&self) -> Result<CircuitParams, Error> {
        let c = &self.circuit;
        match (c.r, c.l, c.g_n) {
            (None, None, None) => size_circuit(c.g_max, c.k, c.c),
            (Some(r), Some(l), Some(g_n)) => CircuitParams::new(c.c, r, l, g_n),
            _ => Err(user("circuit: `r`, `l` and `g_n` must be given together")),
        }
    }

    pub fn model(&self) -> Result<MemristorIV, Error> {
        MemristorIV::from_resistance(self.memristor.r_low_voltage, self.memristor.rho)
    }

    pub fn states(&self) -> Vec<f64> {
        if self.states.is_empty() {
            vec![self.memristor.r_low_voltage]
        } else {
            self.states.clone()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.circuit()?;
        self.model()?;
        self.acquisition.validate()?;
        self.train.validate()?;
        self.stream.validate()?;
        self.crosspoint.device.validate()?;
        for &r in &self.states {
            MemristorIV::from_resistance(r, self.memristor.rho)?;
        }
        Ok(())
    }
}
