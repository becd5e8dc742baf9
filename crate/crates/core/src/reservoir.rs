//! Reservoir experiments: drive the circuit with encoded inputs, sample the
//! output voltage as features and attach Boolean targets.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{initialize_state, sample_voltage, CircuitParams, CircuitState, STEPS_PER_PERIOD};
use crate::error::{invalid, Error, Result};
use crate::memristor::MemristorIV;
use crate::rng;
use crate::signal::{
    encode_stream, index_word, square_wave, AmplitudeTable, DEFAULT_PERIOD, DEFAULT_STREAM_OFFSET, DEFAULT_U_HIGH,
    DEFAULT_U_LOW,
};

const STATIC_STREAM_TAG: u64 = 0x5354_4154;
const STREAM_STREAM_TAG: u64 = 0x5354_524d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BoolFn {
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Xnor,
    NotAAndB,
    AAndNotB,
    Maj,
    Mux,
    XorAnd,
    AndXor,
}

impl BoolFn {
    pub const ALL: [BoolFn; 12] = [
        BoolFn::And,
        BoolFn::Or,
        BoolFn::Xor,
        BoolFn::Nand,
        BoolFn::Nor,
        BoolFn::Xnor,
        BoolFn::NotAAndB,
        BoolFn::AAndNotB,
        BoolFn::Maj,
        BoolFn::Mux,
        BoolFn::XorAnd,
        BoolFn::AndXor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoolFn::And => "AND",
            BoolFn::Or => "OR",
            BoolFn::Xor => "XOR",
            BoolFn::Nand => "NAND",
            BoolFn::Nor => "NOR",
            BoolFn::Xnor => "XNOR",
            BoolFn::NotAAndB => "NOT_A_AND_B",
            BoolFn::AAndNotB => "A_AND_NOT_B",
            BoolFn::Maj => "MAJ",
            BoolFn::Mux => "MUX",
            BoolFn::XorAnd => "XORAND",
            BoolFn::AndXor => "ANDXOR",
        }
    }

    /// Whether the function accepts `n` inputs.
    pub fn accepts(&self, n: usize) -> bool {
        match self {
            BoolFn::And | BoolFn::Or | BoolFn::Xor | BoolFn::Nand | BoolFn::Nor | BoolFn::Xnor => n >= 2,
            BoolFn::Maj => n >= 3 && n % 2 == 1,
            BoolFn::NotAAndB | BoolFn::AAndNotB => n == 2,
            BoolFn::Mux | BoolFn::XorAnd | BoolFn::AndXor => n == 3,
        }
    }

    fn arity_text(&self) -> &'static str {
        match self {
            BoolFn::Maj => "an odd count >= 3",
            BoolFn::NotAAndB | BoolFn::AAndNotB => "2",
            BoolFn::Mux | BoolFn::XorAnd | BoolFn::AndXor => "3",
            _ => ">= 2",
        }
    }

    pub fn check_arity(&self, n: usize) -> Result<()> {
        if self.accepts(n) {
            Ok(())
        } else {
            Err(Error::Arity {
                name: self.name().into(),
                expected: self.arity_text().into(),
                got: n,
            })
        }
    }

    /// Evaluates on 0/1 bits, first bit = input `a`.
    pub fn eval(&self, bits: &[u8]) -> Result<u8> {
        self.check_arity(bits.len())?;
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(invalid("bits", format!("bit value {b} is not 0/1")));
        }
        let ones = bits.iter().filter(|&&b| b == 1).count();
        let all = ones == bits.len();
        let any = ones > 0;
        let parity = (ones % 2) as u8;
        let out = match self {
            BoolFn::And => all as u8,
            BoolFn::Or => any as u8,
            BoolFn::Xor => parity,
            BoolFn::Nand => !all as u8,
            BoolFn::Nor => !any as u8,
            BoolFn::Xnor => 1 - parity,
            BoolFn::NotAAndB => (bits[0] == 0 && bits[1] == 1) as u8,
            BoolFn::AAndNotB => (bits[0] == 1 && bits[1] == 0) as u8,
            BoolFn::Maj => (2 * ones > bits.len()) as u8,
            BoolFn::Mux => {
                if bits[0] == 0 {
                    bits[1]
                } else {
                    bits[2]
                }
            }
            BoolFn::XorAnd => (bits[0] ^ bits[1]) & bits[2],
            BoolFn::AndXor => (bits[0] & bits[1]) ^ bits[2],
        };
        Ok(out)
    }

    /// Truth table indexed by big-endian word index.
    pub fn truth_table(&self, n: usize) -> Result<Vec<u8>> {
        self.check_arity(n)?;
        (0..1usize << n).map(|w| self.eval(&index_word(w, n))).collect()
    }
}

impl fmt::Display for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoolFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        BoolFn::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

impl TryFrom<String> for BoolFn {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BoolFn> for String {
    fn from(f: BoolFn) -> String {
        f.name().to_string()
    }
}

pub fn boolean_eval(name: &str, bits: &[u8]) -> Result<u8> {
    name.parse::<BoolFn>()?.eval(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub samples_per_trace: usize,
    pub samples_per_period: usize,
    pub periods_per_trace: usize,
    pub transient_discard_periods: usize,
    pub init_noise_sigma: f64,
    pub meas_noise_sigma: f64,
    pub repetitions: usize,
    pub rng_seed: u64,
    /// Drive period of static traces.
    pub drive_period: f64,
    /// Offset of static traces.
    pub offset: f64,
    pub steps_per_period: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            samples_per_trace: 1000,
            samples_per_period: 50,
            periods_per_trace: 20,
            transient_discard_periods: 2,
            init_noise_sigma: 1e-3,
            meas_noise_sigma: 2e-3,
            repetitions: 50,
            rng_seed: 0,
            drive_period: DEFAULT_PERIOD,
            offset: 0.0,
            steps_per_period: STEPS_PER_PERIOD,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("samples_per_trace", self.samples_per_trace),
            ("samples_per_period", self.samples_per_period),
            ("periods_per_trace", self.periods_per_trace),
            ("repetitions", self.repetitions),
            ("steps_per_period", self.steps_per_period),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, c)| *c == 0) {
            return Err(invalid(name, "must be >= 1"));
        }
        for (name, s) in [
            ("init_noise_sigma", self.init_noise_sigma),
            ("meas_noise_sigma", self.meas_noise_sigma),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if !self.steps_per_period.is_multiple_of(2) {
            return Err(invalid("steps_per_period", "must be even so each half-period is whole"));
        }
        if !(self.drive_period > 0.0) || !self.offset.is_finite() {
            return Err(invalid("drive_period/offset", "period must be > 0, offset finite"));
        }
        if self.samples_per_trace > self.periods_per_trace * self.steps_per_period {
            return Err(invalid("samples_per_trace", "more samples than integration steps"));
        }
        if self.samples_per_period > self.steps_per_period {
            return Err(invalid("samples_per_period", "more samples than steps per period"));
        }
        Ok(())
    }

    fn dt(&self) -> f64 {
        self.drive_period / self.steps_per_period as f64
    }
}

/// `count` evenly spaced step indices in `[0, steps)`.
fn uniform_indices(count: usize, steps: usize) -> Vec<usize> {
    (0..count).map(|j| j * steps / count).collect()
}

fn perturbed(init: CircuitState, sigma: f64, rng: &mut impl rand::Rng) -> CircuitState {
    CircuitState::new(init.v + rng::gaussian(rng, sigma), init.i)
}

fn add_noise(values: &mut [f64], sigma: f64, rng: &mut impl rand::Rng) {
    for x in values {
        *x += rng::gaussian(rng, sigma);
    }
}

fn static_trial_from(
    amplitude: f64,
    init: CircuitState,
    params: &CircuitParams,
    model: &MemristorIV,
    acq: &AcquisitionConfig,
    rng: &mut impl rand::Rng,
) -> Result<Vec<f64>> {
    let start = perturbed(init, acq.init_noise_sigma, rng);
    let drive = square_wave(amplitude, acq.offset, acq.drive_period, acq.periods_per_trace)?;
    let steps = acq.periods_per_trace * acq.steps_per_period;
    let at = uniform_indices(acq.samples_per_trace, steps);
    let mut v = sample_voltage(&drive, params, model, start, acq.dt(), &at)?;
    add_noise(&mut v, acq.meas_noise_sigma, rng);
    Ok(v)
}

/// One static trace: the circuit is initialized with a positive pulse, its
/// voltage perturbed by the init noise, then driven for `periods_per_trace`
/// periods at the word's amplitude. The data segment is sampled uniformly.
pub fn run_static_trial(
    word: &[u8],
    table: &AmplitudeTable,
    params: &CircuitParams,
    model: &MemristorIV,
    acq: &AcquisitionConfig,
    rng: &mut impl rand::Rng,
) -> Result<Vec<f64>> {
    acq.validate()?;
    let amplitude = table.encode_word(word)?;
    let init = initialize_state(1, params, model)?;
    static_trial_from(amplitude, init, params, model, acq, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticDataset {
    pub function: BoolFn,
    pub n_bits: usize,
    /// Memristor low-voltage resistance the traces were taken at.
    pub state_tag: f64,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    /// Big-endian word index of each row.
    pub words: Vec<usize>,
}

impl StaticDataset {
    pub fn rows(&self) -> usize {
        self.features.len()
    }

    pub fn columns(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Same rows with the features replaced by the drive amplitude alone.
    pub fn amplitude_only(&self, table: &AmplitudeTable) -> StaticDataset {
        StaticDataset {
            features: self.words.iter().map(|&w| vec![table.amplitude_of_index(w)]).collect(),
            ..self.clone()
        }
    }
}

/// `repetitions` traces per input word, rows ordered by word then repetition.
/// Each trial draws from its own seed stream so the result does not depend
/// on scheduling.
pub fn build_static_dataset(
    function: BoolFn,
    n_bits: usize,
    table: &AmplitudeTable,
    params: &CircuitParams,
    model: &MemristorIV,
    acq: &AcquisitionConfig,
) -> Result<StaticDataset> {
    function.check_arity(n_bits)?;
    if table.n_bits() != n_bits {
        return Err(Error::Shape(format!(
            "amplitude table encodes {} bits, function takes {n_bits}",
            table.n_bits()
        )));
    }
    acq.validate()?;
    let truth = function.truth_table(n_bits)?;
    let init = initialize_state(1, params, model)?;
    let reps = acq.repetitions;
    let features = (0..table.words() * reps)
        .into_par_iter()
        .map(|row| {
            let (w, k) = (row / reps, row % reps);
            let mut r = rng::stream(acq.rng_seed, &[STATIC_STREAM_TAG, w as u64, k as u64]);
            static_trial_from(table.amplitude_of_index(w), init, params, model, acq, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let words: Vec<usize> = (0..features.len()).map(|row| row / reps).collect();
    Ok(StaticDataset {
        function,
        n_bits,
        state_tag: model.state.r_low_voltage(),
        labels: words.iter().map(|&w| truth[w]).collect(),
        words,
        features,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamConfig {
    pub u_low: f64,
    pub u_high: f64,
    pub offset: f64,
    pub period: f64,
    pub stream_length: usize,
    pub n_streams: usize,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            u_low: DEFAULT_U_LOW,
            u_high: DEFAULT_U_HIGH,
            offset: DEFAULT_STREAM_OFFSET,
            period: DEFAULT_PERIOD,
            stream_length: 30,
            n_streams: 20,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_low >= 0.0 && self.u_high >= 0.0) || !self.offset.is_finite() {
            return Err(invalid("u_low/u_high", "amplitudes must be >= 0"));
        }
        if !(self.period > 0.0) {
            return Err(invalid("period", "must be > 0"));
        }
        if self.stream_length == 0 || self.n_streams == 0 {
            return Err(invalid("stream_length/n_streams", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-period feature blocks of one driven bit stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamDataset {
    pub bits: Vec<u8>,
    pub blocks: Vec<Vec<f64>>,
}

impl StreamDataset {
    pub fn labels(&self, function: BoolFn, n: usize) -> Result<Vec<Option<u8>>> {
        sliding_targets(&self.bits, function, n)
    }
}

fn stream_trial_from(
    bits: &[u8],
    init: CircuitState,
    params: &CircuitParams,
    model: &MemristorIV,
    acq: &AcquisitionConfig,
    cfg: &StreamConfig,
    rng: &mut impl rand::Rng,
) -> Result<StreamDataset> {
    let start = perturbed(init, acq.init_noise_sigma, rng);
    let drive = encode_stream(bits, cfg.u_low, cfg.u_high, cfg.offset, cfg.period)?;
    let spp = acq.steps_per_period;
    let within = uniform_indices(acq.samples_per_period, spp);
    let at: Vec<usize> = (0..bits.len())
        .flat_map(|p| within.iter().map(move |&j| p * spp + j))
        .collect();
    let mut v = sample_voltage(&drive, params, model, start, cfg.period / spp as f64, &at)?;
    add_noise(&mut v, acq.meas_noise_sigma, rng);
    Ok(StreamDataset {
        bits: bits.to_vec(),
        blocks: v.chunks(acq.samples_per_period).map(<[f64]>::to_vec).collect(),
    })
}

/// Drives the circuit with one period per bit (after a positive
/// initialization) and slices the response into per-period blocks.
pub fn run_stream_trial(
    bits: &[u8],
    params: &CircuitParams,
    model: &MemristorIV,
    acq: &AcquisitionConfig,
    cfg: &StreamConfig,
    rng: &mut impl rand::Rng,
) -> Result<StreamDataset> {
    acq.validate()?;
    cfg.validate()?;
    let init = initialize_state(1, params, model)?;
    stream_trial_from(bits, init, params, model, acq, cfg, rng)
}

/// `n_streams` random bit streams, each run with its own seed stream.
pub fn build_stream_set(
    params: &CircuitParams,
    model: &MemristorIV,
    acq: &AcquisitionConfig,
    cfg: &StreamConfig,
) -> Result<Vec<StreamDataset>> {
    acq.validate()?;
    cfg.validate()?;
    let init = initialize_state(1, params, model)?;
    (0..cfg.n_streams)
        .into_par_iter()
        .map(|s| {
            let mut r = rng::stream(acq.rng_seed, &[STREAM_STREAM_TAG, s as u64]);
            let bits: Vec<u8> = (0..cfg.stream_length).map(|_| r.random_range(0..2u8)).collect();
            stream_trial_from(&bits, init, params, model, acq, cfg, &mut r)
        })
        .collect()
}

/// `label[i] = f(bits[i-n+1 ..= i])`; `None` for the first `n-1` periods.
pub fn sliding_targets(bits: &[u8], function: BoolFn, n: usize) -> Result<Vec<Option<u8>>> {
    function.check_arity(n)?;
    if bits.len() < n {
        return Err(invalid(
            "bits",
            format!("stream of {} bits is shorter than the {n}-input window", bits.len()),
        ));
    }
    let mut out = vec![None; n - 1];
    for w in bits.windows(n) {
        out.push(Some(function.eval(w)?));
    }
    Ok(out)
}

/// Training rows assembled from several streams.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRows {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    /// Index of the source stream of each row.
    pub stream: Vec<usize>,
    /// Period index within the source stream.
    pub period: Vec<usize>,
}

/// Rows for every period that has a defined label and lies past the
/// transient discard.
pub fn stream_rows(streams: &[StreamDataset], function: BoolFn, n: usize, discard: usize) -> Result<StreamRows> {
    let mut rows = StreamRows {
        features: Vec::new(),
        labels: Vec::new(),
        stream: Vec::new(),
        period: Vec::new(),
    };
    for (s, ds) in streams.iter().enumerate() {
        let labels = ds.labels(function, n)?;
        for (p, label) in labels.iter().enumerate().skip(discard) {
            if let Some(l) = label {
                rows.features.push(ds.blocks[p].clone());
                rows.labels.push(*l);
                rows.stream.push(s);
                rows.period.push(p);
            }
        }
    }
    Ok(rows)
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Memory profile: for each lag `k` in `0..=max_lag`, the largest absolute
/// correlation between any feature column of period `p` and the bit at
/// period `p - k`, over all streams and periods past `discard`.
pub fn memory_profile(streams: &[StreamDataset], max_lag: usize, discard: usize) -> Result<Vec<f64>> {
    let first = discard.max(max_lag);
    let columns = streams.first().and_then(|s| s.blocks.first()).map_or(0, Vec::len);
    if columns == 0 || streams.iter().all(|s| s.blocks.len() <= first) {
        return Err(Error::Degenerate("streams too short for the requested lag".into()));
    }
    (0..=max_lag)
        .map(|lag| {
            let mut bits = Vec::new();
            let mut cols = vec![Vec::new(); columns];
            for s in streams {
                for p in first..s.blocks.len() {
                    bits.push(s.bits[p - lag] as f64);
                    for (c, col) in cols.iter_mut().enumerate() {
                        col.push(s.blocks[p][c]);
                    }
                }
            }
            Ok(cols.iter().map(|col| pearson(col, &bits).abs()).fold(0.0, f64::max))
        })
        .collect()
}
