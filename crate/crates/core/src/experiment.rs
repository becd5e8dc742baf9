//! End-to-end task runners: static and stream classification, parameter
//! sweeps that pick a working configuration, and the crosspoint pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitParams;
use crate::crosspoint::{
    column_accuracy, map_weights, program_column, CrosspointColumn, DeviceProgramModel, PVConfig, ProgramOutcome,
    WeightMapping,
};
use crate::error::{invalid, Error, Result};
use crate::io::dataset_hash;
use crate::memristor::MemristorIV;
use crate::readout::{
    evaluate, pm1, prune_retrain, stratified_split, take_rows, train, LinearReadout, Method, Split, TrainConfig,
};
use crate::reservoir::{
    build_static_dataset, build_stream_set, stream_rows, AcquisitionConfig, BoolFn, StaticDataset, StreamConfig,
    StreamDataset,
};
use crate::signal::AmplitudeTable;

/// `count` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticEval {
    pub method: Method,
    pub train_acc: f64,
    pub val_acc: f64,
    pub readout: LinearReadout,
    pub split: Split,
}

/// Train/validation rows of a static dataset, stratified by input word.
pub fn static_split(ds: &StaticDataset, cfg: &TrainConfig) -> Result<Split> {
    stratified_split(&ds.words, cfg.split, cfg.split_seed)
}

fn rows_and_labels(ds: &StaticDataset, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    (take_rows(&ds.features, idx), pm1(&take_rows(&ds.labels, idx)))
}

pub fn evaluate_static(ds: &StaticDataset, cfg: &TrainConfig) -> Result<StaticEval> {
    let split = static_split(ds, cfg)?;
    let (xt, yt) = rows_and_labels(ds, &split.train);
    let (xv, yv) = rows_and_labels(ds, &split.val);
    let readout = train(&xt, &yt, cfg)?;
    Ok(StaticEval {
        method: cfg.method,
        train_acc: evaluate(&readout, &xt, &yt)?,
        val_acc: evaluate(&readout, &xv, &yv)?,
        readout,
        split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrunePoint {
    pub kept: usize,
    pub val_acc: f64,
}

/// Validation accuracy after pruning to each of `keeps` weights.
pub fn pruning_curve(ds: &StaticDataset, cfg: &TrainConfig, keeps: &[usize]) -> Result<Vec<PrunePoint>> {
    let split = static_split(ds, cfg)?;
    let (xt, yt) = rows_and_labels(ds, &split.train);
    let (xv, yv) = rows_and_labels(ds, &split.val);
    keeps
        .par_iter()
        .map(|&m| prune_retrain(&xt, &yt, &xv, &yv, cfg, m).map(|(_, val_acc)| PrunePoint { kept: m, val_acc }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamPrediction {
    pub stream: usize,
    pub period: usize,
    pub bit: u8,
    pub label: u8,
    pub predicted: u8,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamEval {
    pub train_acc: f64,
    pub val_acc: f64,
    pub readout: LinearReadout,
    /// Stream indices used for training / validation.
    pub split: Split,
    /// Readout output on every validation period.
    pub predictions: Vec<StreamPrediction>,
}

/// Trains an `n`-input sliding-window readout. Whole streams go to either
/// side of the split.
pub fn evaluate_stream(
    streams: &[StreamDataset],
    function: BoolFn,
    n: usize,
    discard: usize,
    cfg: &TrainConfig,
) -> Result<StreamEval> {
    if streams.len() < 2 {
        return Err(Error::Degenerate("need at least two streams to split".into()));
    }
    let split = stratified_split(&vec![0; streams.len()], cfg.split, cfg.split_seed)?;
    let rows = stream_rows(streams, function, n, discard)?;
    let side = |ids: &[usize]| -> Vec<usize> {
        (0..rows.labels.len())
            .filter(|&r| ids.binary_search(&rows.stream[r]).is_ok())
            .collect()
    };
    let (tr, va) = (side(&split.train), side(&split.val));
    if tr.is_empty() || va.is_empty() {
        return Err(Error::Degenerate("no labeled periods on one side of the split".into()));
    }
    let xt = take_rows(&rows.features, &tr);
    let yt = pm1(&take_rows(&rows.labels, &tr));
    let xv = take_rows(&rows.features, &va);
    let yv = pm1(&take_rows(&rows.labels, &va));
    let readout = train(&xt, &yt, cfg)?;
    let predictions = va
        .iter()
        .map(|&r| {
            let score = readout.score(&rows.features[r])?;
            Ok(StreamPrediction {
                stream: rows.stream[r],
                period: rows.period[r],
                bit: streams[rows.stream[r]].bits[rows.period[r]],
                label: rows.labels[r],
                predicted: (score >= 0.0) as u8,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StreamEval {
        train_acc: evaluate(&readout, &xt, &yt)?,
        val_acc: evaluate(&readout, &xv, &yv)?,
        readout,
        split,
        predictions,
    })
}

/// One point of the static search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticCandidate {
    pub r_low_voltage: f64,
    pub rho: f64,
    pub table: AmplitudeTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored<C> {
    pub candidate: C,
    pub score: f64,
}

/// Evaluates every candidate and returns them all plus the index of the
/// best (first on ties).
pub fn tune_static(
    function: BoolFn,
    candidates: &[StaticCandidate],
    params: &CircuitParams,
    acq: &AcquisitionConfig,
    cfg: &TrainConfig,
) -> Result<(usize, Vec<Scored<StaticCandidate>>)> {
    if candidates.is_empty() {
        return Err(invalid("candidates", "search space is empty"));
    }
    let scored = candidates
        .iter()
        .map(|c| {
            let model = MemristorIV::from_resistance(c.r_low_voltage, c.rho)?;
            let ds = build_static_dataset(function, c.table.n_bits(), &c.table, params, &model, acq)?;
            Ok(Scored {
                candidate: c.clone(),
                score: evaluate_static(&ds, cfg)?.val_acc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((best_index(&scored), scored))
}

fn best_index<C>(scored: &[Scored<C>]) -> usize {
    let mut best = 0;
    for (k, s) in scored.iter().enumerate() {
        if s.score > scored[best].score {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamCandidate {
    pub r_low_voltage: f64,
    pub rho: f64,
    pub u_low: f64,
    pub u_high: f64,
    pub offset: f64,
}

impl StreamCandidate {
    pub fn stream_config(&self, base: &StreamConfig) -> StreamConfig {
        StreamConfig {
            u_low: self.u_low,
            u_high: self.u_high,
            offset: self.offset,
            ..*base
        }
    }
}

/// Parity accuracies for 2, 3 and 4 inputs at one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityScores {
    pub xor2: f64,
    pub xor3: f64,
    pub xor4: f64,
}

impl ParityScores {
    /// `min(xor2, xor3)`, pushed below every ordered configuration when
    /// it does not exceed `xor4`.
    pub fn score(&self) -> f64 {
        let m = self.xor2.min(self.xor3);
        if m > self.xor4 {
            m
        } else {
            m - 1.0
        }
    }
}

pub fn parity_scores(streams: &[StreamDataset], discard: usize, cfg: &TrainConfig) -> Result<ParityScores> {
    let acc = |n| evaluate_stream(streams, BoolFn::Xor, n, discard, cfg).map(|e| e.val_acc);
    Ok(ParityScores {
        xor2: acc(2)?,
        xor3: acc(3)?,
        xor4: acc(4)?,
    })
}

/// Searches stream configurations for strong 2- and 3-input parity that
/// stays ordered above 4-input parity.
pub fn tune_stream(
    candidates: &[StreamCandidate],
    params: &CircuitParams,
    acq: &AcquisitionConfig,
    base: &StreamConfig,
    cfg: &TrainConfig,
) -> Result<(usize, Vec<Scored<StreamCandidate>>, Vec<ParityScores>)> {
    if candidates.is_empty() {
        return Err(invalid("candidates", "search space is empty"));
    }
    let results = candidates
        .iter()
        .map(|c| {
            let model = MemristorIV::from_resistance(c.r_low_voltage, c.rho)?;
            let streams = build_stream_set(params, &model, acq, &c.stream_config(base))?;
            parity_scores(&streams, acq.transient_discard_periods, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let scored: Vec<Scored<StreamCandidate>> = candidates
        .iter()
        .zip(&results)
        .map(|(c, p)| Scored {
            candidate: *c,
            score: p.score(),
        })
        .collect();
    Ok((best_index(&scored), scored, results))
}

/// A pruned readout whose surviving weights are all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveReadout {
    pub r_low_voltage: f64,
    pub dataset: StaticDataset,
    pub split: Split,
    pub readout: LinearReadout,
    pub val_acc: f64,
}

/// Non-negative pruned fit on one dataset. Weights the refit sets to exactly
/// zero are masked out, which leaves every prediction unchanged.
pub fn positive_pruned_readout(
    ds: &StaticDataset,
    cfg: &TrainConfig,
    keep_m: usize,
) -> Result<(Split, LinearReadout, f64)> {
    let cfg = TrainConfig {
        method: Method::Ridge,
        nonnegative: true,
        ..*cfg
    };
    let split = static_split(ds, &cfg)?;
    let (xt, yt) = rows_and_labels(ds, &split.train);
    let (xv, yv) = rows_and_labels(ds, &split.val);
    let (mut r, acc) = prune_retrain(&xt, &yt, &xv, &yv, &cfg, keep_m)?;
    for j in 0..r.weights.len() {
        if r.weights[j] == 0.0 {
            r.active_mask[j] = false;
        }
    }
    Ok((split, r, acc))
}

/// Walks the memristor states in order and returns the first whose
/// non-negative pruned readout keeps all `keep_m` weights strictly positive
/// and reaches `min_val_acc` on validation.
#[allow(clippy::too_many_arguments)]
pub fn find_positive_readout(
    function: BoolFn,
    states: &[f64],
    rho: f64,
    table: &AmplitudeTable,
    params: &CircuitParams,
    acq: &AcquisitionConfig,
    cfg: &TrainConfig,
    keep_m: usize,
    min_val_acc: f64,
) -> Result<PositiveReadout> {
    for &r in states {
        let model = MemristorIV::from_resistance(r, rho)?;
        let ds = build_static_dataset(function, table.n_bits(), table, params, &model, acq)?;
        let (split, readout, val_acc) = positive_pruned_readout(&ds, cfg, keep_m)?;
        if readout.active_indices().len() == keep_m && val_acc >= min_val_acc {
            return Ok(PositiveReadout {
                r_low_voltage: r,
                dataset: ds,
                split,
                readout,
                val_acc,
            });
        }
    }
    Err(Error::Degenerate(format!(
        "no state reached validation accuracy {min_val_acc} with a positive {keep_m}-weight readout"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrosspointRun {
    pub mapping: WeightMapping,
    pub column: CrosspointColumn,
    pub outcomes: Vec<ProgramOutcome>,
    pub software_acc: f64,
    pub crosspoint_acc: f64,
}

/// Maps a readout onto a column, programs it and scores it on `rows`.
pub fn run_crosspoint(
    readout: &LinearReadout,
    rows: &[Vec<f64>],
    labels: &[u8],
    dev: &DeviceProgramModel,
    pv: &PVConfig,
    seed: u64,
) -> Result<CrosspointRun> {
    let mapping = map_weights(readout, dev)?;
    let (column, outcomes) = program_column(&mapping, dev, pv, seed)?;
    Ok(CrosspointRun {
        software_acc: evaluate(readout, rows, &pm1(labels))?,
        crosspoint_acc: column_accuracy(&column, rows, labels)?,
        mapping,
        column,
        outcomes,
    })
}

/// Hash of a static dataset's features and labels.
pub fn static_hash(ds: &StaticDataset) -> String {
    dataset_hash(&ds.features, &ds.labels)
}
