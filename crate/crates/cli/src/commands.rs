use std::path::{Path, PathBuf};

use memchaos_core::analysis::{bifurcation_points, bifurcation_sweep};
use memchaos_core::crosspoint::map_weights;
use memchaos_core::experiment::{
    evaluate_static, evaluate_stream, find_positive_readout, pruning_curve, run_crosspoint, static_hash, static_split,
    tune_static, tune_stream, StaticCandidate, StreamCandidate,
};
use memchaos_core::io::{write_bifurcation_csv, write_json, write_rows, write_static_dataset_csv};
use memchaos_core::readout::{pm1, prune_retrain, take_rows, PersistedReadout, ReadoutSource};
use memchaos_core::reservoir::{build_static_dataset, build_stream_set, memory_profile};
use memchaos_core::{rng, AmplitudeTable, BoolFn, Error, MemristorIV, Method, StaticDataset, TrainConfig};

use crate::config::{user, ExperimentConfig};

type Result<T> = std::result::Result<T, Error>;

fn csv_out<R, I>(dir: &Path, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
where
    R: serde::Serialize,
    I: IntoIterator<Item = R>,
{
    let path = dir.join(name);
    let f = std::fs::File::create(&path)?;
    write_rows(std::io::BufWriter::new(f), header, rows)?;
    Ok(path)
}

pub fn bifurcate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let amps = cfg.sweep.amplitudes()?;
    let params = cfg.circuit()?;
    let model = cfg.model()?;
    let results = bifurcation_sweep(&amps, &params, &model, &cfg.sweep.analysis)?;
    let bif = out.join("bifurcation.csv");
    write_bifurcation_csv(&bif, &bifurcation_points(&results))?;
    let orbits = csv_out(
        out,
        "orbits.csv",
        &["U", "extrema", "clusters", "orbit"],
        results.iter().map(|r| {
            let orbit = r.orbit.map_or("unclassified".to_string(), |o| o.to_string());
            (r.amplitude, r.extrema.len(), r.clusters, orbit)
        }),
    )?;
    Ok(vec![bif, orbits])
}

/// One (state, rho, table) point the static task is run at.
struct StaticRun {
    state: f64,
    rho: f64,
    table: AmplitudeTable,
}

fn static_runs(cfg: &ExperimentConfig, function: BoolFn, tuning: &mut Vec<TuneRow>) -> Result<Vec<StaticRun>> {
    let base = cfg.signal.table()?;
    let Some(tune) = &cfg.static_task.tune else {
        return Ok(cfg
            .states()
            .into_iter()
            .map(|state| StaticRun {
                state,
                rho: cfg.memristor.rho,
                table: base.clone(),
            })
            .collect());
    };
    let states = if tune.states.is_empty() {
        cfg.states()
    } else {
        tune.states.clone()
    };
    let rhos = if tune.rhos.is_empty() {
        vec![cfg.memristor.rho]
    } else {
        tune.rhos.clone()
    };
    let tables = if tune.tables.is_empty() {
        vec![base]
    } else {
        tune.tables
            .iter()
            .map(|a| AmplitudeTable::explicit(cfg.signal.n_bits, a.clone()))
            .collect::<Result<_>>()?
    };
    let mut candidates = Vec::new();
    for &r in &states {
        for &rho in &rhos {
            for t in &tables {
                candidates.push(StaticCandidate {
                    r_low_voltage: r,
                    rho,
                    table: t.clone(),
                });
            }
        }
    }
    let (best, scored) = tune_static(function, &candidates, &cfg.circuit()?, &cfg.acquisition, &cfg.train)?;
    for (k, s) in scored.iter().enumerate() {
        tuning.push(TuneRow {
            function: function.name(),
            r_mem: s.candidate.r_low_voltage,
            rho: s.candidate.rho,
            amplitudes: join(s.candidate.table.amplitudes()),
            val_acc: s.score,
            best: (k == best) as u8,
        });
    }
    let c = &scored[best].candidate;
    Ok(vec![StaticRun {
        state: c.r_low_voltage,
        rho: c.rho,
        table: c.table.clone(),
    }])
}

#[derive(serde::Serialize)]
struct TuneRow {
    function: &'static str,
    r_mem: f64,
    rho: f64,
    amplitudes: String,
    val_acc: f64,
    best: u8,
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn static_task(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let task = &cfg.static_task;
    if task.functions.is_empty() || task.methods.is_empty() {
        return Err(user("static_task: `functions` and `methods` must be nonempty"));
    }
    let n_bits = cfg.signal.n_bits;
    for f in &task.functions {
        f.check_arity(n_bits)?;
    }
    let params = cfg.circuit()?;
    let mut accuracy = Vec::new();
    let mut pruning = Vec::new();
    let mut tuning = Vec::new();
    let mut outputs = Vec::new();
    for &f in &task.functions {
        let runs = static_runs(cfg, f, &mut tuning)?;
        for run in &runs {
            let model = MemristorIV::from_resistance(run.state, run.rho)?;
            let ds = build_static_dataset(f, n_bits, &run.table, &params, &model, &cfg.acquisition)?;
            if task.write_datasets {
                let path = out.join(format!("dataset_{}_{}.csv", f.name(), run.state));
                write_static_dataset_csv(&path, &ds)?;
                outputs.push(path);
            }
            for &method in &task.methods {
                let tc = TrainConfig { method, ..cfg.train };
                let e = evaluate_static(&ds, &tc)?;
                accuracy.push((f.name(), run.state, method.as_str().to_string(), e.train_acc, e.val_acc));
                if task.ablation {
                    let a = evaluate_static(&ds.amplitude_only(&run.table), &tc)?;
                    accuracy.push((
                        f.name(),
                        run.state,
                        format!("{}_amplitude_only", method.as_str()),
                        a.train_acc,
                        a.val_acc,
                    ));
                }
                if !task.pruning.is_empty() {
                    for p in pruning_curve(&ds, &tc, &task.pruning)? {
                        pruning.push((f.name(), run.state, method.as_str(), p.kept, p.val_acc));
                    }
                }
            }
        }
        if let Some(export) = &task.readout {
            outputs.push(export_readout(cfg, f, &runs[0], export, out)?);
        }
    }
    let mut files = vec![csv_out(
        out,
        "accuracy.csv",
        &["function", "state", "method", "train_acc", "val_acc"],
        accuracy,
    )?];
    if !task.pruning.is_empty() {
        files.push(csv_out(
            out,
            "pruning_curve.csv",
            &["function", "state", "method", "kept", "val_acc"],
            pruning,
        )?);
    }
    if task.tune.is_some() {
        files.push(csv_out(
            out,
            "static_tuning.csv",
            &["function", "r_mem", "rho", "amplitudes", "val_acc", "best"],
            tuning,
        )?);
    }
    files.extend(outputs);
    Ok(files)
}

fn export_readout(
    cfg: &ExperimentConfig,
    f: BoolFn,
    run: &StaticRun,
    export: &crate::config::ReadoutExport,
    out: &Path,
) -> Result<PathBuf> {
    let params = cfg.circuit()?;
    let n_bits = cfg.signal.n_bits;
    let (state, ds, readout, tc): (f64, StaticDataset, _, TrainConfig) = if export.positive {
        let tc = TrainConfig {
            method: Method::Ridge,
            nonnegative: true,
            ..cfg.train
        };
        let mut states = vec![run.state];
        states.extend(cfg.states().into_iter().filter(|&s| s != run.state));
        let p = find_positive_readout(
            f,
            &states,
            run.rho,
            &run.table,
            &params,
            &cfg.acquisition,
            &tc,
            export.keep,
            export.min_val_acc,
        )?;
        (p.r_low_voltage, p.dataset, p.readout, tc)
    } else {
        let model = MemristorIV::from_resistance(run.state, run.rho)?;
        let ds = build_static_dataset(f, n_bits, &run.table, &params, &model, &cfg.acquisition)?;
        let split = static_split(&ds, &cfg.train)?;
        let rows = |idx: &[usize]| (take_rows(&ds.features, idx), pm1(&take_rows(&ds.labels, idx)));
        let (xt, yt) = rows(&split.train);
        let (xv, yv) = rows(&split.val);
        let (r, _) = prune_retrain(&xt, &yt, &xv, &yv, &cfg.train, export.keep)?;
        (run.state, ds, r, cfg.train)
    };
    let persisted = PersistedReadout::new(
        &readout,
        &tc,
        static_hash(&ds),
        Some(ReadoutSource {
            function: f.name().to_string(),
            n_bits,
            r_low_voltage: state,
            rho: run.rho,
            amplitudes: run.table.amplitudes().to_vec(),
        }),
    );
    let path = out.join(format!("readout_{}.json", f.name()));
    write_json(&path, &persisted)?;
    Ok(path)
}

pub fn stream_task(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let task = &cfg.stream_task;
    if task.functions.is_empty() {
        return Err(user("stream_task: `functions` must be nonempty"));
    }
    let discard = cfg.acquisition.transient_discard_periods;
    for spec in &task.functions {
        spec.name.check_arity(spec.inputs)?;
        if cfg.stream.stream_length < spec.inputs + discard {
            return Err(user(format!(
                "stream_length {} is shorter than {} inputs plus {} discarded periods",
                cfg.stream.stream_length, spec.inputs, discard
            )));
        }
    }
    let params = cfg.circuit()?;
    let train = TrainConfig {
        split: task.split,
        ..cfg.train
    };
    train.validate()?;
    let mut files = Vec::new();
    let runs: Vec<StreamCandidate> = match &task.tune {
        None => cfg
            .states()
            .into_iter()
            .map(|r| StreamCandidate {
                r_low_voltage: r,
                rho: cfg.memristor.rho,
                u_low: cfg.stream.u_low,
                u_high: cfg.stream.u_high,
                offset: cfg.stream.offset,
            })
            .collect(),
        Some(t) => {
            let states = if t.states.is_empty() {
                cfg.states()
            } else {
                t.states.clone()
            };
            let rhos = if t.rhos.is_empty() {
                vec![cfg.memristor.rho]
            } else {
                t.rhos.clone()
            };
            let levels = if t.levels.is_empty() {
                vec![[cfg.stream.u_low, cfg.stream.u_high]]
            } else {
                t.levels.clone()
            };
            let offsets = if t.offsets.is_empty() {
                vec![cfg.stream.offset]
            } else {
                t.offsets.clone()
            };
            let mut cands = Vec::new();
            for &r in &states {
                for &rho in &rhos {
                    for &[u_low, u_high] in &levels {
                        for &offset in &offsets {
                            cands.push(StreamCandidate {
                                r_low_voltage: r,
                                rho,
                                u_low,
                                u_high,
                                offset,
                            });
                        }
                    }
                }
            }
            let (best, scored, parity) = tune_stream(&cands, &params, &cfg.acquisition, &cfg.stream, &train)?;
            files.push(csv_out(
                out,
                "stream_tuning.csv",
                &[
                    "r_mem", "rho", "u_low", "u_high", "offset", "xor2", "xor3", "xor4", "score", "best",
                ],
                scored.iter().zip(&parity).enumerate().map(|(k, (s, p))| {
                    let c = s.candidate;
                    (
                        c.r_low_voltage,
                        c.rho,
                        c.u_low,
                        c.u_high,
                        c.offset,
                        p.xor2,
                        p.xor3,
                        p.xor4,
                        s.score,
                        (k == best) as u8,
                    )
                }),
            )?);
            vec![scored[best].candidate]
        }
    };
    let mut accuracy = Vec::new();
    let mut traces = Vec::new();
    let mut memory = Vec::new();
    for c in &runs {
        let model = MemristorIV::from_resistance(c.r_low_voltage, c.rho)?;
        let streams = build_stream_set(&params, &model, &cfg.acquisition, &c.stream_config(&cfg.stream))?;
        for spec in &task.functions {
            let e = evaluate_stream(&streams, spec.name, spec.inputs, discard, &train)?;
            accuracy.push((spec.name.name(), spec.inputs, c.r_low_voltage, e.val_acc));
            if task.traces {
                for p in &e.predictions {
                    traces.push((
                        spec.name.name(),
                        spec.inputs,
                        c.r_low_voltage,
                        p.stream,
                        p.period,
                        p.bit,
                        p.label,
                        p.predicted,
                        p.score,
                    ));
                }
            }
        }
        if task.memory_lags > 0 {
            for (lag, m) in memory_profile(&streams, task.memory_lags, discard)?
                .into_iter()
                .enumerate()
            {
                memory.push((c.r_low_voltage, lag, m));
            }
        }
    }
    files.push(csv_out(
        out,
        "stream_accuracy.csv",
        &["function", "n_inputs", "r_mem", "accuracy"],
        accuracy,
    )?);
    if task.traces {
        files.push(csv_out(
            out,
            "stream_predictions.csv",
            &[
                "function",
                "n_inputs",
                "r_mem",
                "stream",
                "period",
                "bit",
                "label",
                "predicted",
                "score",
            ],
            traces,
        )?);
    }
    if task.memory_lags > 0 {
        files.push(csv_out(out, "memory_profile.csv", &["r_mem", "lag", "memory"], memory)?);
    }
    Ok(files)
}

pub fn crosspoint(cfg: &ExperimentConfig, readout_path: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(readout_path)
        .map_err(|e| user(format!("cannot read readout {}: {e}", readout_path.display())))?;
    let persisted = PersistedReadout::from_json(&text).map_err(|e| user(e.to_string()))?;
    let readout = persisted.readout()?;
    let src = persisted
        .source
        .as_ref()
        .ok_or_else(|| user("readout has no `source`; re-export it with the static-task command"))?;
    let xp = &cfg.crosspoint;
    if xp.trials == 0 {
        return Err(user("crosspoint.trials must be >= 1"));
    }
    // Fail on an unmappable readout before spending time on simulation.
    map_weights(&readout, &xp.device)?;

    let function: BoolFn = src.function.parse()?;
    let table = AmplitudeTable::explicit(src.n_bits, src.amplitudes.clone())?;
    let model = MemristorIV::from_resistance(src.r_low_voltage, src.rho)?;
    let ds = build_static_dataset(function, src.n_bits, &table, &cfg.circuit()?, &model, &cfg.acquisition)?;
    if static_hash(&ds) != persisted.dataset_hash {
        return Err(user(
            "readout was trained on different data; use the circuit and acquisition settings it was exported with",
        ));
    }
    let split = static_split(&ds, &persisted.train_config)?;
    let xv = take_rows(&ds.features, &split.val);
    let yv = take_rows(&ds.labels, &split.val);

    let mut accuracy = Vec::new();
    let mut trace = Vec::new();
    let mut devices = Vec::new();
    for trial in 0..xp.trials {
        let seed = rng::derive_seed(cfg.effective_seed(), &[0x5850, trial as u64]);
        let run = run_crosspoint(&readout, &xv, &yv, &xp.device, &xp.pv, seed)?;
        let worst = run
            .outcomes
            .iter()
            .map(|o| o.achieved / o.target)
            .fold(f64::INFINITY, f64::min);
        accuracy.push((
            trial,
            src.function.as_str(),
            src.r_low_voltage,
            run.outcomes.len(),
            xv.len(),
            run.software_acc,
            run.crosspoint_acc,
            worst,
        ));
        for (d, o) in run.outcomes.iter().enumerate() {
            let feature = run.mapping.feature_indices[d];
            devices.push((
                trial,
                d,
                feature,
                readout.weights[feature],
                o.target,
                o.achieved,
                o.iterations,
                o.relative_error,
            ));
            for s in &o.trace {
                trace.push((trial, d, o.target, s.iteration, s.i_cc, s.g_read, s.g_true));
            }
        }
    }
    Ok(vec![
        csv_out(
            out,
            "programming_trace.csv",
            &["trial", "device", "target_g", "iteration", "i_cc", "read_g", "true_g"],
            trace,
        )?,
        csv_out(
            out,
            "crosspoint_devices.csv",
            &[
                "trial",
                "device",
                "feature",
                "weight",
                "target_g",
                "achieved_g",
                "iterations",
                "relative_error",
            ],
            devices,
        )?,
        csv_out(
            out,
            "crosspoint_accuracy.csv",
            &[
                "trial",
                "function",
                "state",
                "devices",
                "samples",
                "software_acc",
                "crosspoint_acc",
                "min_target_fraction",
            ],
            accuracy,
        )?,
    ])
}
