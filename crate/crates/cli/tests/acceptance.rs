//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! Run with `cargo test -p memchaos-cli --test acceptance -- --nocapture`.

use std::collections::HashMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use memchaos_core::analysis::divergence_time;
use memchaos_core::circuit::{initialize_state, simulate, size_circuit, CircuitState};
use memchaos_core::crosspoint::{mac_infer, map_weights, CrosspointColumn};
use memchaos_core::experiment::static_split;
use memchaos_core::readout::{
    evaluate, pm1, prune_retrain, take_rows, top_m, train, train_restricted, train_ridge, train_svm, PersistedReadout,
};
use memchaos_core::reservoir::{build_static_dataset, run_stream_trial};
use memchaos_core::rng;
use memchaos_core::signal::{square_wave, Segment, DEFAULT_PERIOD};
use memchaos_core::{
    AcquisitionConfig, AmplitudeTable, BoolFn, CircuitParams, DeviceProgramModel, MemristorIV, Method, StreamConfig,
    TrainConfig, Waveform,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn say(line: &str) {
    // Bypasses the test harness capture so the summary always shows.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn memchaos(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_memchaos"))
        .args(args)
        .env_remove("MEMCHAOS_OUT_DIR")
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn run_ok(dir: &Path, cmd: &str, config: &str, out: &str, extra: &[&str]) -> Result<PathBuf, String> {
    let mut args = vec![cmd, "--config", config, "--out", out];
    args.extend_from_slice(extra);
    let (code, err) = memchaos(&args, dir);
    ensure(code == 0, format!("{cmd} exited {code}: {err}"))?;
    Ok(dir.join(out))
}

fn read_csv(path: &Path) -> Result<Vec<HashMap<String, String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .unwrap_or_default()
        .split(',')
        .map(str::to_string)
        .collect();
    Ok(lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect())
        .collect())
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("column {key} = {} is not a number", row[key]))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

/// Every regular file under `dir`, relative path → bytes.
fn snapshot(dir: &Path) -> HashMap<PathBuf, Vec<u8>> {
    let mut out = HashMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
        }
    }
    out
}

fn reference_model() -> (CircuitParams, MemristorIV) {
    (
        CircuitParams::reference(),
        MemristorIV::from_resistance(465e3, 0.5).unwrap(),
    )
}

fn sizing() -> Outcome {
    let p = size_circuit(1.4771e-5, 5.0, 10e-9).map_err(|e| e.to_string())?;
    let rel = |x: f64, y: f64| (x / y - 1.0).abs();
    let (er, ern, el) = (rel(p.r, 13.54e3), rel(p.r_n(), 11.28e3), rel(p.l, 1.833));
    ensure(
        er < 1e-3 && ern < 1e-3 && el < 1e-3,
        format!("R {} R_N {} L {}", p.r, p.r_n(), p.l),
    )?;
    Ok(format!("R = {:.1} Ω, R_N = {:.1} Ω, L = {:.4} H", p.r, p.r_n(), p.l))
}

type M2 = [[f64; 2]; 2];

/// exp(A t) for a 2×2 matrix with complex eigenvalues α ± iβ.
fn expm(a: &M2, t: f64) -> M2 {
    let alpha = 0.5 * (a[0][0] + a[1][1]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let beta = (det - alpha * alpha).sqrt();
    let (c, s) = ((beta * t).cos(), (beta * t).sin() / beta);
    let g = (alpha * t).exp();
    [
        [g * (c + s * (a[0][0] - alpha)), g * s * a[0][1]],
        [g * s * a[1][0], g * (c + s * (a[1][1] - alpha))],
    ]
}

fn dynamics() -> Outcome {
    // With rho = 0 the memristor is linear and the circuit has a closed form.
    let (c, r, l) = (10e-9, 100.0, 1.833);
    let params = CircuitParams::new(c, r, l, -1e-6).unwrap();
    let model = MemristorIV::from_resistance(1e6, 0.0).unwrap();
    let u = 0.1;
    let window = 8.0 * 2.0 * std::f64::consts::PI * (l * c).sqrt();
    let a = [[-(params.g_n + model.g1) / c, 1.0 / c], [-1.0 / l, -r / l]];
    let d0 = [0.3 - u, 0.0];
    let exact = |t: f64| {
        let e = expm(&a, t);
        u + e[0][0] * d0[0] + e[0][1] * d0[1]
    };
    let drive = Waveform::new(vec![Segment::pulse(u, window).unwrap()]).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in [512usize, 1024, 2048, 4096, 8192] {
        let h = window / n as f64;
        let tr = simulate(&drive, &params, &model, CircuitState::new(0.3, 0.0), h).map_err(|e| e.to_string())?;
        let worst =
            tr.t.iter()
                .zip(&tr.v)
                .map(|(&t, &v)| (v - exact(t)).abs())
                .fold(0.0, f64::max);
        xs.push(h.ln());
        ys.push(worst.ln());
    }
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    ensure((slope - 4.0).abs() <= 0.3, format!("fitted order {slope:.3}"))?;

    let (params, model) = reference_model();
    let up = initialize_state(1, &params, &model).map_err(|e| e.to_string())?;
    let down = initialize_state(-1, &params, &model).map_err(|e| e.to_string())?;
    let drive = square_wave(0.26, 0.01, DEFAULT_PERIOD, 20).unwrap();
    let dt = DEFAULT_PERIOD / 2048.0;
    let p = simulate(&drive, &params, &model, up, dt).map_err(|e| e.to_string())?;
    let q = simulate(&drive.negated(), &params, &model, down, dt).map_err(|e| e.to_string())?;
    let asym = p.v.iter().zip(&q.v).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    ensure(asym <= 1e-9, format!("odd-symmetry violation {asym:e} V"))?;
    Ok(format!("RK4 order {slope:.3}, symmetry error {asym:.1e} V"))
}

const BIFURCATION_TOML: &str = "seed = 0\n[sweep.range]\nstart = 0.02\nstop = 0.8\ncount = 40\n";

fn bifurcation(work: &Path) -> Outcome {
    let cfg = write(work, "bif.toml", BIFURCATION_TOML);
    let out = run_ok(work, "bifurcate", &cfg, "bif_a", &[])?;
    let rows = read_csv(&out.join("bifurcation.csv"))?;
    ensure(rows.len() >= 80, format!("only {} bifurcation rows", rows.len()))?;
    let orbits = read_csv(&out.join("orbits.csv"))?;
    ensure(orbits.len() == 40, format!("{} amplitudes", orbits.len()))?;
    let clusters: Vec<usize> = orbits.iter().map(|r| num(r, "clusters") as usize).collect();
    let low = clusters.iter().take_while(|&&c| c == 2).count();
    ensure(low >= 2, format!("low-amplitude range has {low} two-cluster points"))?;
    let multiplied = orbits
        .iter()
        .find(|r| num(r, "clusters") > 2.0 && r["orbit"].strip_prefix("period-").is_some_and(|n| n != "1"));
    let multiplied = multiplied.ok_or("no period-multiplied amplitude")?;
    let chaotic = orbits.iter().filter(|r| r["orbit"] == "aperiodic").count();
    ensure(chaotic > 0, "no aperiodic amplitude")?;
    Ok(format!(
        "{low} low-amplitude 2-cluster points, {} at U = {}, {chaotic} aperiodic",
        multiplied["orbit"], multiplied["U"]
    ))
}

fn chaos(work: &Path) -> Outcome {
    let orbits = read_csv(&work.join("bif_a/orbits.csv"))?;
    let tag = |u: f64| {
        orbits
            .iter()
            .find(|r| (num(r, "U") - u).abs() < 1e-9)
            .map(|r| r["orbit"].clone())
            .unwrap_or_default()
    };
    let (chaotic_u, periodic_u) = (0.26, 0.04);
    ensure(
        tag(chaotic_u) == "aperiodic",
        format!("U = {chaotic_u} classified {}", tag(chaotic_u)),
    )?;
    ensure(
        tag(periodic_u) == "period-1",
        format!("U = {periodic_u} classified {}", tag(periodic_u)),
    )?;

    let (params, model) = reference_model();
    let init = initialize_state(1, &params, &model).map_err(|e| e.to_string())?;
    let dt = DEFAULT_PERIOD / 2048.0;
    let pair = |u: f64, periods: usize| -> Result<Option<f64>, String> {
        let drive = square_wave(u, 0.0, DEFAULT_PERIOD, periods).unwrap();
        let a = simulate(&drive, &params, &model, init, dt).map_err(|e| e.to_string())?;
        let b = simulate(&drive, &params, &model, CircuitState::new(init.v + 1e-6, init.i), dt)
            .map_err(|e| e.to_string())?;
        divergence_time(&a, &b, 0.1).map_err(|e| e.to_string())
    };
    let t = pair(chaotic_u, 100)?.ok_or("chaotic pair never separated by 0.1 V")?;
    ensure(
        t > DEFAULT_PERIOD,
        format!("separated after {t:e} s, within one period"),
    )?;
    let never = pair(periodic_u, 40)?;
    ensure(never.is_none(), format!("period-1 pair separated at {never:?}"))?;
    Ok(format!(
        "aperiodic pair separates after {:.1} periods; period-1 pair stays together for 40",
        t / DEFAULT_PERIOD
    ))
}

/// Dense normal-equation solve by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn normal_equations(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let d = x[0].len();
    let m = d + 1;
    let aug = |row: &Vec<f64>, j: usize| if j < d { row[j] } else { 1.0 };
    let mut a = vec![vec![0.0; m + 1]; m];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..m {
            for j in 0..m {
                a[i][j] += aug(row, i) * aug(row, j);
            }
            a[i][m] += aug(row, i) * yi;
        }
    }
    for (i, r) in a.iter_mut().enumerate().take(d) {
        r[i] += lambda;
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..m).map(|i| a[i][m] / a[i][i]).collect()
}

/// Best accuracy of any single threshold rule on a 1-D feature.
fn best_threshold_accuracy(x: &[f64], y: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = x.to_vec();
    cuts.push(f64::NEG_INFINITY);
    let mut best: f64 = 0.0;
    for &c in &cuts {
        for s in [1.0, -1.0] {
            let hits = x
                .iter()
                .zip(y)
                .filter(|(&xi, &yi)| (if xi > c { s } else { -s }) == yi)
                .count();
            best = best.max(hits as f64 / x.len() as f64);
        }
    }
    best
}

fn readout_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut r = rng::stream(seed, &[0xacc]);
        let n = r.random_range(2..=20);
        let d = r.random_range(1..=10);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let fit = train_ridge(&x, &y, 1e-3).map_err(|e| e.to_string())?;
        let sol = normal_equations(&x, &y, 1e-3);
        let scale = sol.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let got = fit.weights.iter().chain(std::iter::once(&fit.bias));
        for (p, q) in got.zip(&sol) {
            worst = worst.max((p - q).abs() / scale);
        }
    }
    ensure(worst <= 1e-9, format!("ridge relative error {worst:e}"))?;

    let toys: [(Vec<Vec<f64>>, Vec<f64>); 3] = [
        (vec![vec![0.0], vec![1.0]], vec![-1.0, 1.0]),
        (
            vec![vec![-2.0, 1.0], vec![-1.0, 2.0], vec![1.0, -1.0], vec![2.0, -2.0]],
            vec![-1.0, -1.0, 1.0, 1.0],
        ),
        (
            (0..40).map(|k| vec![k as f64 / 10.0, (k % 7) as f64]).collect(),
            (0..40).map(|k| if k >= 17 { 1.0 } else { -1.0 }).collect(),
        ),
    ];
    for (k, (x, y)) in toys.iter().enumerate() {
        let r = train_svm(x, y, 1.0, 200, 0).map_err(|e| e.to_string())?;
        let acc = evaluate(&r, x, y).map_err(|e| e.to_string())?;
        ensure(acc == 1.0, format!("SVM toy {k} accuracy {acc}"))?;
    }

    // XOR words encoded as one amplitude each: the classes interleave.
    let amps = [0.161, 0.188, 0.299, 0.346];
    let labels = [-1.0, 1.0, 1.0, -1.0];
    let x1: Vec<f64> = (0..80).map(|k| amps[k % 4]).collect();
    let y1: Vec<f64> = (0..80).map(|k| labels[k % 4]).collect();
    let cap = best_threshold_accuracy(&x1, &y1);
    ensure(cap == 0.75, format!("threshold oracle {cap}"))?;
    let rows: Vec<Vec<f64>> = x1.iter().map(|&v| vec![v]).collect();
    for method in [Method::Ridge, Method::Svm] {
        let r = train(
            &rows,
            &y1,
            &TrainConfig {
                method,
                ..TrainConfig::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let acc = evaluate(&r, &rows, &y1).map_err(|e| e.to_string())?;
        ensure(acc <= cap, format!("{} beat the 1-D cap: {acc}", method.as_str()))?;
    }
    Ok(format!(
        "ridge max relative error {worst:.1e}; SVM toys separated; 1-D XOR cap {cap}"
    ))
}

const STATIC_TUNE_TOML: &str = r#"seed = 0
[static_task]
functions = ["XOR"]
methods = ["ridge"]
ablation = true
[static_task.tune]
states = [200e3, 465e3, 755e3]
tables = [[0.161, 0.188, 0.299, 0.346], [0.1, 0.2, 0.3, 0.4]]
"#;

fn static_expansion(work: &Path) -> Outcome {
    let cfg = write(work, "static_tune.toml", STATIC_TUNE_TOML);
    let tuned = run_ok(work, "static-task", &cfg, "static_a", &[])?;
    let tuning = read_csv(&tuned.join("static_tuning.csv"))?;
    let best = tuning.iter().find(|r| r["best"] == "1").ok_or("no best candidate")?;
    // Score the winner on fresh acquisition and split seeds.
    let fresh = format!(
        "seed = 101\nstates = [{}]\n[memristor]\nrho = {}\n[signal]\namplitudes = [{}]\n[static_task]\nfunctions = [\"XOR\"]\nmethods = [\"ridge\", \"svm\"]\nablation = true\n",
        best["r_mem"],
        best["rho"],
        best["amplitudes"].replace(' ', ", ")
    );
    let cfg = write(work, "static_fresh.toml", &fresh);
    let out = run_ok(work, "static-task", &cfg, "static_fresh", &[])?;
    let acc = read_csv(&out.join("accuracy.csv"))?;
    let get = |m: &str| {
        acc.iter()
            .find(|r| r["method"] == m)
            .map(|r| num(r, "val_acc"))
            .unwrap_or(f64::NAN)
    };
    let (ridge, svm, ablation) = (get("ridge"), get("svm"), get("ridge_amplitude_only"));
    ensure(ridge >= 0.90, format!("XOR2 validation accuracy {ridge}"))?;
    ensure(ablation <= 0.75, format!("amplitude-only ablation {ablation}"))?;
    Ok(format!(
        "tuned r = {} Ω, table [{}]: ridge {ridge}, svm {svm}, ablation {ablation}",
        best["r_mem"], best["amplitudes"]
    ))
}

const STREAM_TUNE_TOML: &str = r#"seed = 0
[stream_task]
functions = [{ name = "XOR", inputs = 2 }, { name = "XOR", inputs = 3 }, { name = "XOR", inputs = 4 }]
[stream_task.tune]
states = [150e3, 300e3, 465e3, 755e3]
levels = [[0.1, 0.25], [0.15, 0.3], [0.2, 0.35]]
offsets = [0.01, 0.05]
"#;

fn through_time(work: &Path) -> Outcome {
    let cfg = write(work, "stream_tune.toml", STREAM_TUNE_TOML);
    let tuned = run_ok(work, "stream-task", &cfg, "stream_a", &[])?;
    let tuning = read_csv(&tuned.join("stream_tuning.csv"))?;
    let best = tuning.iter().find(|r| r["best"] == "1").ok_or("no best candidate")?;
    let fresh = format!(
        "seed = 11\nstates = [{}]\n[memristor]\nrho = {}\n[stream]\nu_low = {}\nu_high = {}\noffset = {}\n",
        best["r_mem"], best["rho"], best["u_low"], best["u_high"], best["offset"]
    );
    let cfg = write(work, "stream_fresh.toml", &fresh);
    let out = run_ok(work, "stream-task", &cfg, "stream_fresh", &[])?;
    let acc = read_csv(&out.join("stream_accuracy.csv"))?;
    let get = |n: &str| {
        acc.iter()
            .find(|r| r["n_inputs"] == n)
            .map(|r| num(r, "accuracy"))
            .unwrap_or(f64::NAN)
    };
    let (x2, x3, x4) = (get("2"), get("3"), get("4"));
    ensure(x2 >= 0.85 && x3 >= 0.85, format!("XOR2 {x2}, XOR3 {x3}"))?;
    ensure(x2 > x4 && x3 > x4, format!("XOR4 {x4} not below XOR2 {x2} / XOR3 {x3}"))?;

    // Third-period blocks after 101 and 001 differ by more than the spread
    // of repeated 001 trials with independent noise.
    let params = CircuitParams::reference();
    let model = MemristorIV::from_resistance(num(best, "r_mem"), num(best, "rho")).unwrap();
    let scfg = StreamConfig {
        u_low: num(best, "u_low"),
        u_high: num(best, "u_high"),
        offset: num(best, "offset"),
        ..StreamConfig::default()
    };
    let acq = AcquisitionConfig::default();
    let block = |bits: &[u8], seed: u64| -> Result<Vec<f64>, String> {
        let ds = run_stream_trial(bits, &params, &model, &acq, &scfg, &mut rng::stream(seed, &[0xfade]))
            .map_err(|e| e.to_string())?;
        Ok(ds.blocks[2].clone())
    };
    let rms =
        |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    let mut signal = f64::INFINITY;
    let mut noise: f64 = 0.0;
    for s in 0..5u64 {
        let a = block(&[1, 0, 1], 2 * s)?;
        let b = block(&[0, 0, 1], 2 * s + 1)?;
        let b2 = block(&[0, 0, 1], 2 * s + 100)?;
        signal = signal.min(rms(&a, &b));
        noise = noise.max(rms(&b, &b2));
    }
    ensure(
        signal > 3.0 * noise,
        format!("101 vs 001 rms {signal:.2e} V, 001 vs 001 rms {noise:.2e} V"),
    )?;
    Ok(format!(
        "fresh seed: XOR2 {x2:.3}, XOR3 {x3:.3}, XOR4 {x4:.3}; 101/001 block gap {signal:.2e} V vs noise {noise:.2e} V"
    ))
}

const PRUNE_TOML: &str = r#"seed = 0
[static_task]
functions = ["XOR"]
methods = ["ridge"]
pruning = [1000, 4]
"#;

fn pruning(work: &Path) -> Outcome {
    let cfg = write(work, "prune.toml", PRUNE_TOML);
    let out = run_ok(work, "static-task", &cfg, "prune", &[])?;
    let curve = read_csv(&out.join("pruning_curve.csv"))?;
    let at = |k: &str| {
        curve
            .iter()
            .find(|r| r["kept"] == k)
            .map(|r| num(r, "val_acc"))
            .unwrap_or(f64::NAN)
    };
    let (full, four) = (at("1000"), at("4"));
    ensure(four >= full - 0.10, format!("4-weight {four} vs unpruned {full}"))?;

    let (params, model) = reference_model();
    let table = AmplitudeTable::explicit(2, vec![0.161, 0.188, 0.299, 0.346]).unwrap();
    let ds = build_static_dataset(BoolFn::Xor, 2, &table, &params, &model, &AcquisitionConfig::default())
        .map_err(|e| e.to_string())?;
    let tc = TrainConfig::default();
    let split = static_split(&ds, &tc).map_err(|e| e.to_string())?;
    let xt = take_rows(&ds.features, &split.train);
    let yt = pm1(&take_rows(&ds.labels, &split.train));
    let xv = take_rows(&ds.features, &split.val);
    let yv = pm1(&take_rows(&ds.labels, &split.val));
    for m in [1000, 100, 20, 4, 2] {
        let (pruned, _) = prune_retrain(&xt, &yt, &xv, &yv, &tc, m).map_err(|e| e.to_string())?;
        let full = train(&xt, &yt, &tc).map_err(|e| e.to_string())?;
        let restricted = train_restricted(&xt, &yt, &top_m(&full.weights, m), &tc).map_err(|e| e.to_string())?;
        ensure(
            pruned == restricted,
            format!("prune-retrain differs from restricted training at m = {m}"),
        )?;
    }
    Ok(format!(
        "unpruned {full}, 4 weights {four}; prune-retrain identical to restricted fit"
    ))
}

const EXPORT_TOML: &str = r#"seed = 0
states = [465e3, 491026, 783333, 832051, 1051282, 600e3, 700e3, 900e3, 1e6]
[acquisition]
repetitions = 75
[train]
split = 0.6
[static_task]
functions = ["XOR"]
methods = ["ridge"]
[static_task.readout]
keep = 4
positive = true
min_val_acc = 0.9
"#;

const XP_NOISY_TOML: &str = r#"seed = 0
[acquisition]
repetitions = 75
[train]
split = 0.6
[crosspoint]
trials = 20
"#;

const XP_IDEAL_TOML: &str = r#"seed = 0
[acquisition]
repetitions = 75
[train]
split = 0.6
[crosspoint.device]
sigma_prog = 0.0
sigma_read = 0.0
"#;

fn crosspoint(work: &Path) -> Outcome {
    let cfg = write(work, "export.toml", EXPORT_TOML);
    let exported = run_ok(work, "static-task", &cfg, "export", &[])?;
    let readout_path = exported.join("readout_XOR.json");
    let readout_arg = readout_path.to_str().unwrap().to_string();
    let persisted =
        PersistedReadout::from_json(&std::fs::read_to_string(&readout_path).unwrap()).map_err(|e| e.to_string())?;
    let readout = persisted.readout().map_err(|e| e.to_string())?;
    let src = persisted.source.clone().ok_or("readout without source")?;

    // Zero noise: every validation decision matches the software readout.
    let cfg = write(work, "xp_ideal.toml", XP_IDEAL_TOML);
    let ideal = run_ok(work, "crosspoint", &cfg, "xp_ideal", &["--readout", &readout_arg])?;
    let row = &read_csv(&ideal.join("crosspoint_accuracy.csv"))?[0];
    ensure(
        num(row, "software_acc") == num(row, "crosspoint_acc"),
        format!(
            "ideal column {} vs software {}",
            row["crosspoint_acc"], row["software_acc"]
        ),
    )?;
    let table = AmplitudeTable::explicit(src.n_bits, src.amplitudes.clone()).unwrap();
    let model = MemristorIV::from_resistance(src.r_low_voltage, src.rho).unwrap();
    let acq = AcquisitionConfig {
        repetitions: 75,
        ..AcquisitionConfig::default()
    };
    let ds = build_static_dataset(
        BoolFn::Xor,
        src.n_bits,
        &table,
        &CircuitParams::reference(),
        &model,
        &acq,
    )
    .map_err(|e| e.to_string())?;
    let split = static_split(&ds, &persisted.train_config).map_err(|e| e.to_string())?;
    let mapping = map_weights(&readout, &DeviceProgramModel::default().noiseless()).map_err(|e| e.to_string())?;
    let column = CrosspointColumn::ideal(&mapping);
    for &k in &split.val {
        let x = &ds.features[k];
        let hw = mac_infer(&column, &column.inputs(x).unwrap())
            .map_err(|e| e.to_string())?
            .1;
        let sw = readout.predict_bit(x).map_err(|e| e.to_string())?;
        ensure(hw == sw, format!("sample {k}: column {hw}, software {sw}"))?;
    }

    // Default noise: the verify rule lands every device near target.
    let cfg = write(work, "xp_noisy.toml", XP_NOISY_TOML);
    let noisy = run_ok(work, "crosspoint", &cfg, "xp_noisy", &["--readout", &readout_arg])?;
    let dev = DeviceProgramModel::default();
    let floor = 0.95 * (1.0 - 3.0 * dev.sigma_read);
    let devices = read_csv(&noisy.join("crosspoint_devices.csv"))?;
    let lowest = devices
        .iter()
        .map(|r| num(r, "achieved_g") / num(r, "target_g"))
        .fold(f64::INFINITY, f64::min);
    ensure(
        lowest >= floor,
        format!("device at {lowest:.4} of target, floor {floor:.4}"),
    )?;
    let acc = read_csv(&noisy.join("crosspoint_accuracy.csv"))?;
    let samples = num(&acc[0], "samples");
    ensure(samples == 120.0, format!("{samples} validation samples"))?;
    let worst = acc.iter().map(|r| num(r, "crosspoint_acc")).fold(1.0, f64::min);
    let mean = acc.iter().map(|r| num(r, "crosspoint_acc")).sum::<f64>() / acc.len() as f64;
    ensure(worst >= 0.90, format!("crosspoint accuracy {worst}"))?;
    Ok(format!(
        "{} devices at r = {} Ω; ideal column exact on {} samples; {} noisy trials: min device {lowest:.3} of target, accuracy min {worst:.3} mean {mean:.3}",
        mapping.targets.len(),
        src.r_low_voltage,
        split.val.len(),
        acc.len()
    ))
}

fn determinism(work: &Path) -> Outcome {
    let reruns = [
        ("bifurcate", "bif.toml", "bif_a", "bif_b"),
        ("static-task", "static_tune.toml", "static_a", "static_b"),
        ("stream-task", "stream_tune.toml", "stream_a", "stream_b"),
    ];
    let mut files = 0;
    for (cmd, cfg, first, second) in reruns {
        ensure(work.join(first).is_dir(), format!("{cmd}: first run missing"))?;
        run_ok(work, cmd, cfg, second, &[])?;
        let (a, b) = (snapshot(&work.join(first)), snapshot(&work.join(second)));
        ensure(a.len() == b.len(), format!("{cmd}: {} vs {} files", a.len(), b.len()))?;
        for (name, bytes) in &a {
            ensure(b.get(name) == Some(bytes), format!("{cmd}: {} differs", name.display()))?;
        }
        files += a.len();
    }
    Ok(format!("{files} files byte-identical across reruns"))
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path();
    type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("1 sizing", Box::new(sizing)),
        ("2 dynamics", Box::new(dynamics)),
        ("3 bifurcation structure", Box::new(|| bifurcation(work))),
        ("4 chaos fingerprints", Box::new(|| chaos(work))),
        ("5 readout oracles", Box::new(readout_oracles)),
        ("6 nonlinear expansion", Box::new(|| static_expansion(work))),
        ("7 through-time processing", Box::new(|| through_time(work))),
        ("8 pruning", Box::new(|| pruning(work))),
        ("9 crosspoint", Box::new(|| crosspoint(work))),
        ("10 determinism", Box::new(|| determinism(work))),
    ];
    let total = criteria.len();
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => say(&format!("PASS  criterion {name} ({secs:.1} s): {detail}")),
            Err(why) => {
                say(&format!("FAIL  criterion {name} ({secs:.1} s): {why}"));
                failed.push(name);
            }
        }
    }
    say(&format!("acceptance: {}/{total} passed", total - failed.len()));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
