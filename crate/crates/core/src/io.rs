//! CSV and JSON artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::BifurcationPoint;
use crate::circuit::Trajectory;
use crate::crosspoint::ProgramOutcome;
use crate::error::{Error, Result};
use crate::reservoir::{BoolFn, StaticDataset, StreamDataset};
use crate::signal::Waveform;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `header` then one record per row.
pub fn write_rows<W, R, I>(out: W, header: &[&str], rows: I) -> Result<()>
where
    W: Write,
    R: Serialize,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_rows_to<R: Serialize, I: IntoIterator<Item = R>>(path: &Path, header: &[&str], rows: I) -> Result<()> {
    write_rows(create(path)?, header, rows)
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    write_rows_to(
        path,
        &["t", "u", "v", "i"],
        (0..traj.len()).map(|k| (traj.t[k], traj.u[k], traj.v[k], traj.i[k])),
    )
}

/// Drive level on a grid of step `dt` (per-step levels, then the end point).
pub fn write_waveform_csv(path: &Path, drive: &Waveform, dt: f64) -> Result<()> {
    let levels = drive.discretize(dt)?;
    let n = levels.len();
    write_rows_to(
        path,
        &["t", "u"],
        (0..=n).map(|k| (k as f64 * dt, levels[k.min(n.saturating_sub(1))])),
    )
}

pub fn write_bifurcation_csv(path: &Path, points: &[BifurcationPoint]) -> Result<()> {
    write_rows_to(
        path,
        &["U", "v", "kind"],
        points.iter().map(|p| (p.amplitude, p.v, p.kind.as_str())),
    )
}

pub fn write_programming_trace_csv(path: &Path, outcomes: &[ProgramOutcome]) -> Result<()> {
    let rows = outcomes.iter().enumerate().flat_map(|(d, o)| {
        o.trace
            .iter()
            .map(move |s| (d, o.target, s.iteration, s.i_cc, s.g_read, s.g_true))
    });
    write_rows_to(
        path,
        &["device", "target_g", "iteration", "i_cc", "read_g", "true_g"],
        rows,
    )
}

fn feature_header(prefix: &[&str], d: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..d).map(|j| format!("x{j}")))
        .chain(std::iter::once("label".to_string()))
        .collect()
}

/// One row per trial: word index, features, 0/1 label.
pub fn write_static_dataset_csv(path: &Path, ds: &StaticDataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(feature_header(&["word"], ds.columns()))
        .map_err(csv_err)?;
    for ((x, &l), &word) in ds.features.iter().zip(&ds.labels).zip(&ds.words) {
        w.serialize((word, x, l as i8)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per period block; label −1 where the window is incomplete.
pub fn write_stream_dataset_csv(path: &Path, streams: &[StreamDataset], function: BoolFn, n: usize) -> Result<()> {
    let d = streams.first().and_then(|s| s.blocks.first()).map_or(0, Vec::len);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(feature_header(&["stream", "period", "bit"], d))
        .map_err(csv_err)?;
    for (s, ds) in streams.iter().enumerate() {
        let labels = ds.labels(function, n)?;
        for (p, block) in ds.blocks.iter().enumerate() {
            let label = labels[p].map_or(-1, |l| l as i8);
            w.serialize((s, p, ds.bits[p], block, label)).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a feature matrix and its labels.
pub fn dataset_hash(features: &[Vec<f64>], labels: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update((features.len() as u64).to_le_bytes());
    for row in features {
        h.update((row.len() as u64).to_le_bytes());
        for x in row {
            h.update(x.to_le_bytes());
        }
    }
    h.update(labels);
    hex::encode(h.finalize())
}
