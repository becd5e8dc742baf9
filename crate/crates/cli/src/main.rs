//! `memchaos`: batch front end for the circuit simulator and reservoir tasks.
//!
//! Exit codes: 0 success, 2 config/user error, 3 numerical failure,
//! 4 degenerate data, 5 unsupported weight mapping.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memchaos_core::Error;

use config::ExperimentConfig;

const DEFAULT_OUT: &str = "memchaos-out";

#[derive(Parser)]
#[command(
    name = "memchaos",
    version,
    about = "Memristive chaotic circuit reservoir experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "MEMCHAOS_OUT_DIR")]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitude sweep: steady-state extrema per drive amplitude.
    Bifurcate(Common),
    /// Static Boolean classification accuracy per function and state.
    StaticTask(Common),
    /// Sliding-window classification on random bit streams.
    StreamTask(Common),
    /// Programs a persisted readout onto a simulated crosspoint column.
    Crosspoint {
        #[command(flatten)]
        common: Common,
        /// Readout JSON written by `static-task`.
        #[arg(long)]
        readout: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter { .. }
        | Error::UnknownFunction(_)
        | Error::Arity { .. }
        | Error::MisalignedStep { .. }
        | Error::Io(_) => 2,
        Error::SingleClass | Error::Degenerate(_) | Error::Shape(_) => 4,
        Error::UnsupportedMapping(_) => 5,
        Error::Sweep { source, .. } => match exit_code(source) {
            2 => 2,
            _ => 3,
        },
        _ => 3,
    }
}

fn remediation(e: &Error) -> Option<&'static str> {
    match e {
        Error::UnsupportedMapping(_) => Some(
            "re-export the readout with `[static_task.readout] positive = true`, or map signed weights onto a differential pair of columns",
        ),
        _ => None,
    }
}

fn run(name: &str, common: &Common, readout: Option<&Path>) -> Result<PathBuf, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply_seed(common.seed);
    cfg.validate()?;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config::user(format!("--threads: {e}")))?;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&out)?;
    let outputs = match (name, readout) {
        ("bifurcate", _) => commands::bifurcate(&cfg, &out)?,
        ("static-task", _) => commands::static_task(&cfg, &out)?,
        ("stream-task", _) => commands::stream_task(&cfg, &out)?,
        ("crosspoint", Some(r)) => commands::crosspoint(&cfg, r, &out)?,
        _ => unreachable!("dispatch covers every subcommand"),
    };
    let inputs: Vec<PathBuf> = readout.map(Path::to_path_buf).into_iter().collect();
    manifest::write_manifest(&out, name, &cfg, &inputs, &outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bifurcate(c) => run("bifurcate", c, None),
        Command::StaticTask(c) => run("static-task", c, None),
        Command::StreamTask(c) => run("stream-task", c, None),
        Command::Crosspoint { common, readout } => run("crosspoint", common, Some(readout)),
    };
    match result {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("memchaos: {e}");
            if let Some(hint) = remediation(&e) {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
