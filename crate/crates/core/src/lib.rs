//! Simulator of a memristive non-autonomous chaotic circuit and the
//! single-node reservoir-computing toolkit built on it.
//!
//! The pipeline runs bottom-up:
//! [`memristor`] → [`circuit`] → [`signal`] → [`reservoir`] → [`readout`] →
//! [`crosspoint`], with [`analysis`] for bifurcation and divergence studies
//! and [`experiment`] for the end-to-end task runners used by the CLI.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod crosspoint;
pub mod error;
pub mod experiment;
pub mod io;
pub mod memristor;
pub mod readout;
pub mod reservoir;
pub mod rng;
pub mod signal;

pub use analysis::{BifurcationPoint, ExtremaSet, OrbitClass, OrbitTag};
pub use circuit::{CircuitParams, CircuitState, Trajectory};
pub use crosspoint::{CrosspointColumn, DeviceProgramModel, PVConfig};
pub use error::{Error, Result};
pub use memristor::{MemristorIV, MemristorState};
pub use readout::{LinearReadout, Method, TrainConfig};
pub use reservoir::{AcquisitionConfig, BoolFn, StaticDataset, StreamConfig, StreamDataset};
pub use signal::{AmplitudeTable, Waveform};
