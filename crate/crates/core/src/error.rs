use thiserror::Error;

/// Errors raised across the simulator and readout pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("step {dt:e} s does not divide segment {segment} ({what})")]
    MisalignedStep {
        dt: f64,
        segment: usize,
        what: &'static str,
    },

    #[error("integration runaway at t = {t:e} s (v = {v:e} V, i = {i:e} A)")]
    Runaway { t: f64, v: f64, i: f64 },

    #[error("degenerate circuit: {0}")]
    Degenerate(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("time {t:e} s outside waveform span [0, {duration:e}] s")]
    OutOfRange { t: f64, duration: f64 },

    #[error("unknown boolean function `{0}`")]
    UnknownFunction(String),

    #[error("function {name} takes {expected} inputs, got {got}")]
    Arity { name: String, expected: String, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("linear system is singular")]
    Singular,

    #[error("unsupported weight mapping: {0}")]
    UnsupportedMapping(String),

    #[error("program-and-verify did not converge within {max_iters} iterations (target {target:e} S)")]
    ProgrammingFailure { target: f64, max_iters: usize },

    #[error("too few extrema: need {needed}, found {found}")]
    TooFewExtrema { needed: usize, found: usize },

    #[error("analysis window too short: {0}")]
    WindowTooShort(String),

    #[error("sweep failed at amplitude {amplitude} V: {source}")]
    Sweep { amplitude: f64, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(x: f64, what: &'static str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
