use thiserror::Error;

use crate::vi::SweepTrace;

/// Errors raised by the inference engines and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("truncated normal has vanishing mass on [{lower}, {upper}] (mean {mean}, sd {sd})")]
    VanishingMass {
        mean: f64,
        sd: f64,
        lower: f64,
        upper: f64,
    },

    #[error("constraint violated after updating coordinate {coordinate}: {detail}")]
    ConstraintViolation { coordinate: usize, detail: String },

    #[error("truncation bounds inverted for coefficient {index}: lower {lower} > upper {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },

    #[error("no convergence after {sweeps} sweeps")]
    NotConverged { sweeps: usize, trace: Box<SweepTrace> },

    #[error("divergence at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    /// An engine failure together with the sweeps recorded before it.
    #[error("{source} (after {} recorded sweeps)", trace.len())]
    Engine { source: Box<Error>, trace: Box<SweepTrace> },

    #[error("signal length {len} is not a multiple of {block} (pad to the next multiple of 2^levels)")]
    Length { len: usize, block: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Trace recorded before the failure, if the error carries one.
    pub fn trace(&self) -> Option<&SweepTrace> {
        match self {
            Error::NotConverged { trace, .. } | Error::Engine { trace, .. } => Some(trace),
            _ => None,
        }
    }

    /// Attaches a trace unless one is already present.
    pub fn with_trace(self, trace: SweepTrace) -> Self {
        match self {
            e @ (Error::NotConverged { .. } | Error::Engine { .. }) => e,
            e => Error::Engine {
                source: Box::new(e),
                trace: Box::new(trace),
            },
        }
    }

    /// The innermost error, looking through trace wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Engine { source, .. } => source.root(),
            e => e,
        }
    }
}
