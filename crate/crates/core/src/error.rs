use thiserror::Error;

/// Errors raised by the link model, the optimiser and the config layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model was assembled from inconsistent pieces (missing amplifier,
    /// net ISRS gain exceeding span loss, empty PCE curve, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Every problem found while validating a run configuration.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    /// The span solver produced a non-finite or non-positive power it could
    /// not recover from by step halving.
    #[error("numerical failure at z = {z_km:.4} km (step {step}, h = {h_km:.3e} km): {detail}")]
    Numerical {
        z_km: f64,
        step: usize,
        h_km: f64,
        detail: String,
    },

    /// Objective evaluation failed inside the launch optimiser.
    #[error("objective evaluation failed at launch nodes {params:?} dBm: {source}")]
    Objective {
        params: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } => true,
            Error::Objective { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
