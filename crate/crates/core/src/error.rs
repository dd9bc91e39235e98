use thiserror::Error;

use crate::net::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid net: {}", join(.0))]
    InvalidNet(Vec<Violation>),

    #[error("max-rectifier net has no heads")]
    EmptyHeads,

    #[error("invalid widths: {0}")]
    InvalidWidths(String),

    #[error("coefficient {index} is negative ({value})")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("expected a plain net, found {0}")]
    NotPlain(&'static str),

    #[error("expected a full-skip net, found {0}")]
    NotFullSkip(&'static str),

    #[error("expected a residual net, found {0}")]
    NotResidual(&'static str),

    #[error("depth {0} is too small; at least two hidden layers are required")]
    DepthTooSmall(usize),

    #[error("head exponent {exponent} exceeds cap {cap}")]
    CapExceeded { exponent: usize, cap: usize },

    #[error("probe direction is zero")]
    ZeroDirection,

    #[error("net file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
