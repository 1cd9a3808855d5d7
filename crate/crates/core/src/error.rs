use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate metric")]
    DegenerateMetric,
    #[error("undefined pinching (zero scalar curvature)")]
    UndefinedPinching,
    #[error("not a Weyl tensor (Ricci contraction {0:.3e})")]
    NotWeyl(f64),
    #[error("non-symmetric endomorphism (asymmetry {0:.3e})")]
    NonSymmetric(f64),
    #[error("degenerate profile at node {node}: {what}")]
    DegenerateProfile { node: usize, what: String },
    #[error("non-finite field at node {0}")]
    NonFiniteField(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("too few samples: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("missing field: {0}")]
    MissingField(&'static str),
    #[error("field {field} has {got} entries, expected {need}")]
    LengthMismatch { field: &'static str, got: usize, need: usize },
    #[error("point is closer than {margin:.3e} to the chart boundary")]
    OutsideChart { margin: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
