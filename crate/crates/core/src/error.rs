use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty window")]
    EmptyWindow,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("entry at t={t} has norm {norm} exceeding the bound {bound}")]
    BoundViolation { t: i64, norm: f64, bound: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("no analytic contraction certificate: {0}")]
    MissingCertificate(String),

    #[error("window of length {found} is too short, washout requires length > {required}")]
    WindowTooShort { required: usize, found: usize },

    #[error("design matrix is rank deficient ({rank} < {cols}); use a ridge penalty > 0")]
    RankDeficient { rank: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("filter is not flagged causal and time-invariant: {0}")]
    NotCausalTi(String),

    #[error("error budget rejected: {0}")]
    Budget(String),

    #[error("neural fit failed to reach {target:e}: best residual {best:e} at width {width}")]
    FitFailed { target: f64, best: f64, width: usize },

    #[error("invalid kernel spec: {0}")]
    Kernel(String),

    #[error("unsupported kind `{0}`")]
    UnsupportedKind(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
