use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point coordinate {value} outside kernel domain {domain}")]
    DomainViolation { value: f64, domain: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("derivative orders a={a:?}, b={b:?} not offered by kernel `{kernel}`")]
    UnsupportedDerivativeOrder {
        a: Vec<usize>,
        b: Vec<usize>,
        kernel: String,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("Cholesky factorization failed after jitter escalation (last jitter {jitter:e})")]
    FactorizationFailed { jitter: f64 },

    #[error("noise variance sigma2 is required for variance prediction")]
    MissingSigma2,

    #[error("empty candidate grid for {0}")]
    EmptyGrid(&'static str),

    #[error("leverage H[{index}] = {leverage} is degenerate (lambda too small)")]
    DegenerateLeverage { index: usize, leverage: f64 },

    #[error("smoothness alpha = {alpha} must exceed m + 1/2 for derivative order m = {order}")]
    SmoothnessViolation { alpha: f64, order: usize },

    #[error("bound is non-informative: C(n, kappa) = {c} >= 1")]
    NonContractive { c: f64 },

    #[error("local window at x = {x} is rank deficient")]
    RankDeficientWindow { x: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
