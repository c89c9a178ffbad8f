use thiserror::Error;

/// Errors raised while building or evaluating information measures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("parameter `{name}` = {value} out of admissible range: {reason}")]
    ParameterRange {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("functional `{name}` failed the convexity scan at u = {at}")]
    NotConvex { name: String, at: f64 },

    #[error("{what} of `{name}` is singular at u = {at}")]
    Singular {
        name: String,
        what: &'static str,
        at: f64,
    },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parameter theta = {0} is not admissible (must be > 0)")]
    Theta(f64),

    #[error("support violation: p0 vanishes where p1 > 0 (at x = {0:?})")]
    Support(Vec<f64>),

    #[error("quadrature did not converge: error {error:e} > tolerance {tolerance:e} after {subdivisions} subdivisions")]
    Quadrature {
        error: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("{what} matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd {
        what: &'static str,
        min_eigenvalue: f64,
    },

    #[error(
        "finite-difference stencil leaves the admissible range: theta0 = {theta}, span = {span}"
    )]
    Stencil { theta: f64, span: f64 },

    #[error("pde `{pde}` is not compatible with the density: max |residual| = {max_residual:e}")]
    PdeGate { pde: String, max_residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn range(name: &str, value: f64, reason: impl Into<String>) -> Self {
        Error::ParameterRange {
            name: name.to_string(),
            value,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
