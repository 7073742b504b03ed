use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("derivative requested at the origin (|x| = {norm:e})")]
    SingularPoint { norm: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate Randers norm: b^T A^-1 b = {value} must be < 1")]
    DegenerateNorm { value: f64 },

    #[error("{what} = {value} is out of range ({expected})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value in {what}{}", simplex.map(|s| format!(" on simplex {s}")).unwrap_or_default())]
    NumericalDomain {
        what: String,
        simplex: Option<usize>,
    },

    #[error("positivity violated: interior vertex {vertex} has value {value:e}")]
    Positivity { vertex: usize, value: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parameter regime: {0}")]
    ParameterRegime(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by user configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidInput(_)
                | Error::NotSymmetric { .. }
                | Error::NotPositiveDefinite
                | Error::DegenerateNorm { .. }
                | Error::OutOfRange { .. }
        )
    }
}
