use thiserror::Error;

/// Errors raised by every engine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate partial correlation: |rho_{pair}| = 1")]
    Degenerate { pair: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid tour spec: {0}")]
    InvalidSpec(String),

    #[error(
        "quadrature did not reach tolerance {tol:e} within {max_subdivisions} subdivisions \
         (error estimate {error:e})"
    )]
    ConvergenceFailure {
        tol: f64,
        error: f64,
        max_subdivisions: usize,
    },

    #[error("Bessel series did not converge by order {k} (rho = {rho})")]
    SeriesDivergence { rho: f64, k: usize },

    #[error("ill-conditioned extrapolation fit: {0}")]
    IllConditionedFit(String),

    #[error("covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    InvalidCovariance { min_eigenvalue: f64 },

    #[error("tour product overflowed f64 range")]
    Overflow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{engine} engine failed: {source}")]
    Engine {
        engine: String,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_engine(self, engine: &str) -> Self {
        Error::Engine {
            engine: engine.to_string(),
            source: Box::new(self),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
