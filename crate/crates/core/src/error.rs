use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("ill-conditioned system (condition estimate {estimate:.3e}); the energy may be near a resonance, try shifting it")]
    IllConditioned { estimate: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for exit codes and error records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Schema,
    Solver,
    Precondition,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) | Error::Shape(_) | Error::Format(_) => ErrorKind::Schema,
            Error::Singular(_) | Error::NoConvergence { .. } | Error::IllConditioned { .. } => {
                ErrorKind::Solver
            }
            Error::Precondition(_) => ErrorKind::Precondition,
            Error::Io(_) => ErrorKind::Io,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Singular(_) => "singular",
            Error::Shape(_) => "shape",
            Error::Precondition(_) => "precondition",
            Error::NoConvergence { .. } => "no_convergence",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}
