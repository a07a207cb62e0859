//! Exit codes and machine-readable error records.

use serde::Serialize;

use scatlab::ErrorKind;

pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] scatlab::Error),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub code: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Schema => EXIT_SCHEMA,
                ErrorKind::Solver => EXIT_SOLVER,
                ErrorKind::Precondition => EXIT_PRECONDITION,
                ErrorKind::Io => EXIT_IO,
            },
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (kind, code) = match self {
            CliError::Schema(_) => ("schema", "schema"),
            CliError::Io(_) => ("io", "io"),
            CliError::Core(e) => (
                match e.kind() {
                    ErrorKind::Schema => "schema",
                    ErrorKind::Solver => "solver",
                    ErrorKind::Precondition => "precondition",
                    ErrorKind::Io => "io",
                },
                e.code(),
            ),
        };
        ErrorRecord {
            kind,
            code,
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}
