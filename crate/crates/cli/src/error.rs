use contilearn_core::Error as CoreError;
use thiserror::Error;

/// Failures surfaced by the commands, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure in {0}")]
    Numerical(String),
    #[error("unknown algebra {0:?} (known: complex, quaternion)")]
    UnknownAlgebra(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) | CliError::UnknownAlgebra(_) => 1,
            CliError::Data(_) | CliError::Write { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(msg) => CliError::Config(msg),
            e if e.is_data_error() => CliError::Data(e.to_string()),
            CoreError::Numerical { module, message } => {
                CliError::Numerical(format!("{module}: {message}"))
            }
            e @ (CoreError::NotPositiveDefinite { .. } | CoreError::NotSymmetric(_)) => {
                CliError::Numerical(format!("linalg: {e}"))
            }
            e @ CoreError::InvalidPrecision(_) => CliError::Numerical(format!("model: {e}")),
            e @ CoreError::MissingIdentity => CliError::Numerical(format!("algebra: {e}")),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
