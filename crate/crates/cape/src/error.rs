use std::path::PathBuf;

use cape_core::ErrorKind;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: missing column `{column}` (looked for `{header}`)")]
    Schema {
        path: PathBuf,
        column: &'static str,
        header: String,
    },

    #[error("{path}: row {row}, column `{column}`: {reason}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Core(#[from] cape_core::Error),

    #[error("{0}")]
    Failed(String),
}

impl AppError {
    /// Process exit status: 2 for configuration problems, 3 for bad data,
    /// 4 for numerical or constraint failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Io { .. } => 2,
            AppError::Schema { .. } | AppError::Parse { .. } | AppError::Csv { .. } => 3,
            AppError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            },
            AppError::Failed(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}
