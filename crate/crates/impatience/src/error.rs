use std::path::{Path, PathBuf};

/// Failures of the CLI and its file formats, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// A `--check` or asymptotic threshold was not met.
    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Core(#[from] impatience_core::Error),
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, reason: impl ToString) -> Self {
        AppError::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }

    /// 1 usage/config, 2 failed check, 3 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::CheckFailed(_) => 2,
            AppError::Core(impatience_core::Error::Divergence(_)) => 3,
            _ => 1,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(AppError::Usage("x".into()).exit_code(), 1);
        assert_eq!(AppError::CheckFailed("x".into()).exit_code(), 2);
        assert_eq!(AppError::Core(impatience_core::Error::Divergence("nan".into())).exit_code(), 3);
        assert_eq!(AppError::Core(impatience_core::Error::Uncalibrated).exit_code(), 1);
    }
}
