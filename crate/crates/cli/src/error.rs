use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 1.
    #[error("{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// A pipeline stage failed; exit code 2.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: texelatt::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn stage(stage: &str, source: texelatt::Error) -> Self {
        CliError::Stage {
            stage: stage.to_string(),
            source,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(problem: impl Into<String>) -> Self {
        CliError::Validation(vec![problem.into()])
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Stage { .. } | CliError::Io { .. } => 2,
        }
    }
}

/// Tags core errors with the stage they happened in.
pub trait StageContext<T> {
    fn stage(self, stage: &str) -> Result<T, CliError>;
}

impl<T> StageContext<T> for texelatt::Result<T> {
    fn stage(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::stage(stage, e))
    }
}
