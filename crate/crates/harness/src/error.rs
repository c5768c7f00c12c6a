use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type HarnessResult<T> = Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] apmc_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Plan {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("serializing trace: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        HarnessError::Csv {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for an exhausted
    /// simulation budget, 3 for file-system and encoding failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Plan { .. } => 1,
            HarnessError::Core(apmc_core::Error::BudgetExhausted { .. }) => 2,
            HarnessError::Core(_) => 1,
            HarnessError::Io { .. } | HarnessError::Csv { .. } | HarnessError::Json(_) => 3,
        }
    }
}
