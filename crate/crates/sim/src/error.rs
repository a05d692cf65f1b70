use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] nsch_core::Error),
    #[error("{0}")]
    Run(Box<nsch_core::sim::RunError>),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Parse { path: path.into(), message: message.into() }
    }
}

impl From<nsch_core::sim::RunError> for SimError {
    fn from(e: nsch_core::sim::RunError) -> Self {
        Self::Run(Box::new(e))
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
