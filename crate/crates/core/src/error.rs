use thiserror::Error;

/// Errors raised by the library. The CLI maps every variant except
/// [`RbcError::Numerical`] to exit code 2.
#[derive(Debug, Error)]
pub enum RbcError {
    #[error("input error: {0}")]
    Input(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical consistency error: {0}")]
    Numerical(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("infeasible atom relations: {0}")]
    InfeasibleRelations(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RbcError {
    pub fn input(msg: impl Into<String>) -> Self {
        RbcError::Input(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        RbcError::Io { path: path.display().to_string(), source }
    }

    /// True for errors caused by the caller (bad input, limits, preconditions).
    pub fn is_usage(&self) -> bool {
        !matches!(self, RbcError::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, RbcError>;
