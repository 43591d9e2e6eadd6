use std::path::PathBuf;

/// Errors of the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{module}: {source}")]
    Numerical { module: &'static str, source: cwm_core::Error },
}

impl Error {
    /// Process exit code: 1 for numerical failures, 2 for usage and input errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
    }
}

/// Tags core errors with the module that raised them.
pub(crate) trait Tag<T> {
    fn tag(self, module: &'static str) -> Result<T>;
}

impl<T> Tag<T> for cwm_core::Result<T> {
    fn tag(self, module: &'static str) -> Result<T> {
        self.map_err(|source| Error::Numerical { module, source })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
