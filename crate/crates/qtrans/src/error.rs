use std::path::Path;

use crate::problem::ParseError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: qtrans_core::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn core(context: impl Into<String>) -> impl FnOnce(qtrans_core::Error) -> Self {
        let context = context.into();
        move |source| Error::Core { context, source }
    }
}
