use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BouncerError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed file: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("propagation: {0}")]
    Propagation(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Core(#[from] fermi_core::Error),
}

impl BouncerError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        BouncerError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| BouncerError::Io { path, source }
    }
}

pub type Result<T, E = BouncerError> = std::result::Result<T, E>;

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for BouncerError {
            fn from(e: $t) -> Self {
                BouncerError::Core(e.into())
            }
        }
    )*};
}

from_core!(
    fermi_core::ParamError,
    fermi_core::WindowError,
    fermi_core::ClassicalError,
    fermi_core::QuantumError,
    fermi_core::DiagnosticsError
);
