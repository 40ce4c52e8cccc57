use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("estimate rejected: {0}")]
    Rejected(String),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        Self::Config {
            path: if path.is_empty() { ".".into() } else { path.into() },
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Rejected(_) => 3,
            Self::VerifyFailed(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

/// Parameter errors of a run trace back to the document; everything else
/// means the ensemble produced no usable estimate.
impl From<lyapunov_lab::Error> for CliError {
    fn from(e: lyapunov_lab::Error) -> Self {
        use lyapunov_lab::Error as E;
        match e {
            E::InvalidParameter { name, reason } => Self::config(name, reason),
            E::InvalidKernel { .. } => Self::config("process.kernel", e.to_string()),
            E::DimensionMismatch { .. } => Self::config("eta_grid", e.to_string()),
            other => Self::Rejected(other.to_string()),
        }
    }
}
