use std::path::{Path, PathBuf};

/// Errors of the command line layer. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("training diverged: {0}")]
    NonFinite(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("reference data: {0}")]
    Reference(String),
    #[error("run directory {} is locked by another process", .0.display())]
    Locked(PathBuf),
    #[error(transparent)]
    Core(simple_pinn_core::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for anything wrong with the configuration, 3 for a diverged run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonFinite(_) => 3,
            CliError::Core(e) => match e {
                simple_pinn_core::Error::NonFinite { .. } => 3,
                simple_pinn_core::Error::Config(_)
                | simple_pinn_core::Error::UnknownCase(_)
                | simple_pinn_core::Error::EmptyDomain => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

impl From<simple_pinn_core::Error> for CliError {
    fn from(e: simple_pinn_core::Error) -> Self {
        match e {
            simple_pinn_core::Error::NonFinite { .. } => CliError::NonFinite(e.to_string()),
            e => CliError::Core(e),
        }
    }
}
