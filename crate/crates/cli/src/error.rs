use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] mingraph::Error),
}

impl CliError {
    /// 1 assertion failure, 2 solver non-convergence, 3 invalid input.
    pub fn exit_code(&self) -> u8 {
        use mingraph::Error as E;
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidInput(_)
                | E::DimensionMismatch { .. }
                | E::Domain { .. }
                | E::Stencil(_)
                | E::Format(_)
                | E::Io(_) => 3,
                E::Singular(_) => 2,
                E::Sampling { .. } | E::DilationViolated { .. } | E::Quadrature(_) => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
