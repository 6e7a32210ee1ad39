use std::path::Path;

use thiserror::Error;

use crate::config::key_for_parameter;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration; `path` is the dotted key (or a line reference).
    #[error("{path}: {reason}")]
    Validation { path: String, reason: String },

    #[error(transparent)]
    Solver(fkpp_core::Error),

    /// Two bundles that cannot be compared.
    #[error("incompatible bundles: {0}")]
    Incompatible(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn validation(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Validation {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for anything the user can fix in the configuration, 3 when a solver
    /// gave up, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::Incompatible(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<fkpp_core::Error> for CliError {
    fn from(e: fkpp_core::Error) -> Self {
        use fkpp_core::Error as E;
        match e {
            E::InvalidParameter { name, reason } => CliError::Validation {
                path: key_for_parameter(name),
                reason,
            },
            E::Unstable { dt, bound } => CliError::Validation {
                path: "numerics.dt".into(),
                reason: format!("time step {dt} exceeds the stability bound {bound}"),
            },
            other => CliError::Solver(other),
        }
    }
}
