use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input: exit 2.
    #[error("input error: {0}")]
    Input(String),

    /// A numerical contract did not hold: exit 3.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Budget exhausted before a decision: exit 4.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Contract(_) => 3,
            CliError::Inconclusive(_) => 4,
        }
    }
}

impl From<rankpert::Error> for CliError {
    fn from(e: rankpert::Error) -> Self {
        use rankpert::Error as E;
        match e {
            E::Pole { .. } | E::EigenvalueOnCurve { .. } | E::ShiftInDiagonal { .. } | E::NoRotation { .. } => {
                CliError::Contract(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
