use thiserror::Error;

/// Failure of a CLI run, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input files, configs or arguments (exit 2).
    #[error("{0}")]
    Input(String),
    /// Numerical breakdown such as a failed factorization (exit 3).
    #[error("{0}")]
    Numeric(String),
    /// A request the model cannot serve, e.g. an unsupported derivative order (exit 4).
    #[error("{0}")]
    Capability(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Capability(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<krr_deriv::Error> for CliError {
    fn from(e: krr_deriv::Error) -> Self {
        use krr_deriv::Error as E;
        let msg = e.to_string();
        match e {
            E::FactorizationFailed { .. }
            | E::DegenerateLeverage { .. }
            | E::NonContractive { .. }
            | E::RankDeficientWindow { .. } => CliError::Numeric(msg),
            E::UnsupportedDerivativeOrder { .. } | E::SmoothnessViolation { .. } | E::MissingSigma2 => {
                CliError::Capability(msg)
            }
            E::DomainViolation { .. }
            | E::InvalidParameter(_)
            | E::DimensionMismatch { .. }
            | E::EmptyGrid(_)
            | E::Parse(_)
            | E::InvalidConfig(_) => CliError::Input(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
