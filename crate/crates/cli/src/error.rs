use thiserror::Error;

/// Exit codes of the `cpsis` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const INTEGRATION: i32 = 3;
    pub const NOT_APPLICABLE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Model(#[from] cpsis::Error),

    #[error("cannot parse config {path}: {source}")]
    ConfigParse { path: String, source: toml::de::Error },

    #[error("cannot serialize config: {0}")]
    ConfigWrite(#[from] toml::ser::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use cpsis::Error as E;
        match self {
            CliError::Validation(_) | CliError::ConfigParse { .. } => exit::VALIDATION,
            CliError::Model(e) => match e {
                E::EmptyInput
                | E::NonPositiveEntry { .. }
                | E::DuplicateDegree(_)
                | E::DegenerateDistribution
                | E::InvalidRate { .. }
                | E::ClassCountMismatch { .. }
                | E::CountExceedsClass { .. }
                | E::OutOfDomain { .. }
                | E::InvalidConfig(_)
                | E::NotSquare { .. } => exit::VALIDATION,
                E::SusceptibleStubsExhausted { .. }
                | E::StepCapExceeded { .. }
                | E::StepSizeUnderflow { .. }
                | E::NoConvergence { .. } => exit::INTEGRATION,
                E::BelowThreshold { .. }
                | E::BracketFailure { .. }
                | E::VariantNotApplicable { .. }
                | E::RootNotBracketed { .. } => exit::NOT_APPLICABLE,
            },
            CliError::ConfigWrite(_) | CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => exit::IO,
        }
    }
}
