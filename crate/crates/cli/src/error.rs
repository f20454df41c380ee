use qmimo_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                CoreError::Config(_)
                | CoreError::InvalidAdcBits
                | CoreError::PilotTooShort { .. }
                | CoreError::TooFewTrials { .. }
                | CoreError::EmptySweep
                | CoreError::UnorderedSweep
                | CoreError::UnknownAxis(_) => EXIT_USAGE,
                _ => EXIT_FAILED,
            },
        }
    }
}

impl From<qmimo_core::ConfigError> for CliError {
    fn from(e: qmimo_core::ConfigError) -> Self {
        CliError::Core(e.into())
    }
}
