use gesture_core::Error;

/// Exit codes: 2 usage/validation/I-O, 3 format, 4 numeric or lost track.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Error::Format(_) => 3,
                Error::Numeric(_) | Error::LostTrack(_) | Error::DegenerateFusion => 4,
                Error::InvalidInput(_) | Error::EmptyRegion(_) | Error::UnsupportedConfig(_) | Error::Io(_) => 2,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
