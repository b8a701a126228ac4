use fnwl_core::Error as CoreError;

/// Process exit statuses.
pub mod code {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const FORMAT: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => code::USAGE,
            CliError::Format(_) => code::FORMAT,
            CliError::Core { source, .. } => match source {
                CoreError::Config(_) | CoreError::Design(_) | CoreError::Param(_) | CoreError::Split(_) => code::USAGE,
                CoreError::NonFinite(_) | CoreError::Fit(_) | CoreError::Metric(_) => code::NUMERIC,
                _ => code::FORMAT,
            },
        }
    }
}

pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: what.into(),
            source,
        })
    }
}
