use genmetrics_core::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: genmetrics_core::Error,
    },
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 2 config, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core { source, .. } => match source {
                genmetrics_core::Error::InvalidConfig(_) => 2,
                other => match other.kind() {
                    ErrorKind::Numerical => 4,
                    ErrorKind::Data | ErrorKind::Io => 3,
                },
            },
            CliError::Output(_) => 3,
        }
    }

    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            4 => "numerical",
            _ => "data",
        }
    }
}

/// Attaches file context to core errors.
pub trait Context<T> {
    fn context(self, ctx: impl std::fmt::Display) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, genmetrics_core::Error> {
    fn context(self, ctx: impl std::fmt::Display) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: ctx.to_string(),
            source,
        })
    }
}
