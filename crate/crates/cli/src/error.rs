use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("unknown preset `{0}`; available presets: {1}")]
    UnknownPreset(String, String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Simulation(#[from] mdpsm_core::Error),
}

impl CliError {
    pub fn spec(line: usize, message: impl Into<String>) -> Self {
        CliError::Spec { line, message: message.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 for problems with the request itself, 1 for failures while running it.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec { .. } | CliError::MissingField(_) | CliError::UnknownPreset(..) => 2,
            CliError::Io { .. } | CliError::Simulation(_) => 1,
        }
    }
}
