use ovbsense_core::Error as CoreError;
use thiserror::Error;

/// Failures surfaced by the command-line tool, each tied to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("estimation error: {0}")]
    Estimation(String),

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
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Estimation(_) => 4,
            // output locations come from the config
            CliError::Io { .. } => 2,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Classifies an error raised while fitting or analysing.
    pub fn from_estimation(e: CoreError) -> Self {
        match e {
            CoreError::InvalidHyperparameter(_)
            | CoreError::UnsupportedFamily { .. }
            | CoreError::InvalidEps(_)
            | CoreError::InvalidFoldCount { .. }
            | CoreError::InvalidConfig(_)
            | CoreError::UnknownVariable(_)
            | CoreError::DegenerateShortModel => CliError::Config(e.to_string()),
            _ => CliError::Estimation(e.to_string()),
        }
    }

    /// Classifies an error raised while turning a table into a dataset.
    pub fn from_data(e: CoreError) -> Self {
        match e {
            CoreError::UnknownVariable(name) => CliError::Config(format!("column '{name}' not found in the data")),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
