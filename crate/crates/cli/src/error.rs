use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A configuration value is invalid. `field` is the config key.
    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("cannot read config file {}: {source}", path.display())]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse config file {}: {message}", path.display())]
    ParseConfig { path: PathBuf, message: String },

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: wsnsim::Error,
    },

    #[error(transparent)]
    Sim(wsnsim::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn from_core(err: wsnsim::Error) -> Self {
        match err {
            wsnsim::Error::InvalidArgument { field, reason } => CliError::config(field, reason),
            other => CliError::Sim(other),
        }
    }

    /// Maps a protocol parameter error onto its config key, which carries the
    /// protocol name as a prefix (`leach_p`, `fuzzy_m`). `k` and
    /// `min_ch_separation` are shared keys.
    pub(crate) fn from_protocol(protocol: &str, err: wsnsim::Error) -> Self {
        match err {
            wsnsim::Error::InvalidArgument { field, reason } => {
                let key = match field {
                    "k" | "min_ch_separation" => field.to_string(),
                    _ => format!("{protocol}_{field}"),
                };
                CliError::config(key, reason)
            }
            other => CliError::Sim(other),
        }
    }

    /// 2 for bad input, 1 for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. }
            | CliError::ReadConfig { .. }
            | CliError::ParseConfig { .. } => 2,
            CliError::Output { .. } | CliError::Sim(_) => 1,
        }
    }
}
