//! Library surface of the CLI: configuration, file formats, and the
//! subcommand implementations, shared between the binary and its tests.

pub mod commands;
pub mod config;
pub mod outputs;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ringdelay::Error> for CliError {
    fn from(e: ringdelay::Error) -> Self {
        match e {
            ringdelay::Error::Config(_)
            | ringdelay::Error::DimensionMismatch { .. }
            | ringdelay::Error::NonFinite(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
