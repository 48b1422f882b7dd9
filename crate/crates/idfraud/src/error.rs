use std::io;
use std::path::{Path, PathBuf};

use idfraud_core::ErrorKind;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{}", describe_missing(.missing))]
    Completeness { missing: Vec<(String, String)> },

    #[error("{}:{line}: score {value} is outside [0, 1]", path.display())]
    ScoreOutOfRange { path: PathBuf, line: u64, value: f64 },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] idfraud_core::Error),
}

fn describe_missing(missing: &[(String, String)]) -> String {
    let shown: Vec<String> = missing.iter().take(5).map(|(a, b)| format!("({a}, {b})")).collect();
    let more = if missing.len() > 5 { ", ..." } else { "" };
    format!("{} required scores are missing: {}{more}", missing.len(), shown.join(", "))
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn parse(path: impl AsRef<Path>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse { path: path.as_ref().to_path_buf(), line, message: message.into() }
    }

    /// Process exit code: parse 2, completeness 3, domain 4, I/O 5, other 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 2,
            Error::Completeness { .. } => 3,
            Error::ScoreOutOfRange { .. } => 4,
            Error::Io { .. } => 5,
            Error::Config(_) => 1,
            Error::Core(e) => match e.kind() {
                ErrorKind::Ingestion => 3,
                ErrorKind::Domain | ErrorKind::Fit => 4,
                _ => 1,
            },
        }
    }
}
