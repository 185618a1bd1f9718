use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rydwire::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("points file: {0}")]
    Points(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Core(e) => e.kind(),
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Points(_) => "points_file",
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Record { error: self.kind(), message: self.to_string() }).expect("record serializes")
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Points(e.to_string())
    }
}
