use std::fmt;
use std::path::PathBuf;

use mixlab::Error as CoreError;

/// Schema violation in a run configuration, anchored to a line when the
/// offending text has one.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Schema { path: PathBuf, source: SchemaError },
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Manifest(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for anything wrong with the input, 3 for a run that aborted.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Unreadable { .. } | CliError::Manifest(_) => 2,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_)
                | CoreError::UnknownScenario { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::Csv(_) => 2,
                _ => 3,
            },
            CliError::Output { .. } => 3,
        }
    }
}
