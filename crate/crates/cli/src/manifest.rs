use std::path::Path;

use serde::{Deserialize, Serialize};

use mixlab::experiments::Verdict;

use crate::config::RunConfig;
use crate::error::CliError;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Table,
    Diagnostics,
    Snapshot,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub kind: ArtifactKind,
    /// Data rows of a CSV file, header excluded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    /// Number of `f64` values in a snapshot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<usize>,
}

/// Everything needed to reconstruct and audit a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config: RunConfig,
    pub passed: bool,
    pub exit_code: u8,
    pub verdicts: Vec<Verdict>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::Manifest(format!(
                "{} is not a directory",
                dir.display()
            )));
        }
        let path = dir.join(FILE_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Manifest(format!("no readable {FILE_NAME} in {}: {e}", dir.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Manifest(format!("corrupt {}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(FILE_NAME);
        let text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Manifest(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|source| CliError::Output { path, source })
    }
}
