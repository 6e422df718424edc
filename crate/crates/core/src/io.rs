//! Snapshot and table persistence.
//!
//! A snapshot is a flat array of little-endian `f64` values, one per interior
//! node in lexicographic order (axis 0 fastest), stored as
//! `<root>/k_<k>/m_<m:06>.f64` with a JSON sidecar of the same stem.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolve::Trajectory;
use crate::grid::Grid;

pub const SNAPSHOT_LAYOUT: &str =
    "f64 little-endian, interior nodes lexicographic with axis 0 fastest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub k: f64,
    pub m: usize,
    #[serde(rename = "N")]
    pub cells: usize,
    pub n: usize,
    pub s: f64,
    #[serde(rename = "τ")]
    pub tau: f64,
    pub t: f64,
    pub len: usize,
    pub layout: String,
}

/// Directory name of a rung, e.g. `k_64` or `k_1.5`.
pub fn rung_dir(k: f64) -> String {
    format!("k_{k}")
}

/// Writes every `stride`-th step (always including the last) of `traj`.
/// Returns the paths of the data files.
pub fn write_snapshots(
    root: &Path,
    traj: &Trajectory,
    grid: &Grid,
    s: f64,
    stride: usize,
) -> Result<Vec<PathBuf>> {
    if stride == 0 {
        return Err(invalid("snapshot stride must be at least 1"));
    }
    let dir = root.join(rung_dir(traj.k));
    fs::create_dir_all(&dir)?;
    let first = (traj.start_time / traj.tau).round() as usize;
    let last = traj.steps();
    let mut written = Vec::new();
    for (m, u) in traj.fields.iter().enumerate() {
        if m % stride != 0 && m != last {
            continue;
        }
        let global = first + m;
        let path = dir.join(format!("m_{global:06}.f64"));
        let mut w = BufWriter::new(File::create(&path)?);
        for v in u {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        let meta = SnapshotMeta {
            k: traj.k,
            m: global,
            cells: grid.cells_per_axis(),
            n: grid.dim(),
            s,
            tau: traj.tau,
            t: traj.time(m),
            len: u.len(),
            layout: SNAPSHOT_LAYOUT.into(),
        };
        fs::write(
            path.with_extension("json"),
            serde_json::to_string_pretty(&meta)?,
        )?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a snapshot and its sidecar.
pub fn read_snapshot(path: &Path) -> Result<(Vec<f64>, SnapshotMeta)> {
    let meta: SnapshotMeta =
        serde_json::from_str(&fs::read_to_string(path.with_extension("json"))?)?;
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * meta.len {
        return Err(Error::DimensionMismatch {
            expected: 8 * meta.len,
            actual: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect();
    Ok((values, meta))
}

/// Named numeric table written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Writes the table; returns the number of data rows.
    pub fn write_csv(&self, path: &Path) -> Result<usize> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(self.rows.len())
    }
}

/// Per-step diagnostics of a trajectory as a table.
pub fn diagnostics_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(
        format!("diagnostics_{}", rung_dir(traj.k)),
        &[
            "step",
            "time",
            "min",
            "max",
            "l2",
            "linear_iterations",
            "fixed_point_iterations",
        ],
    );
    for d in &traj.diagnostics {
        t.push(vec![
            d.step as f64,
            d.time,
            d.min,
            d.max,
            d.l2,
            d.linear_iterations as f64,
            d.fixed_point_iterations as f64,
        ]);
    }
    t
}

/// Number of data rows (header excluded) in a CSV file.
pub fn count_csv_rows(path: &Path) -> Result<usize> {
    let mut r = csv::Reader::from_path(path)?;
    let mut n = 0;
    for rec in r.records() {
        rec?;
        n += 1;
    }
    Ok(n)
}
