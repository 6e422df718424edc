//! The `run` verb: executes a scenario and persists everything it produced.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use mixlab::experiments::{run_problem, run_scenario, Plot, ScenarioReport, Series};
use mixlab::io::{diagnostics_table, rung_dir, write_snapshots, Table};

use crate::config::{RunConfig, Target};
use crate::error::CliError;
use crate::manifest::{Artifact, ArtifactKind, Manifest};
use crate::svg;

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

struct Writer {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn csv(&mut self, dir: &str, table: &Table, kind: ArtifactKind) -> Result<(), CliError> {
        let folder = self.root.join(dir);
        create_dir(&folder)?;
        let path = folder.join(format!("{}.csv", table.name));
        let rows = table.write_csv(&path)?;
        self.artifacts.push(Artifact {
            path: relative(&self.root, &path),
            kind,
            rows: Some(rows),
            values: None,
        });
        Ok(())
    }

    fn plot(&mut self, plot: &Plot) -> Result<(), CliError> {
        let folder = self.root.join("plots");
        create_dir(&folder)?;
        let path = folder.join(format!("{}.svg", plot.name));
        fs::write(&path, svg::render(plot)).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        self.artifacts.push(Artifact {
            path: relative(&self.root, &path),
            kind: ArtifactKind::Plot,
            rows: None,
            values: None,
        });
        Ok(())
    }
}

/// Sup norm against time for every persisted trajectory.
fn sup_vs_time(report: &ScenarioReport) -> Option<Plot> {
    if report.trajectories.is_empty() {
        return None;
    }
    Some(Plot {
        name: "sup_vs_time".into(),
        title: format!("{}: sup norm against time", report.name),
        x_label: "t".into(),
        y_label: "max u".into(),
        log_x: false,
        log_y: false,
        series: report
            .trajectories
            .iter()
            .map(|(_, t)| Series {
                label: format!("k = {}", t.k),
                points: t.diagnostics.iter().map(|d| (d.time, d.max)).collect(),
            })
            .collect(),
    })
}

/// Runs `config` and writes the run directory `out`.
pub fn execute(config: &RunConfig, out: &Path) -> Result<Manifest, CliError> {
    let report = match &config.target {
        Target::Scenario { name } => run_scenario(name, &config.problem)?,
        Target::Problem => run_problem(&config.problem)?,
    };
    create_dir(out)?;
    let mut writer = Writer {
        root: out.to_path_buf(),
        artifacts: Vec::new(),
    };

    let resolved = out.join("config.toml");
    fs::write(&resolved, config.to_toml()).map_err(|source| CliError::Output {
        path: resolved,
        source,
    })?;

    for table in &report.tables {
        writer.csv("tables", table, ArtifactKind::Table)?;
    }

    let mut per_level: HashMap<u64, usize> = HashMap::new();
    for (_, t) in &report.trajectories {
        *per_level.entry(t.k.to_bits()).or_default() += 1;
    }
    let stride = config.stride();
    for (i, (grid, traj)) in report.trajectories.iter().enumerate() {
        let unique = per_level[&traj.k.to_bits()] == 1;
        let mut table = diagnostics_table(traj);
        let snapshots = if unique {
            out.join("snapshots")
        } else {
            table.name = format!("diagnostics_{i}_{}", rung_dir(traj.k));
            out.join("snapshots").join(format!("set_{i}"))
        };
        writer.csv("diagnostics", &table, ArtifactKind::Diagnostics)?;
        for path in write_snapshots(&snapshots, traj, grid, config.problem.s, stride)? {
            writer.artifacts.push(Artifact {
                path: relative(out, &path),
                kind: ArtifactKind::Snapshot,
                rows: None,
                values: Some(grid.interior_count()),
            });
        }
    }

    if config.emit_plots {
        for plot in report.plots.iter().chain(sup_vs_time(&report).as_ref()) {
            writer.plot(plot)?;
        }
    }

    let passed = report.passed();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: report.name.clone(),
        config: config.clone(),
        passed,
        exit_code: if passed { 0 } else { 1 },
        verdicts: report.verdicts.clone(),
        artifacts: writer.artifacts,
    };
    manifest.write(out)?;
    Ok(manifest)
}
