//! The `report` verb: a read-only summary of a run directory.

use std::fmt::Write;
use std::path::Path;

use mixlab::io::count_csv_rows;

use crate::error::CliError;
use crate::manifest::Manifest;

/// Problems found when comparing the directory against its manifest.
pub fn integrity(dir: &Path, manifest: &Manifest) -> Vec<String> {
    manifest
        .artifacts
        .iter()
        .filter_map(|a| {
            let path = dir.join(&a.path);
            if !path.is_file() {
                return Some(format!("{} is missing", a.path));
            }
            let expected = a.rows?;
            match count_csv_rows(&path) {
                Ok(found) if found == expected => None,
                Ok(found) => Some(format!(
                    "{}: row-count mismatch, manifest records {expected} rows, file has {found}",
                    a.path
                )),
                Err(e) => Some(format!("{}: unreadable ({e})", a.path)),
            }
        })
        .collect()
}

/// Verdict table plus integrity findings.
pub fn render(dir: &Path, manifest: &Manifest) -> (String, Vec<String>) {
    let mut out = String::new();
    let outcome = if manifest.passed { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "run:      {}", dir.display());
    let _ = writeln!(
        out,
        "scenario: {} ({} {})",
        manifest.scenario, manifest.tool, manifest.version
    );
    let _ = writeln!(
        out,
        "outcome:  {outcome} (exit code {})",
        manifest.exit_code
    );
    let _ = writeln!(out);
    let width = manifest
        .verdicts
        .iter()
        .map(|v| v.check.chars().count())
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        out,
        "{:<6} {:<width$}  {:>14}  {:>2}  {:>14}",
        "status", "check", "measured", "", "threshold"
    );
    for v in &manifest.verdicts {
        let status = match (v.exploratory, v.passed) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        let _ = write!(
            out,
            "{status:<6} {:<width$}  {:>14.6e}  {:>2}  {:>14.6e}",
            v.check,
            v.measured,
            v.comparison.symbol(),
            v.threshold
        );
        if let Some(note) = &v.note {
            let _ = write!(out, "  ({note})");
        }
        out.push('\n');
    }
    let warnings = integrity(dir, manifest);
    let _ = writeln!(out);
    if warnings.is_empty() {
        let _ = writeln!(
            out,
            "integrity: {} artifacts match the manifest",
            manifest.artifacts.len()
        );
    } else {
        let _ = writeln!(out, "integrity: {} warning(s)", warnings.len());
    }
    (out, warnings)
}

pub fn report(dir: &Path) -> Result<(), CliError> {
    let manifest = Manifest::read(dir)?;
    let (text, warnings) = render(dir, &manifest);
    print!("{text}");
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
