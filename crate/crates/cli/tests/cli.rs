use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const LADDER: &str = r#"[run]
scenario = "monotone_ladder"
emit_plots = true
seed = 0

[grid]
n = 1
N = 48

[operator]
s = 0.5

[physics]
gamma = 2.0
f = 1.0
u0 = 0.0
T = 0.3
tau = 0.01

[ladder]
levels = [1, 2, 4, 8]
"#;

fn mixlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Runs the ladder config into `<tmp>/out` and returns the run directory.
fn ladder_run(tmp: &TempDir) -> PathBuf {
    let config = write_config(tmp.path(), LADDER);
    let out = tmp.path().join("out");
    let o = mixlab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    out
}

#[test]
fn ladder_run_writes_one_snapshot_set_per_rung() {
    let tmp = TempDir::new().unwrap();
    let out = ladder_run(&tmp);
    assert!(out.join("manifest.json").is_file());
    for k in [1, 2, 4, 8] {
        let dir = out.join("snapshots").join(format!("k_{k}"));
        let count = fs::read_dir(&dir)
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .path()
                    .extension()
                    .is_some_and(|x| x == "f64")
            })
            .count();
        assert!(count >= 2, "{} has {count} snapshots", dir.display());
        assert!(out
            .join("diagnostics")
            .join(format!("diagnostics_k_{k}.csv"))
            .is_file());
    }
    assert!(out.join("plots").join("sup_vs_time.svg").is_file());
}

#[test]
fn manifest_reproduces_the_config() {
    let tmp = TempDir::new().unwrap();
    let out = ladder_run(&tmp);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "monotone_ladder");
    assert_eq!(manifest["exit_code"], 0);

    // Rerunning the resolved config gives the same verdicts.
    let rerun = tmp.path().join("rerun");
    let o = mixlab(&[
        "run",
        "--config",
        out.join("config.toml").to_str().unwrap(),
        "--out",
        rerun.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let again: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(rerun.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["verdicts"], again["verdicts"]);
    assert_eq!(manifest["config"]["problem"], again["config"]["problem"]);
    assert_eq!(
        fs::read(out.join("diagnostics/diagnostics_k_8.csv")).unwrap(),
        fs::read(rerun.join("diagnostics/diagnostics_k_8.csv")).unwrap()
    );
}

#[test]
fn missing_key_is_named_with_its_line() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &LADDER.replace("N = 48\n", ""));
    let o = mixlab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("grid.N") && err.contains("line 6"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn scenario_typo_lists_the_registry() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &LADDER.replace("monotone_ladder", "monotone_ladr"),
    );
    let o = mixlab(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in [
        "monotone_ladder",
        "manufactured_convergence",
        "asymptotic_steady",
    ] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unreadable_config_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let o = mixlab(&[
        "run",
        "--config",
        tmp.path().join("absent.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_prints_one_row_per_check() {
    let tmp = TempDir::new().unwrap();
    let out = ladder_run(&tmp);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let checks = manifest["verdicts"].as_array().unwrap();
    let o = mixlab(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = text
        .lines()
        .filter(|l| ["PASS ", "FAIL ", "INFO "].iter().any(|p| l.starts_with(p)))
        .count();
    assert_eq!(rows, checks.len(), "{text}");
    assert!(text.contains("integrity:"));
    assert!(stderr(&o).is_empty());
}

#[test]
fn report_flags_a_truncated_table() {
    let tmp = TempDir::new().unwrap();
    let out = ladder_run(&tmp);
    let csv = out.join("diagnostics/diagnostics_k_4.csv");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    fs::write(&csv, lines.join("\n") + "\n").unwrap();
    let o = mixlab(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    assert!(
        err.contains("warning")
            && err.contains("row-count mismatch")
            && err.contains("diagnostics_k_4"),
        "{err}"
    );
}

#[test]
fn report_rejects_directories_without_a_valid_manifest() {
    let tmp = TempDir::new().unwrap();
    let o = mixlab(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(tmp.path().join("manifest.json"), "{ \"tool\": ").unwrap();
    let o = mixlab(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("corrupt"));
}

#[test]
fn exponents_reproduce_the_three_dimensional_example() {
    let o = mixlab(&[
        "exponents",
        "--n",
        "3",
        "--gamma",
        "0.5",
        "--m",
        "1",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["m_bar"].as_f64().unwrap() - 20.0 / 17.0).abs() < 1e-12);
    assert!((v["q_bar"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
    assert!((v["sigma_l"].as_f64().unwrap() - 2.5).abs() < 1e-12);
}

#[test]
fn oracle_benchmark_passes() {
    let tmp = TempDir::new().unwrap();
    let dump = tmp.path().join("op.f64");
    let o = mixlab(&[
        "--threads",
        "2",
        "oracle",
        "--cells",
        "256",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let bytes = fs::metadata(&dump).unwrap().len();
    assert_eq!(bytes, 8 * 255 * 255);
}

#[test]
fn plots_do_not_change_verdicts() {
    let tmp = TempDir::new().unwrap();
    let with = ladder_run(&tmp);
    let config = tmp.path().join("quiet.toml");
    fs::write(&config, LADDER.replace("emit_plots = true", "emit_plots = false")).unwrap();
    let without = tmp.path().join("quiet");
    let o = mixlab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        without.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!without.join("plots").exists());
    let read = |dir: &Path| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
    };
    assert_eq!(read(&with)["verdicts"], read(&without)["verdicts"]);
}
