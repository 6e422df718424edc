//! `mixlab`: run, inspect and benchmark the mixed local-nonlocal solver.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 invalid input
//! (config schema, unknown scenario, missing or corrupt manifest), 3 the
//! computation aborted.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod manifest;
mod report;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use mixlab::grid::build_grid;
use mixlab::norms::{exponents, ExponentReport};
use mixlab::operators::assemble_fractional_laplacian;
use mixlab::oracle::{fractional_laplacian_1d, torsion_profile, torsion_profile_value};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mixlab",
    version,
    about = "Numerical laboratory for a singular mixed local-nonlocal parabolic problem"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario or raw problem from a TOML config and write a run directory.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Run directory; overrides `run.out` (default: runs/<scenario>).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Seed for randomized checks; overrides `run.seed`.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
    },
    /// Print the verdict table of a run directory and check its artifacts.
    Report {
        #[arg(value_name = "DIR")]
        dir: PathBuf,
    },
    /// Evaluate the threshold and summability exponents.
    Exponents {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        m: f64,
        /// Time integrability of f (`inf` allowed).
        #[arg(long, default_value = "inf")]
        r: f64,
        /// Space integrability of f (`inf` allowed).
        #[arg(long, default_value = "inf")]
        q: f64,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Torsion benchmark of the discrete fractional Laplacian on (0, 1).
    Oracle {
        /// Cells per axis.
        #[arg(long = "cells", default_value_t = 512)]
        cells: usize,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        /// Central fraction of the interval where the error is measured.
        #[arg(long, default_value_t = 0.4)]
        fraction: f64,
        /// Maximum relative error for a pass.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        /// Also write the dense operator (f64 little-endian) with a JSON sidecar.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "out of range".to_string(), |x| format!("{x}"))
}

fn print_exponents(r: &ExponentReport) {
    println!(
        "n = {}, γ = {}, m = {}, r = {}, q = {}",
        r.n, r.gamma, r.m, r.r, r.q
    );
    println!("m_bar     = {}", r.m_bar);
    println!("q_bar     = {}", opt(r.q_bar));
    println!("sigma_L   = {}", opt(r.sigma_l));
    println!(
        "sigma_L1  = {}{}",
        r.sigma_l1,
        if r.sigma_l1_flag { " (γ >= 1)" } else { "" }
    );
    println!("1/r + n/(2q) < 1: {}", r.aronson_serrin);
    if let Some(z) = &r.outside_zone {
        println!(
            "outside zone: {:?} branch, sigma = {}",
            z.branch,
            opt(z.sigma)
        );
        if let (Some(ok), Some(t)) = (z.side_condition, z.side_threshold) {
            println!("side condition (threshold {t}): {ok}");
        }
    }
    for note in &r.notes {
        println!("note: {note}");
    }
}

fn oracle(
    cells: usize,
    s: f64,
    fraction: f64,
    tolerance: f64,
    dump: Option<PathBuf>,
) -> Result<bool, CliError> {
    let start = Instant::now();
    let grid = build_grid(1, cells)?;
    let op = assemble_fractional_laplacian(&grid, s)?;
    let n = grid.interior_count();
    let profile: Vec<f64> = (0..n)
        .map(|i| torsion_profile(grid.point(i)[0], s))
        .collect();
    let applied = op.apply(&profile)?;
    let exact = torsion_profile_value(1, s, 0.5);
    let central: Vec<usize> = (0..n)
        .filter(|&i| (grid.point(i)[0] - 0.5).abs() <= 0.5 * fraction)
        .collect();
    let worst = central
        .iter()
        .map(|&i| (applied[i] - exact).abs() / exact)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let quadrature_gap = [0.35, 0.5, 0.65]
        .iter()
        .map(|&x| {
            fractional_laplacian_1d(|y| torsion_profile(y, s), x, s)
                .map(|v| (v - exact).abs() / exact)
        })
        .collect::<mixlab::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("profile (1 - (2x-1)^2)^s, s = {s}, N = {cells}, closed form {exact}");
    println!("quadrature oracle relative gap: {quadrature_gap:.3e}");
    println!(
        "max relative error on the central {:.0}% ({} nodes): {worst:.6e}",
        100.0 * fraction,
        central.len()
    );
    println!("assembly and apply: {elapsed:.2?}");
    if let Some(path) = dump {
        op.dump(&path)?;
        println!("operator written to {}", path.display());
    }
    let passed = worst <= tolerance;
    println!(
        "{} (tolerance {tolerance})",
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run { config, out, seed } => {
            let mut cfg = config::load(&config)?;
            if let Some(seed) = seed {
                cfg.problem.seed = seed;
            }
            if out.is_some() {
                cfg.out = out;
            }
            let dir = cfg
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("runs").join(cfg.target.name()));
            let manifest = run::execute(&cfg, &dir)?;
            for v in &manifest.verdicts {
                println!("{v}");
            }
            println!(
                "{}: {} ({} artifacts in {})",
                manifest.scenario,
                if manifest.passed { "PASS" } else { "FAIL" },
                manifest.artifacts.len(),
                dir.display()
            );
            Ok(manifest.exit_code)
        }
        Command::Report { dir } => {
            report::report(&dir)?;
            Ok(0)
        }
        Command::Exponents {
            n,
            gamma,
            m,
            r,
            q,
            json,
        } => {
            let rep = exponents(n, gamma, m, r, q)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&rep)
                        .map_err(|e| CliError::Manifest(e.to_string()))?
                );
            } else {
                print_exponents(&rep);
            }
            Ok(0)
        }
        Command::Oracle {
            cells,
            s,
            fraction,
            tolerance,
            dump,
        } => Ok(if oracle(cells, s, fraction, tolerance, dump)? {
            0
        } else {
            1
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            log::warn!("could not configure {k} threads: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
