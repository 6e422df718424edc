//! Order study against manufactured solutions.
//!
//! The profile is `w = sin(πx) + x² ln x + (1-x)² ln(1-x)`. A plain sine is
//! not admissible: the fractional part of `A sin(πx)` is negative near the
//! boundary and the forcing would change sign. The logarithmic layer gives
//! `-w'' ~ 2 ln(1/d)`, which dominates the fractional term and keeps `A w > 0`
//! up to the boundary while staying regular enough for second-order
//! consistency of the local part.
//!
//! Spatial: `u* = (1+t) w` with the continuous operator applied through the
//! quadrature oracle. `u*` is linear in `t`, so backward Euler carries no
//! time error and the measured error is purely spatial.
//!
//! Temporal: `u* = e^t w` sampled at the nodes, with the forcing built from
//! the discrete operator, so the only error left is the time error.
//!
//! In both cases `f = u*^γ (∂_t u* + A u*)` and the level `k` is large
//! enough for the regularization to be invisible.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use super::{log_log_slope, Plot, ScenarioConfig, ScenarioReport, Series, Verdict};
use crate::error::{invalid, Result};
use crate::evolve::{solve_parabolic, ProblemSpec, Trajectory};
use crate::grid::{build_grid, Grid};
use crate::io::Table;
use crate::operators::assemble_mixed;
use crate::oracle::fractional_laplacian_1d;
use crate::source::{GammaField, InitialData, SourceData, SourceTerm};

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub parameter: f64,
    pub max_error: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    /// Rows keyed by `h`.
    pub spatial: Vec<ConvergenceRow>,
    /// Rows keyed by `τ`.
    pub temporal: Vec<ConvergenceRow>,
    pub spatial_order: f64,
    pub temporal_order: f64,
    #[serde(skip)]
    pub finest: Option<(Grid, Trajectory)>,
}

fn layer(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        x * x * x.ln()
    }
}

/// `w`; concave, with its maximum at `x = 1/2`.
fn profile(x: f64) -> f64 {
    (PI * x).sin() + layer(x) + layer(1.0 - x)
}

/// `-w''` on `(0, 1)`.
fn profile_laplacian(x: f64) -> f64 {
    PI * PI * (PI * x).sin() - 2.0 * (x * (1.0 - x)).ln() - 6.0
}

fn max_error(traj: &Trajectory, exact: impl Fn(usize, f64) -> f64 + Copy) -> f64 {
    traj.fields
        .iter()
        .enumerate()
        .skip(1)
        .flat_map(|(m, u)| {
            let t = traj.time(m);
            u.iter()
                .enumerate()
                .map(move |(i, v)| (v - exact(i, t)).abs())
        })
        .fold(0.0, f64::max)
}

fn spatial_run(
    cells: usize,
    s: f64,
    gamma: f64,
    horizon: f64,
    tau: f64,
    k: f64,
) -> Result<(Grid, Trajectory, f64)> {
    let grid = build_grid(1, cells)?;
    let op = Arc::new(assemble_mixed(&grid, s)?);
    let nodes = grid.interior_count();
    let w: Vec<f64> = (0..nodes).map(|i| profile(grid.point(i)[0])).collect();
    let aw = (0..nodes)
        .map(|i| {
            let x = grid.point(i)[0];
            Ok(profile_laplacian(x) + fractional_laplacian_1d(profile, x, s)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let w_f = w.clone();
    let f = SourceTerm::Custom(Arc::new(move |i, t| {
        let u = (1.0 + t) * w_f[i];
        (u.powf(gamma) * (w_f[i] + (1.0 + t) * aw[i])).max(0.0)
    }));
    let data = SourceData::new(f, InitialData::Field(w.clone()));
    let spec = ProblemSpec::new(op, GammaField::constant(gamma)?, data, horizon, tau)?;
    let traj = solve_parabolic(&spec, k)?;
    let err = max_error(&traj, |i, t| (1.0 + t) * w[i]);
    Ok((grid, traj, err))
}

fn temporal_run(cells: usize, s: f64, gamma: f64, horizon: f64, tau: f64, k: f64) -> Result<f64> {
    let grid = build_grid(1, cells)?;
    let op = Arc::new(assemble_mixed(&grid, s)?);
    let nodes = grid.interior_count();
    let w: Vec<f64> = (0..nodes).map(|i| profile(grid.point(i)[0])).collect();
    let aw = op.apply(&w)?;
    let w_f = w.clone();
    let f = SourceTerm::Custom(Arc::new(move |i, t| {
        let e = t.exp();
        ((e * w_f[i]).powf(gamma) * e * (w_f[i] + aw[i])).max(0.0)
    }));
    let data = SourceData::new(f, InitialData::Field(w.clone()));
    let spec = ProblemSpec::new(op, GammaField::constant(gamma)?, data, horizon, tau)?;
    let traj = solve_parabolic(&spec, k)?;
    Ok(max_error(&traj, |i, t| t.exp() * w[i]))
}

/// Spatial study over `cells` at step `spatial_tau`, temporal study over
/// `taus` on `temporal_cells`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    s: f64,
    gamma: f64,
    horizon: f64,
    k: f64,
    cells: &[usize],
    spatial_tau: f64,
    taus: &[f64],
    temporal_cells: usize,
) -> Result<ConvergenceStudy> {
    if cells.len() < 2 || taus.len() < 2 {
        return Err(invalid("an order study needs at least two resolutions"));
    }
    let mut spatial = Vec::new();
    let mut finest = None;
    for &n in cells {
        let (grid, traj, err) = spatial_run(n, s, gamma, horizon, spatial_tau, k)?;
        spatial.push(ConvergenceRow {
            parameter: grid.h(),
            max_error: err,
            relative_error: err / ((1.0 + horizon) * profile(0.5)),
        });
        finest = Some((grid, traj));
    }
    let temporal = taus
        .iter()
        .map(|&tau| {
            let err = temporal_run(temporal_cells, s, gamma, horizon, tau, k)?;
            Ok(ConvergenceRow {
                parameter: tau,
                max_error: err,
                relative_error: err / (horizon.exp() * profile(0.5)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = |rows: &[ConvergenceRow]| {
        log_log_slope(
            &rows
                .iter()
                .map(|r| (r.parameter, r.max_error))
                .collect::<Vec<_>>(),
        )
    };
    Ok(ConvergenceStudy {
        spatial_order: slope(&spatial),
        temporal_order: slope(&temporal),
        spatial,
        temporal,
        finest,
    })
}

/// Levels `N/4, N/2, N` in space and `4τ, 2τ, τ` in time on `N/2` cells.
pub(super) fn run(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let gamma = config
        .gamma
        .constant()
        .ok_or_else(|| invalid("manufactured_convergence needs a constant γ"))?;
    if config.dim != 1 {
        return Err(invalid("manufactured_convergence runs in one dimension"));
    }
    if config.cells < 16 || !config.cells.is_multiple_of(4) {
        return Err(invalid(
            "manufactured_convergence needs N divisible by 4 and at least 16",
        ));
    }
    let n = config.cells;
    let tau = config.tau;
    let study = convergence_study(
        config.s,
        gamma,
        config.horizon,
        config.top_level(),
        &[n / 4, n / 2, n],
        tau,
        &[4.0 * tau, 2.0 * tau, tau],
        n / 2,
    )?;
    let mut report = ScenarioReport::new("manufactured_convergence", config);
    report.push(Verdict::at_least("spatial order", study.spatial_order, 1.0));
    report.push(Verdict::at_least(
        "temporal order",
        study.temporal_order,
        0.9,
    ));
    let finest = study.spatial.last().expect("three levels");
    report.push(Verdict::at_most(
        "relative error at finest N",
        finest.relative_error,
        0.02,
    ));

    let mut space = Table::new(
        "spatial_convergence",
        &["N", "h", "max_error", "relative_error"],
    );
    for r in &study.spatial {
        space.push(vec![
            (1.0 / r.parameter).round(),
            r.parameter,
            r.max_error,
            r.relative_error,
        ]);
    }
    let mut time = Table::new(
        "temporal_convergence",
        &["tau", "max_error", "relative_error"],
    );
    for r in &study.temporal {
        time.push(vec![r.parameter, r.max_error, r.relative_error]);
    }
    report.tables.extend([space, time]);
    report.plots.push(Plot {
        name: "error_vs_h".into(),
        title: "Manufactured solution: error against mesh size".into(),
        x_label: "h".into(),
        y_label: "max error".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            label: format!("observed order {:.2}", study.spatial_order),
            points: study
                .spatial
                .iter()
                .map(|r| (r.parameter, r.max_error))
                .collect(),
        }],
    });
    report.plots.push(Plot {
        name: "error_vs_tau".into(),
        title: "Manufactured solution: error against time step".into(),
        x_label: "τ".into(),
        y_label: "max error".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            label: format!("observed order {:.2}", study.temporal_order),
            points: study
                .temporal
                .iter()
                .map(|r| (r.parameter, r.max_error))
                .collect(),
        }],
    });
    if let Some(f) = study.finest {
        report.trajectories.push(f);
    }
    Ok(report)
}
