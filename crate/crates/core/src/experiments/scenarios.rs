use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    GammaSpec, Plot, ScenarioConfig, ScenarioReport, Series, Setup, SourcePreset, Verdict,
};
use crate::elliptic::{EllipticSolver, Initialization};
use crate::error::{invalid, Result};
use crate::evolve::{
    check_ordering, energy_balance, solve_ladder, solve_linear_majorant, solve_parabolic,
    solve_parabolic_from, time_monotonicity, LadderResult, Trajectory, ORDER_TOLERANCE,
};
use crate::grid::{strip_mask, Grid};
use crate::io::Table;
use crate::linalg::ShiftedSolver;
use crate::norms::{
    algebraic_inequality_oracle, bochner_norm, exponents, h1_seminorm, h1_seminorm_on, lp_space,
    lp_space_time, time_norm, InequalityBranch,
};
use crate::operators::kato_inequality;
use crate::source::{validate_gamma_profile, GammaCheck};

const REFINEMENT_FACTOR: f64 = 2.0;
const REFINEMENT_NOTE: &str =
    "refinement-stability check: consistent with membership in the predicted space, not a proof";

fn min_field(traj: &Trajectory) -> f64 {
    traj.fields
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Ordering, Cauchy and positivity verdicts of a ladder, plus its tables.
fn ladder_checks(report: &mut ScenarioReport, grid: &Grid, ladder: &LadderResult) {
    report.push(Verdict::at_most(
        "ladder monotonicity excess",
        ladder.monotonicity.worst_excess,
        ORDER_TOLERANCE,
    ));
    if !ladder.cauchy.is_empty() {
        let excess = ladder
            .cauchy
            .iter()
            .map(|c| c.max_difference - c.bound)
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(
            Verdict::at_most("Cauchy bound excess", excess, ORDER_TOLERANCE).with_note(format!(
                "{} rung pairs with k >= sup of the data",
                ladder.cauchy.len()
            )),
        );
    }
    let min = ladder
        .trajectories
        .iter()
        .map(min_field)
        .fold(f64::INFINITY, f64::min);
    report.push(Verdict::at_least(
        "minimum over all rungs and steps",
        min,
        0.0,
    ));

    let mut inc = Table::new(
        "increments",
        &["k_low", "k_high", "sup_difference", "bound"],
    );
    for i in &ladder.increments {
        inc.push(vec![
            i.k_low,
            i.k_high,
            i.sup_difference,
            1.0 / i.k_low - 1.0 / i.k_high,
        ]);
    }
    report.tables.push(inc);
    if !ladder.increments.is_empty() {
        report.plots.push(Plot {
            name: "increment_vs_k".into(),
            title: "Ladder increments".into(),
            x_label: "k".into(),
            y_label: "sup |u_k' - u_k|".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series {
                    label: "increment".into(),
                    points: ladder
                        .increments
                        .iter()
                        .map(|i| (i.k_low, i.sup_difference))
                        .collect(),
                },
                Series {
                    label: "1/k - 1/k'".into(),
                    points: ladder
                        .increments
                        .iter()
                        .map(|i| (i.k_low, 1.0 / i.k_low - 1.0 / i.k_high))
                        .collect(),
                },
            ],
        });
    }
    let mut sups = Table::new("sup_norms", &["k", "sup_norm"]);
    for t in &ladder.trajectories {
        sups.push(vec![t.k, t.sup_norm()]);
    }
    report.tables.push(sups);
    report.trajectories.extend(
        ladder
            .trajectories
            .iter()
            .map(|t| (grid.clone(), t.clone())),
    );
}

pub(super) fn ladder_report(name: &str, config: &ScenarioConfig) -> Result<ScenarioReport> {
    let setup = Setup::new(config)?;
    let ladder = solve_ladder(&setup.spec)?;
    let mut report = ScenarioReport::new(name, config);
    ladder_checks(&mut report, &setup.grid, &ladder);
    Ok(report)
}

pub(super) fn monotone_ladder(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let setup = Setup::new(config)?;
    let ladder = solve_ladder(&setup.spec)?;
    let mut report = ScenarioReport::new("monotone_ladder", config);
    ladder_checks(&mut report, &setup.grid, &ladder);
    // at k = 1 the regularization 1/k dominates u, so the first increment
    // can tie with the second; strict decrease is observed from k = 2 on
    let growth = ladder
        .increments
        .windows(2)
        .filter(|w| w[0].k_low >= 2.0)
        .map(|w| w[1].sup_difference - w[0].sup_difference)
        .fold(f64::NEG_INFINITY, f64::max);
    if growth.is_finite() {
        report.push(
            Verdict::new(
                "increment growth from k = 2 on",
                growth,
                super::Comparison::AtMost,
                0.0,
            )
            .exploratory(),
        );
    }
    Ok(report)
}

pub(super) fn comparison_principle(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let setup = Setup::new(config)?;
    let spec = &setup.spec;
    let k = config.top_level();
    let base = spec.data().clone();
    let mut report = ScenarioReport::new("comparison_principle", config);

    let mut scaled = base.clone();
    scaled.f = base.f.scaled(2.0);
    let mut shifted = base.clone();
    shifted.u0 = base.u0.shifted(0.1);
    let mut both = scaled.clone();
    both.u0 = shifted.u0.clone();

    let lower = solve_parabolic(spec, k)?;
    let mut kato_fields = Vec::new();
    let mut ordering = Table::new("ordering", &["pair", "worst_excess"]);
    for (pair, (label, upper_data)) in [
        ("identical data", base.clone()),
        ("scaled source", scaled),
        ("shifted initial datum", shifted),
        ("scaled source and shifted initial datum", both),
    ]
    .into_iter()
    .enumerate()
    {
        let upper = solve_parabolic(&spec.with_data(upper_data)?, k)?;
        let ord = check_ordering(label, &lower, &upper, ORDER_TOLERANCE);
        ordering.push(vec![pair as f64, ord.worst_excess]);
        report.push(Verdict::at_most(
            format!("ordering excess, {label}"),
            ord.worst_excess,
            ORDER_TOLERANCE,
        ));
        kato_fields.push(
            lower
                .last()
                .iter()
                .zip(upper.last())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        if label == "identical data" {
            let reverse = check_ordering(label, &upper, &lower, ORDER_TOLERANCE);
            report.push(Verdict::at_most(
                "reverse ordering excess, identical data",
                reverse.worst_excess,
                ORDER_TOLERANCE,
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let size = setup.op.size();
    let resolvent = ShiftedSolver::new(setup.op.clone(), 1.0 / config.tau)?;
    let mut min = f64::INFINITY;
    for _ in 0..20 {
        let b: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
        let mut x = vec![0.0; size];
        resolvent.solve(None, &b, &mut x)?;
        min = min.min(x.iter().copied().fold(f64::INFINITY, f64::min));
    }
    report.push(Verdict::at_least(
        "resolvent minimum on nonnegative data",
        min,
        0.0,
    ));

    for _ in 0..4 {
        kato_fields.push((0..size).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let mut worst = f64::NEG_INFINITY;
    for u in &kato_fields {
        for eps in [1e-3, 1e-1] {
            let r = kato_inequality(&setup.op, u, eps)?;
            worst = worst.max(r.worst_excess / r.scale);
        }
    }
    report.push(Verdict::at_most(
        "Kato inequality relative excess",
        worst,
        1e-12,
    ));
    report.tables.push(ordering);
    report.trajectories.push((setup.grid.clone(), lower));
    Ok(report)
}

pub(super) fn positivity_floor(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let setup = Setup::new(config)?;
    let ladder = solve_ladder(&setup.spec)?;
    let mut report = ScenarioReport::new("positivity_floor", config);
    report.push(Verdict::at_most(
        "ladder monotonicity excess",
        ladder.monotonicity.worst_excess,
        ORDER_TOLERANCE,
    ));
    let central = setup.grid.central_box(0.5);
    let start = config.horizon / 4.0;
    let floor = |t: &Trajectory| {
        t.fields
            .iter()
            .enumerate()
            .filter(|(m, _)| t.time(*m) >= start - 1e-12)
            .flat_map(|(_, u)| u.iter().zip(&central).filter(|(_, &c)| c).map(|(v, _)| *v))
            .fold(f64::INFINITY, f64::min)
    };
    let floors: Vec<f64> = ladder.trajectories.iter().map(floor).collect();
    let mut table = Table::new("floors", &["k", "floor"]);
    for (t, f) in ladder.trajectories.iter().zip(&floors) {
        table.push(vec![t.k, *f]);
    }
    report.tables.push(table);
    let lowest = floors.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Verdict::above(
        "floor on central half-box over [T/4, T]",
        lowest,
        0.0,
    ));
    let decrease = floors
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    if decrease.is_finite() {
        report.push(Verdict::at_most(
            "floor decrease along the ladder",
            decrease,
            ORDER_TOLERANCE,
        ));
    }
    let first = &ladder.trajectories[0];
    let interior_min = first.fields[1..]
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    report.push(Verdict::above(
        format!("interior minimum for m >= 1 at k = {}", first.k),
        interior_min,
        0.0,
    ));
    report.trajectories.extend(
        ladder
            .trajectories
            .iter()
            .map(|t| (setup.grid.clone(), t.clone())),
    );
    Ok(report)
}

/// `‖·‖_{L^r(0,T; W^{1,q})}` from per-step gradient norms.
fn gradient_norm(grid: &Grid, traj: &Trajectory, q: f64, r: f64) -> Result<f64> {
    let per = traj
        .fields
        .iter()
        .map(|u| h1_seminorm(grid, u, q))
        .collect::<Result<Vec<_>>>()?;
    time_norm(&per, traj.tau, r)
}

/// `‖∇(u^p)‖_{L²(Ω_T)}`.
fn power_energy(grid: &Grid, traj: &Trajectory, p: f64) -> Result<f64> {
    let per = traj
        .fields
        .iter()
        .map(|u| h1_seminorm(grid, &u.iter().map(|v| v.powf(p)).collect::<Vec<_>>(), 2.0))
        .collect::<Result<Vec<_>>>()?;
    time_norm(&per, traj.tau, 2.0)
}

/// `max(a/b, b/a)`; infinite or NaN when either side is degenerate.
fn spread(a: f64, b: f64) -> f64 {
    (a / b).max(b / a)
}

fn sup_table(name: &str, columns: &[&str], rows: Vec<Vec<f64>>) -> Table {
    let mut t = Table::new(name, columns);
    for r in rows {
        t.push(r);
    }
    t
}

pub(super) fn bounded_data(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let setup = Setup::new(config)?;
    if setup.spec.data().f.known_sup().is_none() {
        return Err(invalid("bounded_data needs a bounded source preset"));
    }
    let ladder = solve_ladder(&setup.spec)?;
    let mut report = ScenarioReport::new("bounded_data", config);
    ladder_checks(&mut report, &setup.grid, &ladder);
    let top = ladder.limit();
    let sups: Vec<f64> = ladder.trajectories.iter().map(|t| t.sup_norm()).collect();
    if let [.., a, b] = sups[..] {
        report.push(Verdict::at_most(
            "relative sup-norm change at the top rung",
            (b - a).abs() / b,
            0.05,
        ));
    }
    let majorant = solve_linear_majorant(&setup.spec, top.k)?;
    report.push(Verdict::at_most(
        "excess over the linear majorant",
        check_ordering("majorant", top, &majorant, ORDER_TOLERANCE).worst_excess,
        ORDER_TOLERANCE,
    ));
    report.push(Verdict::above("top-rung sup norm", top.sup_norm(), 0.0).exploratory());

    if setup.spec.gamma().upper() <= 1.0 {
        let energy = energy_balance(&setup.spec, top, 0.05)?;
        report.push(Verdict::at_most(
            "energy inequality ratio",
            energy.worst_ratio,
            1.05,
        ));
        report.tables.push(sup_table(
            "energy",
            &["step", "lhs", "rhs"],
            energy
                .lhs
                .iter()
                .zip(&energy.rhs)
                .enumerate()
                .map(|(m, (l, r))| vec![m as f64, *l, *r])
                .collect(),
        ));
        let fine = Setup::new(&config.with_cells(2 * config.cells))?;
        let fine_top = solve_parabolic(&fine.spec, top.k)?;
        let coarse_energy = gradient_norm(&setup.grid, top, 2.0, 2.0)?;
        let fine_energy = gradient_norm(&fine.grid, &fine_top, 2.0, 2.0)?;
        report.push(
            Verdict::at_most(
                "L2(H1) refinement ratio",
                spread(coarse_energy, fine_energy),
                REFINEMENT_FACTOR,
            )
            .with_note(REFINEMENT_NOTE),
        );
    }

    if let Some(alpha) = config.gamma.constant() {
        let u = top.last();
        let mut violations = 0usize;
        let mut probes = 0usize;
        for i in 0..u.len() {
            if let Some(j) = setup.grid.neighbor(i, 0, 1) {
                probes += 1;
                if !algebraic_inequality_oracle(u[i], u[j], alpha, InequalityBranch::Product)?.holds
                {
                    violations += 1;
                }
                if alpha <= 1.0
                    && u[i] != u[j]
                    && !algebraic_inequality_oracle(u[i], u[j], alpha, InequalityBranch::Quotient)?
                        .holds
                {
                    violations += 1;
                }
            }
        }
        report.push(
            Verdict::at_most(
                "algebraic inequality violations on neighbour pairs",
                violations as f64,
                0.0,
            )
            .with_note(format!("{probes} pairs")),
        );
    }
    report.plots.push(Plot {
        name: "norm_vs_time".into(),
        title: "Top rung: L2 norm against time".into(),
        x_label: "t".into(),
        y_label: "||u||_2".into(),
        log_x: false,
        log_y: false,
        series: vec![Series {
            label: format!("k = {}", top.k),
            points: top.diagnostics.iter().map(|d| (d.time, d.l2)).collect(),
        }],
    });
    Ok(report)
}

pub(super) fn aronson_serrin(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let (r, q) = config
        .source
        .declared_exponents()
        .ok_or_else(|| invalid("aronson_serrin needs a preset source with a known class"))?;
    let level = 1.0 / r + config.dim as f64 / (2.0 * q);
    if level >= 1.0 {
        return Err(invalid(format!(
            "source preset declares L^{r}(L^{q}) with 1/r + n/(2q) = {level} >= 1, outside the bounded region"
        )));
    }
    if config.ladder.len() < 2 {
        return Err(invalid("aronson_serrin needs at least two rungs"));
    }
    let setup = Setup::new(config)?;
    let ladder = solve_ladder(&setup.spec)?;
    let mut report = ScenarioReport::new("aronson_serrin", config);
    report.push(Verdict::at_most(
        "ladder monotonicity excess",
        ladder.monotonicity.worst_excess,
        ORDER_TOLERANCE,
    ));
    let sups: Vec<f64> = ladder.trajectories.iter().map(|t| t.sup_norm()).collect();
    let [.., a, b] = sups[..] else {
        unreachable!("two rungs checked")
    };
    report.push(
        Verdict::at_most(
            "relative sup-norm change between the last two rungs",
            (b - a).abs() / b,
            0.01,
        )
        .with_note(format!("1/r + n/(2q) = {level:.4}")),
    );
    let last = ladder.increments.last().expect("two rungs");
    report.push(
        Verdict::at_most(
            "relative increment between the last two rungs",
            last.sup_difference / b,
            0.01,
        )
        .exploratory(),
    );

    let mirrored = SourcePreset::Singular {
        scale: 1.0,
        a: 0.9,
        b: 0.9,
    };
    let outside = Setup::with_operator(&config.with_source(mirrored), Some(setup.op.clone()))?;
    let out_ladder = solve_ladder(&outside.spec)?;
    let out_sups: Vec<f64> = out_ladder
        .trajectories
        .iter()
        .map(|t| t.sup_norm())
        .collect();
    let [.., c, d] = out_sups[..] else {
        unreachable!("two rungs checked")
    };
    report.push(
        Verdict::at_most(
            "outside region: relative sup-norm change between the last two rungs",
            (d - c).abs() / d,
            0.01,
        )
        .exploratory()
        .with_note("mirrored preset t^-0.9 d^-0.9, no claim outside the region"),
    );
    report.push(
        Verdict::at_least(
            "outside region: sup-norm growth over the ladder",
            d / out_sups[0],
            1.0,
        )
        .exploratory(),
    );

    report.tables.push(sup_table(
        "plateau",
        &["k", "sup_inside", "sup_outside"],
        config
            .ladder
            .iter()
            .zip(sups.iter().zip(&out_sups))
            .map(|(k, (i, o))| vec![*k, *i, *o])
            .collect(),
    ));
    report.plots.push(Plot {
        name: "sup_vs_k".into(),
        title: "Sup norm along the ladder".into(),
        x_label: "k".into(),
        y_label: "sup u_k".into(),
        log_x: true,
        log_y: false,
        series: vec![
            Series {
                label: "inside region".into(),
                points: config
                    .ladder
                    .iter()
                    .copied()
                    .zip(sups.iter().copied())
                    .collect(),
            },
            Series {
                label: "outside region".into(),
                points: config
                    .ladder
                    .iter()
                    .copied()
                    .zip(out_sups.iter().copied())
                    .collect(),
            },
        ],
    });
    report.trajectories.extend(
        ladder
            .trajectories
            .iter()
            .map(|t| (setup.grid.clone(), t.clone())),
    );
    Ok(report)
}

/// Top-rung trajectories at `N` and `2N`.
fn refined(config: &ScenarioConfig) -> Result<[(Grid, Trajectory); 2]> {
    let k = config.top_level();
    let coarse = Setup::new(config)?;
    let fine = Setup::new(&config.with_cells(2 * config.cells))?;
    let a = solve_parabolic(&coarse.spec, k)?;
    let b = solve_parabolic(&fine.spec, k)?;
    Ok([(coarse.grid, a), (fine.grid, b)])
}

type TrajectoryNorm<'a> = Box<dyn Fn(&Grid, &Trajectory) -> Result<f64> + 'a>;

struct RefinementCheck<'a> {
    label: String,
    norm: TrajectoryNorm<'a>,
}

fn refinement_verdicts(
    report: &mut ScenarioReport,
    table: &mut Table,
    runs: &[(Grid, Trajectory); 2],
    checks: Vec<RefinementCheck>,
    exploratory: bool,
) -> Result<()> {
    for c in checks {
        let a = (c.norm)(&runs[0].0, &runs[0].1)?;
        let b = (c.norm)(&runs[1].0, &runs[1].1)?;
        let mut v = Verdict::at_most(
            format!("{} refinement ratio", c.label),
            spread(a, b),
            REFINEMENT_FACTOR,
        )
        .with_note(REFINEMENT_NOTE);
        if exploratory {
            v = v.exploratory();
        }
        table.push(vec![
            report.verdicts.len() as f64,
            runs[0].0.cells_per_axis() as f64,
            a,
            b,
            spread(a, b),
        ]);
        report.push(v);
    }
    Ok(())
}

pub(super) fn summability_scan(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let gamma = config
        .gamma
        .constant()
        .filter(|&g| g < 1.0)
        .ok_or_else(|| invalid("summability_scan needs a constant γ < 1"))?;
    let n = config.dim;
    if n < 3 {
        return Err(invalid(
            "summability_scan needs n >= 3 (the exponents use 2* = 2n/(n-2))",
        ));
    }
    let base = ScenarioConfig {
        initial: super::InitialPreset::Zero,
        ..config.clone()
    };
    let m_bar = exponents(n, gamma, 1.0, 2.0, 2.0)?.m_bar;
    let m_low = 0.5 * (1.0 + m_bar);
    let below = exponents(n, gamma, m_low, 2.0, 2.0)?;
    let q_bar = below
        .q_bar
        .ok_or_else(|| invalid("q̄ out of range for this γ"))?;
    let sigma_low = below
        .sigma_l
        .ok_or_else(|| invalid("σ out of range for this γ"))?;
    let (a_out, b_out) = (0.5, 0.6);
    let outside_src = SourcePreset::Singular {
        scale: 1.0,
        a: a_out,
        b: b_out,
    };
    let (r_out, q_out) = outside_src.declared_exponents().expect("preset");
    let zone = exponents(n, gamma, 1.0, r_out, q_out)?
        .outside_zone
        .ok_or_else(|| invalid("outside-zone preset is not outside the bounded region"))?;
    let sigma_out = zone
        .sigma
        .ok_or_else(|| invalid("outside-zone σ out of range"))?;
    let side_ok = zone.side_condition.unwrap_or(true);
    let two_star = 2.0 * n as f64 / (n as f64 - 2.0);

    let mut report = ScenarioReport::new("summability_scan", config);
    let mut table = Table::new(
        "refinement",
        &["verdict", "N", "value_N", "value_2N", "ratio"],
    );
    report.tables.push(sup_table(
        "exponents",
        &[
            "m_bar",
            "m_below",
            "q_bar",
            "sigma_below",
            "r_outside",
            "q_outside",
            "sigma_outside",
        ],
        vec![vec![
            m_bar, m_low, q_bar, sigma_low, r_out, q_out, sigma_out,
        ]],
    ));

    let threshold = refined(&base.with_source(SourcePreset::Singular {
        scale: 1.0,
        a: 0.0,
        b: 0.99 / m_bar,
    }))?;
    refinement_verdicts(
        &mut report,
        &mut table,
        &threshold,
        vec![
            RefinementCheck {
                label: "data in L^m, m = m̄: L^inf(L^2)".into(),
                norm: Box::new(|_, t| bochner_norm(t, f64::INFINITY, 2.0)),
            },
            RefinementCheck {
                label: "data in L^m, m = m̄: L^2(H^1)".into(),
                norm: Box::new(|g, t| gradient_norm(g, t, 2.0, 2.0)),
            },
        ],
        false,
    )?;

    let low = refined(&base.with_source(SourcePreset::Singular {
        scale: 1.0,
        a: 0.0,
        b: 0.99 / m_low,
    }))?;
    refinement_verdicts(
        &mut report,
        &mut table,
        &low,
        vec![
            RefinementCheck {
                label: format!("data in L^m, m = {m_low:.4} < m̄: L^q̄(W^(1,q̄)), q̄ = {q_bar:.4}"),
                norm: Box::new(move |g, t| gradient_norm(g, t, q_bar, q_bar)),
            },
            RefinementCheck {
                label: format!("data in L^m, m = {m_low:.4} < m̄: L^σ, σ = {sigma_low:.4}"),
                norm: Box::new(move |_, t| lp_space_time(t, sigma_low)),
            },
            RefinementCheck {
                label: format!("data in L^m, m = {m_low:.4} < m̄: L^inf(L^(1+γ))"),
                norm: Box::new(move |_, t| bochner_norm(t, f64::INFINITY, 1.0 + gamma)),
            },
        ],
        false,
    )?;

    let out = refined(&base.with_source(outside_src))?;
    refinement_verdicts(
        &mut report,
        &mut table,
        &out,
        vec![
            RefinementCheck {
                label: format!("outside zone, σ = {sigma_out:.4}: L^inf(L^2σ)"),
                norm: Box::new(move |_, t| bochner_norm(t, f64::INFINITY, 2.0 * sigma_out)),
            },
            RefinementCheck {
                label: format!("outside zone, σ = {sigma_out:.4}: L^2σ(L^(2*σ))"),
                norm: Box::new(move |_, t| bochner_norm(t, 2.0 * sigma_out, two_star * sigma_out)),
            },
        ],
        !side_ok,
    )?;

    let integrable = refined(&base.with_source(SourcePreset::Singular {
        scale: 1.0,
        a: 0.0,
        b: 0.9,
    }))?;
    refinement_verdicts(
        &mut report,
        &mut table,
        &integrable,
        vec![RefinementCheck {
            label: "integrable data: L^2(H^1) of u^((γ+1)/2)".into(),
            norm: Box::new(move |g, t| power_energy(g, t, 0.5 * (gamma + 1.0))),
        }],
        false,
    )?;
    report.tables.push(table);
    report.trajectories.push(threshold[1].clone());
    Ok(report)
}

pub(super) fn variable_gamma(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let (inner, outer, delta) = match config.gamma {
        GammaSpec::Strip {
            inner,
            outer,
            delta,
        } => (inner, outer, delta),
        GammaSpec::Constant { value } => (value, value, 0.1),
    };
    let near = config.with_gamma(GammaSpec::Strip {
        inner,
        outer,
        delta,
    });
    let gamma_star = 2.0;
    let critical = config.with_gamma(GammaSpec::Strip {
        inner: 1.5,
        outer: 3.0,
        delta,
    });
    let steps = (config.horizon / config.tau).round() as usize;
    let mut report = ScenarioReport::new("variable_gamma", config);
    let mut table = Table::new(
        "refinement",
        &["verdict", "N", "value_N", "value_2N", "ratio"],
    );

    for (cfg, check, label) in [
        (&near, GammaCheck::StripAtMostOne, "γ <= 1 on the strip"),
        (
            &critical,
            GammaCheck::StripBelow {
                threshold: gamma_star,
            },
            "sup of γ on the strip below γ* = 2",
        ),
    ] {
        let setup = Setup::new(cfg)?;
        let strip = strip_mask(&setup.grid, delta, steps, config.tau)?;
        let v = validate_gamma_profile(setup.spec.gamma(), &strip, check);
        report.push(
            Verdict::at_most(format!("{label}: violations"), v.violations as f64, 0.0)
                .with_note(format!("{} samples", v.samples_checked)),
        );
    }

    let near_runs = refined(&near)?;
    refinement_verdicts(
        &mut report,
        &mut table,
        &near_runs,
        vec![
            RefinementCheck {
                label: "γ <= 1 near the boundary: L^2(H^1)".into(),
                norm: Box::new(|g, t| gradient_norm(g, t, 2.0, 2.0)),
            },
            RefinementCheck {
                label: "γ <= 1 near the boundary: L^inf(L^2)".into(),
                norm: Box::new(|_, t| bochner_norm(t, f64::INFINITY, 2.0)),
            },
        ],
        false,
    )?;

    let critical_runs = refined(&critical)?;
    let t0 = config.horizon / 4.0;
    refinement_verdicts(
        &mut report,
        &mut table,
        &critical_runs,
        vec![
            RefinementCheck {
                label: "γ below γ*: L^2(H^1) of u^((γ*+1)/2)".into(),
                norm: Box::new(move |g, t| power_energy(g, t, 0.5 * (gamma_star + 1.0))),
            },
            RefinementCheck {
                label: "γ below γ*: interior L^2(T/4, T; H^1)".into(),
                norm: Box::new(move |g, t| {
                    let central = g.central_box(0.5);
                    let sum = t
                        .fields
                        .iter()
                        .enumerate()
                        .skip(1)
                        .filter(|(m, _)| t.time(*m) >= t0 - 1e-12)
                        .map(|(_, u)| h1_seminorm_on(g, u, 2.0, Some(&central)).map(|v| v * v))
                        .sum::<Result<f64>>()?;
                    Ok((t.tau * sum).sqrt())
                }),
            },
            RefinementCheck {
                label: "γ below γ*: L^inf(L^(1+γ*))".into(),
                norm: Box::new(move |_, t| bochner_norm(t, f64::INFINITY, 1.0 + gamma_star)),
            },
        ],
        false,
    )?;
    report.tables.push(table);
    let [coarse, _] = near_runs;
    report.trajectories.push(coarse);
    Ok(report)
}

pub(super) fn asymptotic_steady(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let gamma = config
        .gamma
        .constant()
        .ok_or_else(|| invalid("asymptotic_steady needs a constant γ"))?;
    if config.initial != super::InitialPreset::Zero {
        return Err(invalid(
            "asymptotic_steady starts from u0 = 0 (a subsolution of the steady problem)",
        ));
    }
    let setup = Setup::new(config)?;
    let spec = &setup.spec;
    if !spec.data().f.is_stationary() {
        return Err(invalid("asymptotic_steady needs a time-independent source"));
    }
    let k = config.top_level();
    let f = spec.data().f.sample(&setup.grid, 0, 0.0);
    let elliptic = EllipticSolver::new(setup.op.clone(), gamma)?;
    let steady = elliptic.solve(&f, &config.ladder)?;
    let (w2, _, _) = elliptic.solve_level(&f, k, Initialization::LinearSolve)?;
    let w = &steady.w;
    let mut report = ScenarioReport::new("asymptotic_steady", config);
    let agreement = w
        .iter()
        .zip(&w2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.push(Verdict::at_most(
        "steady state from two initializations",
        agreement,
        1e-8,
    ));
    let f_sup = f.iter().copied().fold(1.0, f64::max);
    report.push(Verdict::at_most(
        "steady residual",
        steady.residual,
        1e-9 * f_sup,
    ));
    if f.iter().any(|&v| v > 0.0) {
        let central = setup.grid.central_box(0.5);
        let floor = w
            .iter()
            .zip(&central)
            .filter(|(_, &c)| c)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        report.push(Verdict::above(
            "steady state minimum on the central half-box",
            floor,
            0.0,
        ));
    }

    // restart chaining in chunks of at most 200 steps
    let total = spec.steps();
    let chunk = total.min(200);
    let vol = setup.grid.cell_volume();
    let mut fields = vec![vec![0.0; setup.op.size()]];
    let mut diagnostics = Vec::new();
    let mut offset = 0;
    while offset < total {
        let len = chunk.min(total - offset);
        let part_spec = spec.with_horizon(len as f64 * config.tau)?;
        let part = solve_parabolic_from(
            &part_spec,
            k,
            fields.last().expect("seeded").clone(),
            offset,
        )?;
        if diagnostics.is_empty() {
            diagnostics.push(part.diagnostics[0]);
        }
        diagnostics.extend(part.diagnostics.into_iter().skip(1).map(|mut d| {
            d.step += offset;
            d
        }));
        fields.extend(part.fields.into_iter().skip(1));
        offset += len;
    }
    let traj = Trajectory {
        k,
        tau: config.tau,
        start_time: 0.0,
        cell_volume: vol,
        fields,
        diagnostics,
    };
    let mono = time_monotonicity(&traj, ORDER_TOLERANCE);
    report.push(Verdict::at_most(
        "time monotonicity excess",
        mono.worst_excess,
        ORDER_TOLERANCE,
    ));
    let above = traj
        .fields
        .iter()
        .flat_map(|u| u.iter().zip(w).map(|(a, b)| a - b))
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(Verdict::at_most("excess of u over w", above, 1e-8));
    let w_norm = lp_space(vol, w, 2.0)?;
    let gap = |u: &[f64]| {
        lp_space(
            vol,
            &u.iter().zip(w).map(|(a, b)| a - b).collect::<Vec<_>>(),
            2.0,
        )
    };
    let final_gap = gap(traj.last())?;
    let relative = if w_norm > 0.0 {
        final_gap / w_norm
    } else {
        final_gap
    };
    report.push(
        Verdict::at_most(
            "relative L2 distance to w at the final time",
            relative,
            0.01,
        )
        .with_note(format!("t_final = {}", config.horizon)),
    );
    let stride = (traj.steps() / 400).max(1);
    let mut history = Table::new("distance_to_steady_state", &["time", "l2_distance"]);
    for m in (0..=traj.steps()).step_by(stride) {
        history.push(vec![traj.time(m), gap(&traj.fields[m])?]);
    }
    report.plots.push(Plot {
        name: "norm_vs_time".into(),
        title: "Distance to the steady state".into(),
        x_label: "t".into(),
        y_label: "||u(t) - w||_2".into(),
        log_x: false,
        log_y: true,
        series: vec![Series {
            label: format!("k = {k}"),
            points: history.rows.iter().map(|r| (r[0], r[1])).collect(),
        }],
    });
    report.tables.push(history);
    report.tables.push(sup_table(
        "steady_levels",
        &["k", "sup", "iterations", "residual"],
        steady
            .levels
            .iter()
            .map(|l| vec![l.k, l.sup, l.iterations as f64, l.residual])
            .collect(),
    ));
    report.trajectories.push((setup.grid.clone(), traj));
    Ok(report)
}
