//! Steady problem `A w = T_k(f) (w + 1/k)^{-γ}` along a ladder of levels.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::evolve::ORDER_TOLERANCE;
use crate::linalg::ShiftedSolver;
use crate::newton::{clamp_roundoff, NewtonStats, NonlinearSystem};
use crate::operators::OperatorMatrix;
use crate::source::{check_level, truncate};

const NEWTON_TOLERANCE: f64 = 1e-11;
const LINEAR_TOLERANCE: f64 = 1e-13;
const MAX_ITERATIONS: usize = 100;

/// Starting point of the nonlinear iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Initialization {
    /// `w = 0`, the trivial subsolution.
    Zero,
    /// `w = A^{-1} T_k(f)`.
    LinearSolve,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub k: f64,
    pub sup: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyState {
    pub w: Vec<f64>,
    pub k_used: f64,
    /// `‖A w - T_k(f)/(w + 1/k)^γ‖_∞` at the top level.
    pub residual: f64,
    pub levels: Vec<LevelSummary>,
    /// `w_k <= w_{k'} + 1e-10` for consecutive levels.
    pub ladder_monotone: bool,
}

/// Reusable solver for one operator.
#[derive(Debug, Clone)]
pub struct EllipticSolver {
    solver: ShiftedSolver,
    gamma: f64,
}

impl EllipticSolver {
    pub fn new(op: Arc<OperatorMatrix>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("γ must be positive (got {gamma})")));
        }
        Ok(Self {
            solver: ShiftedSolver::with_tolerance(op, 0.0, LINEAR_TOLERANCE)?,
            gamma,
        })
    }

    pub fn operator(&self) -> &OperatorMatrix {
        self.solver.operator()
    }

    fn residual_target(f: &[f64]) -> f64 {
        1e-9 * f.iter().map(|v| v.abs()).fold(1.0, f64::max)
    }

    /// Solves one level from the given initialization.
    pub fn solve_level(
        &self,
        f: &[f64],
        k: f64,
        init: Initialization,
    ) -> Result<(Vec<f64>, NewtonStats, f64)> {
        check_level(k)?;
        let size = self.solver.operator().size();
        if f.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                actual: f.len(),
            });
        }
        if let Some(v) = f.iter().find(|&&v| !(v >= 0.0)) {
            return Err(invalid(format!("source must be nonnegative (found {v})")));
        }
        let zero = vec![0.0; size];
        if f.iter().all(|&v| v == 0.0) {
            return Ok((zero, NewtonStats::default(), 0.0));
        }
        let start = match init {
            Initialization::Zero => zero.clone(),
            Initialization::LinearSolve => {
                let fk: Vec<f64> = f.iter().map(|&v| truncate(v, k)).collect();
                let mut w = zero.clone();
                self.solver.solve(None, &fk, &mut w)?;
                clamp_roundoff(&mut w)?;
                w
            }
        };
        let gamma = |_: usize| self.gamma;
        let system = NonlinearSystem {
            solver: &self.solver,
            f,
            gamma: &gamma,
            k,
            rhs: &zero,
            step: 0,
        };
        let (w, stats) = system.solve(
            start,
            NEWTON_TOLERANCE,
            MAX_ITERATIONS,
            Some(Self::residual_target(f)),
        )?;
        let residual = system.residual(&w)?;
        Ok((w, stats, residual))
    }

    /// Runs the ladder from zero at each level; returns the top level.
    pub fn solve(&self, f: &[f64], ladder: &[f64]) -> Result<SteadyState> {
        if ladder.is_empty() {
            return Err(invalid("ladder must contain at least one level"));
        }
        if ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("ladder levels must be strictly increasing"));
        }
        let mut levels = Vec::with_capacity(ladder.len());
        let mut previous: Option<Vec<f64>> = None;
        let mut monotone = true;
        let mut last = None;
        for &k in ladder {
            let (w, stats, residual) = self.solve_level(f, k, Initialization::Zero)?;
            if let Some(p) = &previous {
                monotone &= p.iter().zip(&w).all(|(a, b)| a - b <= ORDER_TOLERANCE);
            }
            levels.push(LevelSummary {
                k,
                sup: w.iter().copied().fold(0.0, f64::max),
                iterations: stats.iterations,
                residual,
            });
            previous = Some(w.clone());
            last = Some((w, k, residual));
        }
        let (w, k_used, residual) = last.expect("nonempty ladder");
        Ok(SteadyState {
            w,
            k_used,
            residual,
            levels,
            ladder_monotone: monotone,
        })
    }
}

/// Steady state at the top of `ladder`.
pub fn solve_elliptic(
    op: Arc<OperatorMatrix>,
    gamma: f64,
    f: &[f64],
    ladder: &[f64],
) -> Result<SteadyState> {
    EllipticSolver::new(op, gamma)?.solve(f, ladder)
}
