//! Monotone Newton iteration for `σ u + A u - g(u) = r` with
//! `g(u) = T_k(f) (u + 1/k)^{-γ}`.
//!
//! `g` is convex and decreasing, so the residual is concave with Jacobian
//! `σ I + A + D`, `D = -g'(u) >= 0`, an M-matrix. From any `u >= 0` the first
//! Newton iterate is a nonnegative subsolution and all later iterates increase
//! monotonically to the solution.

use crate::error::{Error, Result};
use crate::linalg::ShiftedSolver;
use crate::source::source_and_slope;

/// Negative entries down to this multiple of `max(1, ‖u‖_∞)` count as
/// round-off and are set to zero.
pub(crate) const CLAMP_FRACTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default)]
pub struct NewtonStats {
    pub iterations: usize,
    pub linear_iterations: usize,
    pub last_update: f64,
}

/// One nonlinear solve. `gamma(i)` gives the exponent at node `i`.
pub(crate) struct NonlinearSystem<'a> {
    pub solver: &'a ShiftedSolver,
    pub f: &'a [f64],
    pub gamma: &'a dyn Fn(usize) -> f64,
    pub k: f64,
    pub rhs: &'a [f64],
    pub step: usize,
}

impl NonlinearSystem<'_> {
    /// `g(u)` and the diagonal `D = -g'(u)`.
    pub fn source(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        u.iter()
            .enumerate()
            .map(|(i, &ui)| source_and_slope(self.f[i], ui, (self.gamma)(i), self.k))
            .unzip()
    }

    /// Max-norm residual `‖σ u + A u - g(u) - r‖_∞`.
    pub fn residual(&self, u: &[f64]) -> Result<f64> {
        let mut au = vec![0.0; u.len()];
        self.solver.apply(None, u, &mut au)?;
        let (g, _) = self.source(u);
        Ok(au
            .iter()
            .zip(&g)
            .zip(self.rhs)
            .map(|((a, g), r)| (a - g - r).abs())
            .fold(0.0, f64::max))
    }

    /// Iterates from `start` until the max update is below
    /// `tol · max(1, ‖u‖_∞)` and, if given, the residual is below
    /// `residual_target`.
    pub fn solve(
        &self,
        start: Vec<f64>,
        tol: f64,
        max_iterations: usize,
        residual_target: Option<f64>,
    ) -> Result<(Vec<f64>, NewtonStats)> {
        let mut u = start;
        let mut stats = NewtonStats::default();
        let mut streak = 0;
        let mut previous_update = f64::INFINITY;
        for it in 1..=max_iterations {
            let (g, d) = self.source(&u);
            let b: Vec<f64> = (0..u.len())
                .map(|i| self.rhs[i] + g[i] + d[i] * u[i])
                .collect();
            let mut next = u.clone();
            let lin = self.solver.solve(Some(&d), &b, &mut next)?;
            stats.linear_iterations += lin.iterations;
            clamp_roundoff(&mut next)?;
            let update = next
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = next.iter().copied().fold(1.0, f64::max);
            // after the first iterate the sequence must increase; growing
            // updates are expected while it does (a far-away start), so only
            // growth combined with loss of monotonicity counts as divergence
            let monotone = it == 1 || next.iter().zip(&u).all(|(a, b)| *a >= b - tol * scale);
            u = next;
            stats.iterations = it;
            stats.last_update = update;
            if update > previous_update && !monotone {
                streak += 1;
                if streak >= 10 {
                    return Err(Error::NonlinearDiverging {
                        step: self.step,
                        streak,
                    });
                }
            } else {
                streak = 0;
            }
            previous_update = update;
            if update <= tol * scale {
                match residual_target {
                    Some(target) if self.residual(&u)? > target => continue,
                    _ => return Ok((u, stats)),
                }
            }
        }
        Err(Error::NonlinearNotConverged {
            step: self.step,
            iterations: max_iterations,
            last_update: stats.last_update,
        })
    }
}

/// Zeroes round-off negatives; anything larger signals lost positivity.
pub(crate) fn clamp_roundoff(u: &mut [f64]) -> Result<()> {
    let scale = u.iter().map(|v| v.abs()).fold(1.0, f64::max);
    for (i, v) in u.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v >= -CLAMP_FRACTION * scale {
                *v = 0.0;
            } else {
                return Err(Error::NegativeState { node: i, value: *v });
            }
        }
    }
    Ok(())
}
