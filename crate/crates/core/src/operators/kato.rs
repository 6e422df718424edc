//! Discrete Kato inequality `A Φ(u) <= Φ'(u) A u` for the regularized absolute
//! value `Φ_ε(u) = sqrt(u² + ε²) - ε`.
//!
//! For a matrix with nonpositive off-diagonals and nonnegative row sums the
//! gap `Φ'(u_i)(Au)_i - (AΦ(u))_i` splits into `Σ_j |a_ij|` times convexity
//! defects plus `r_i (Φ'(u_i) u_i - Φ(u_i))`; both are nonnegative because
//! `Φ` is convex with `Φ(0) = 0`.

use serde::Serialize;

use super::OperatorMatrix;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KatoReport {
    pub epsilon: f64,
    /// `max_i ((AΦ(u))_i - Φ'(u_i)(Au)_i)`; nonpositive when the inequality holds.
    pub worst_excess: f64,
    /// `2 max_i a_ii · max(‖u‖_∞, ε)`, a bound on the size of either side.
    pub scale: f64,
}

impl KatoReport {
    /// Holds up to `relative · scale`.
    pub fn holds(&self, relative: f64) -> bool {
        self.worst_excess <= relative * self.scale
    }
}

pub fn regularized_abs(u: f64, eps: f64) -> f64 {
    // sqrt(u² + ε²) - ε without cancellation for |u| << ε
    u * u / ((u * u + eps * eps).sqrt() + eps)
}

pub fn regularized_abs_slope(u: f64, eps: f64) -> f64 {
    u / (u * u + eps * eps).sqrt()
}

/// Evaluates both sides of the inequality for one field.
pub fn kato_inequality(op: &OperatorMatrix, u: &[f64], eps: f64) -> Result<KatoReport> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("ε must be positive (got {eps})")));
    }
    let phi: Vec<f64> = u.iter().map(|&v| regularized_abs(v, eps)).collect();
    let a_phi = op.apply(&phi)?;
    let a_u = op.apply(u)?;
    let worst_excess = u
        .iter()
        .zip(a_phi.iter().zip(&a_u))
        .map(|(&v, (lhs, au))| lhs - regularized_abs_slope(v, eps) * au)
        .fold(f64::NEG_INFINITY, f64::max);
    let diag = op.diagonal().iter().copied().fold(0.0, f64::max);
    let sup = u.iter().map(|v| v.abs()).fold(eps, f64::max);
    Ok(KatoReport {
        epsilon: eps,
        worst_excess,
        scale: 2.0 * diag * sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::operators::assemble_mixed;

    #[test]
    fn regularized_abs_is_accurate() {
        assert_eq!(regularized_abs(0.0, 1e-3), 0.0);
        assert!((regularized_abs(3.0, 4.0) - 1.0).abs() < 1e-15);
        let tiny = regularized_abs(1e-12, 1.0);
        assert!((tiny - 5e-25).abs() < 1e-38);
    }

    #[test]
    fn holds_for_a_sign_changing_field() {
        let g = build_grid(2, 12).unwrap();
        let a = assemble_mixed(&g, 0.5).unwrap();
        let u: Vec<f64> = (0..a.size())
            .map(|i| {
                let p = g.point(i);
                (5.0 * p[0]).sin() * (3.0 * p[1] + 0.3).cos()
            })
            .collect();
        for eps in [1e-3, 1e-1] {
            let r = kato_inequality(&a, &u, eps).unwrap();
            assert!(r.holds(1e-12), "{r:?}");
        }
    }
}
