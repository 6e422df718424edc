//! Reference values independent of the discrete operator: the continuous
//! one-dimensional fractional Laplacian by adaptive quadrature, and the
//! closed-form torsion identity.

use statrs::function::gamma::gamma;

use crate::error::Result;
use crate::operators::normalization_constant;
use crate::quadrature::adaptive;

/// `(-Δ)^s u (x)` for a function `u` supported in `[0, 1]`, `x ∈ (0, 1)`.
///
/// Uses the symmetric second-difference form
/// `c_{1,s} ∫_0^∞ (2u(x) - u(x+z) - u(x-z)) z^{-1-2s} dz`. Past
/// `z = max(x, 1-x)` both shifted values vanish and the remainder is
/// `2 u(x) Z^{-2s} / (2s)`. Below a small cutoff `ε` the second difference
/// is replaced by its quadratic model `D(ε) (z/ε)^2`, which avoids
/// cancellation noise amplified by `z^{-1-2s}`.
pub fn fractional_laplacian_1d<F: Fn(f64) -> f64>(u: F, x: f64, s: f64) -> Result<f64> {
    let c = normalization_constant(1, s)?;
    let near = x.min(1.0 - x);
    let far = x.max(1.0 - x);
    let ux = u(x);
    let eval = |z: f64| {
        let at = |y: f64| if (0.0..=1.0).contains(&y) { u(y) } else { 0.0 };
        (2.0 * ux - at(x + z) - at(x - z)) * z.powf(-1.0 - 2.0 * s)
    };
    let tol = 1e-12;
    let eps = 1e-3 * near;
    let d_eps = eval(eps) * eps.powf(1.0 + 2.0 * s);
    let core = d_eps / (eps * eps) * eps.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    let inner = core + adaptive(eval, eps, near, tol, tol).value;
    let middle = adaptive(eval, near, far, tol, tol).value;
    let tail = 2.0 * ux * far.powf(-2.0 * s) / (2.0 * s);
    Ok(c * (inner + middle + tail))
}

/// `(-Δ)^s (R^2 - |x|^2)_+^s = 4^s Γ(s+1) Γ(n/2+s) / Γ(n/2)`, constant inside
/// the ball of radius `R`, independent of `R`.
///
/// Rescaled to the profile `(1 - |x/R|^2)_+^s` this value gains a factor
/// `R^{-2s}`; see [`torsion_profile_value`].
pub fn torsion_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    4f64.powf(s) * gamma(s + 1.0) * gamma(0.5 * n + s) / gamma(0.5 * n)
}

/// `(-Δ)^s (1 - |x/R|^2)_+^s` inside the ball of radius `R`.
pub fn torsion_profile_value(dim: usize, s: f64, radius: f64) -> f64 {
    torsion_constant(dim, s) * radius.powf(-2.0 * s)
}

/// The torsion profile on the unit interval: `(1 - (2x-1)^2)_+^s`.
pub fn torsion_profile(x: f64, s: f64) -> f64 {
    let y = 2.0 * x - 1.0;
    (1.0 - y * y).max(0.0).powf(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn torsion_half_order_value() {
        assert!((torsion_constant(1, 0.5) - 1.0).abs() < 1e-14);
        assert!((torsion_profile_value(1, 0.5, 0.5) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_oracle_reproduces_torsion_identity() {
        for s in [0.25, 0.5, 0.75] {
            let exact = torsion_profile_value(1, s, 0.5);
            for x in [0.2, 0.35, 0.5, 0.77] {
                let v = fractional_laplacian_1d(|y| torsion_profile(y, s), x, s).unwrap();
                assert!(
                    (v - exact).abs() < 1e-6 * exact,
                    "s {s} x {x}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn oracle_tends_to_laplacian_as_order_grows() {
        // sin(πx) on (0,1): as s → 1 the operator approaches -u'' = π² sin(πx)
        let v = fractional_laplacian_1d(|y| (PI * y).sin(), 0.5, 0.999).unwrap();
        assert!((v - PI * PI).abs() < 0.1 * PI * PI, "{v}");
    }
}
