//! Elementary inequalities between powers of nonnegative numbers, evaluated
//! without cancellation.

use serde::Serialize;

use crate::error::{invalid, Result};

const RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityBranch {
    /// `(x-y)(x^α - y^α) >= 4α/(α+1)^2 (x^{(α+1)/2} - y^{(α+1)/2})^2`.
    Product,
    /// `(x-y)/(x^α - y^α) <= (x^{1-α} + y^{1-α})/α` for `0 < α <= 1`, `x != y`.
    Quotient,
    /// `(x+y)^{α-1} |x-y| <= C_α |x^α - y^α|` for `α >= 1`.
    PowerDifference { c_alpha: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityOutcome {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// Distance to failure in the direction of the inequality (`>= 0` when it holds exactly).
    pub slack: f64,
}

/// `x^a - y^a` for `x, y >= 0`, `a > 0`, accurate when `x ≈ y`.
pub(crate) fn power_difference(x: f64, y: f64, a: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    let (hi, lo, sign) = if x > y { (x, y, 1.0) } else { (y, x, -1.0) };
    // hi^a - lo^a = hi^a (1 - (lo/hi)^a) = -hi^a expm1(a ln(1 + (lo-hi)/hi))
    sign * hi.powf(a) * -(a * ((lo - hi) / hi).ln_1p()).exp_m1()
}

/// Evaluates one branch at `(x, y, α)`.
pub fn algebraic_inequality_oracle(
    x: f64,
    y: f64,
    alpha: f64,
    branch: InequalityBranch,
) -> Result<InequalityOutcome> {
    if !(x >= 0.0 && y >= 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(invalid(format!(
            "x and y must be finite and nonnegative (got {x}, {y})"
        )));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("α must be positive (got {alpha})")));
    }
    let (lhs, rhs, le) = match branch {
        InequalityBranch::Product => {
            let lhs = (x - y) * power_difference(x, y, alpha);
            let d = power_difference(x, y, 0.5 * (alpha + 1.0));
            let rhs = 4.0 * alpha / (alpha + 1.0).powi(2) * d * d;
            (lhs, rhs, false)
        }
        InequalityBranch::Quotient => {
            if alpha > 1.0 {
                return Err(invalid(format!(
                    "the quotient inequality needs 0 < α <= 1 (got {alpha})"
                )));
            }
            if x == y {
                return Err(invalid("the quotient inequality needs x != y"));
            }
            let lhs = (x - y) / power_difference(x, y, alpha);
            let rhs = (x.powf(1.0 - alpha) + y.powf(1.0 - alpha)) / alpha;
            (lhs, rhs, true)
        }
        InequalityBranch::PowerDifference { c_alpha } => {
            if alpha < 1.0 {
                return Err(invalid(format!(
                    "the power-difference inequality needs α >= 1 (got {alpha})"
                )));
            }
            let lhs = (x + y).powf(alpha - 1.0) * (x - y).abs();
            let rhs = c_alpha * power_difference(x, y, alpha).abs();
            (lhs, rhs, true)
        }
    };
    let slack = if le { rhs - lhs } else { lhs - rhs };
    let scale = lhs.abs().max(rhs.abs());
    Ok(InequalityOutcome {
        holds: slack >= -RELATIVE_TOLERANCE * scale,
        lhs,
        rhs,
        slack,
    })
}

/// Smallest `C_α` found for the power-difference branch.
///
/// By homogeneity the ratio depends only on `t = y/x ∈ [0, 1)`:
/// `R(t) = (1+t)^{α-1} (1-t) / (1-t^α)`. The maximum is taken over a
/// log-spaced probe set, points `1 - 10^{-j}` approaching the diagonal, and
/// the two end values `R(0) = 1` and `R(1^-) = 2^{α-1}/α`.
pub fn calibrate_c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(invalid(format!(
            "calibration needs a finite α >= 1 (got {alpha})"
        )));
    }
    let ratio = |t: f64| (1.0 + t).powf(alpha - 1.0) * (1.0 - t) / power_difference(1.0, t, alpha);
    let log_spaced = (0..=2000)
        .map(|i| 10f64.powf(-12.0 + 12.0 * i as f64 / 2000.0))
        .filter(|&t| t < 1.0);
    let near_one = (1..=12).map(|j| 1.0 - 10f64.powi(-j));
    let uniform = (0..1000).map(|i| i as f64 / 1000.0);
    let probed = log_spaced
        .chain(near_one)
        .chain(uniform)
        .map(ratio)
        .fold(0.0, f64::max);
    Ok(probed.max(1.0).max(2f64.powf(alpha - 1.0) / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_arguments_give_zero_slack() {
        for a in [0.25, 1.0, 3.0] {
            let o = algebraic_inequality_oracle(2.0, 2.0, a, InequalityBranch::Product).unwrap();
            assert!(o.holds);
            assert_eq!(o.slack, 0.0);
        }
    }

    #[test]
    fn hand_example() {
        let o = algebraic_inequality_oracle(4.0, 1.0, 2.0, InequalityBranch::Product).unwrap();
        assert!((o.lhs - 45.0).abs() < 1e-12);
        assert!((o.rhs - 392.0 / 9.0).abs() < 1e-12);
        assert!(o.holds);
    }

    #[test]
    fn preconditions() {
        assert!(algebraic_inequality_oracle(-1.0, 1.0, 1.0, InequalityBranch::Product).is_err());
        assert!(algebraic_inequality_oracle(1.0, 2.0, 1.5, InequalityBranch::Quotient).is_err());
        assert!(algebraic_inequality_oracle(1.0, 1.0, 0.5, InequalityBranch::Quotient).is_err());
        let c = InequalityBranch::PowerDifference { c_alpha: 1.0 };
        assert!(algebraic_inequality_oracle(1.0, 2.0, 0.5, c).is_err());
    }

    #[test]
    fn calibrated_constants() {
        assert!((calibrate_c_alpha(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((calibrate_c_alpha(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((calibrate_c_alpha(3.0).unwrap() - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn power_difference_is_accurate_near_the_diagonal() {
        let x = 1.0 + 1e-12;
        let exact = 3.0 * (x - 1.0);
        let d = power_difference(x, 1.0, 3.0);
        assert!((d - exact).abs() < 1e-10 * exact);
        assert_eq!(power_difference(2.0, 0.0, 2.0), 4.0);
    }

    #[test]
    fn random_probes_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in [0.25, 0.5, 1.0, 2.0, 3.0] {
            for _ in 0..2000 {
                let x = 10f64.powf(rng.random_range(-6.0..6.0));
                let y = 10f64.powf(rng.random_range(-6.0..6.0));
                assert!(
                    algebraic_inequality_oracle(x, y, a, InequalityBranch::Product)
                        .unwrap()
                        .holds
                );
            }
        }
    }
}
