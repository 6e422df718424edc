//! Threshold and summability exponents as functions of `(n, γ, m, r, q)`.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Which formula applies outside the bounded region `1/r + n/(2q) < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutsideBranch {
    /// `1/r < n/((n-2) q) - 2/(n-2)`: `σ = q(n-2)(γ+1) / (2(n-2q))`.
    SpaceDominated,
    /// Otherwise: `σ = q r n (γ+1) / (2(n r + 2q - 2 q r))`.
    TimeDominated,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutsideZone {
    pub branch: OutsideBranch,
    /// `None` when the formula's denominator is not positive.
    pub sigma: Option<f64>,
    /// Side condition for `γ < 1`; `None` when `γ >= 1` (no condition).
    pub side_condition: Option<bool>,
    /// Threshold in the side condition (`q >` or `r >` this value).
    pub side_threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    pub n: usize,
    pub gamma: f64,
    pub m: f64,
    pub r: f64,
    pub q: f64,
    /// `m̄ = 2(n+2) / (2(n+2) - n(1-γ))`.
    pub m_bar: f64,
    /// `q̄ = m(γ+1)(n+2) / (n+2 - m(1-γ))`, `None` when out of range.
    pub q_bar: Option<f64>,
    /// `σ = m(γ+1)(n+2) / (n - 2(m-1))`, `None` when out of range.
    pub sigma_l: Option<f64>,
    /// `σ = n(1+γ)/(n-2)` for `L^{γ+1}` data.
    pub sigma_l1: f64,
    /// `γ >= 1`, flagged next to `sigma_l1`.
    pub sigma_l1_flag: bool,
    /// `1/r + n/(2q) < 1`.
    pub aronson_serrin: bool,
    /// Present when `1/r + n/(2q) > 1`.
    pub outside_zone: Option<OutsideZone>,
    pub notes: Vec<String>,
}

fn positive(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 && (num / den).is_finite() {
        Some(num / den)
    } else {
        None
    }
}

/// Evaluates every exponent formula. `r` and `q` may be infinite.
pub fn exponents(n: usize, gamma: f64, m: f64, r: f64, q: f64) -> Result<ExponentReport> {
    if n <= 2 {
        return Err(invalid(format!(
            "the exponent formulas divide by n - 2 and use the Sobolev exponent 2n/(n-2); they need n >= 3 (got {n})"
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid(format!(
            "γ must be positive and finite (got {gamma})"
        )));
    }
    if !(m >= 1.0) || !m.is_finite() {
        return Err(invalid(format!(
            "m must be a finite exponent >= 1 (got {m})"
        )));
    }
    if !(r >= 1.0) || !(q >= 1.0) {
        return Err(invalid(format!(
            "r and q must be >= 1 (got r = {r}, q = {q})"
        )));
    }
    let nf = n as f64;
    let mut notes = Vec::new();

    let m_bar = 2.0 * (nf + 2.0) / (2.0 * (nf + 2.0) - nf * (1.0 - gamma));
    let q_bar = positive(m * (gamma + 1.0) * (nf + 2.0), nf + 2.0 - m * (1.0 - gamma));
    if q_bar.is_none() {
        notes.push("q_bar: formula out of range (n + 2 - m(1-γ) <= 0)".into());
    }
    let sigma_l = positive(m * (gamma + 1.0) * (nf + 2.0), nf - 2.0 * (m - 1.0));
    if sigma_l.is_none() {
        notes.push("sigma_L: formula out of range (n - 2(m-1) <= 0)".into());
    }
    let sigma_l1 = nf * (1.0 + gamma) / (nf - 2.0);
    let sigma_l1_flag = gamma >= 1.0;
    if sigma_l1_flag {
        notes.push(format!(
            "γ >= 1: sigma_L1 = {sigma_l1} (>= 2 clause not interpreted)"
        ));
    }

    let inv_r = 1.0 / r;
    let level = inv_r + nf / (2.0 * q);
    let aronson_serrin = level < 1.0;
    let outside_zone = if level > 1.0 {
        let space = inv_r < nf / ((nf - 2.0) * q) - 2.0 / (nf - 2.0);
        let (branch, sigma, side_condition, side_threshold) = if space {
            let sigma = positive(q * (nf - 2.0) * (gamma + 1.0), 2.0 * (nf - 2.0 * q));
            // (2*/(1-γ))' with 2* = 2n/(n-2)
            let threshold = 2.0 * nf / (2.0 * nf - (1.0 - gamma) * (nf - 2.0));
            let side = (gamma < 1.0).then_some(q > threshold);
            (
                OutsideBranch::SpaceDominated,
                sigma,
                side,
                (gamma < 1.0).then_some(threshold),
            )
        } else {
            let sigma = if r.is_infinite() {
                // limit r → ∞ of q r n(γ+1) / (2(n r + 2q - 2 q r))
                positive(q * nf * (gamma + 1.0), 2.0 * (nf - 2.0 * q))
            } else {
                positive(
                    q * r * nf * (gamma + 1.0),
                    2.0 * (nf * r + 2.0 * q - 2.0 * q * r),
                )
            };
            let threshold = 2.0 / (1.0 + gamma);
            let side = (gamma < 1.0).then_some(r > threshold);
            (
                OutsideBranch::TimeDominated,
                sigma,
                side,
                (gamma < 1.0).then_some(threshold),
            )
        };
        if sigma.is_none() {
            notes.push("outside-zone sigma: formula out of range".into());
        }
        Some(OutsideZone {
            branch,
            sigma,
            side_condition,
            side_threshold,
        })
    } else {
        None
    };

    Ok(ExponentReport {
        n,
        gamma,
        m,
        r,
        q,
        m_bar,
        q_bar,
        sigma_l,
        sigma_l1,
        sigma_l1_flag,
        aronson_serrin,
        outside_zone,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn printed_example() {
        let r = exponents(3, 0.5, 1.0, f64::INFINITY, f64::INFINITY).unwrap();
        assert!((r.m_bar - 20.0 / 17.0).abs() < 1e-15);
        assert!((r.q_bar.unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((r.sigma_l.unwrap() - 2.5).abs() < 1e-15);
        assert!(r.aronson_serrin);
    }

    #[test]
    fn m_bar_tends_to_one() {
        let mut last = f64::INFINITY;
        for eps in [0.5, 0.1, 1e-2, 1e-4, 1e-8] {
            let r = exponents(3, 1.0 - eps, 1.0, 2.0, 2.0).unwrap();
            let gap = r.m_bar - 1.0;
            assert!(gap > 0.0 && gap < last);
            last = gap;
        }
        assert!(last < 1e-8);
    }

    #[test]
    fn aronson_serrin_on_the_diagonal() {
        // r = q in n = 3: 5/(2q) < 1 iff q > 5/2
        for q in [2.0, 2.4, 2.5, 2.6, 4.0] {
            let r = exponents(3, 0.5, 1.0, q, q).unwrap();
            assert_eq!(r.aronson_serrin, q > 2.5, "q = {q}");
        }
    }

    #[test]
    fn low_dimensions_are_rejected() {
        assert!(exponents(2, 0.5, 1.0, 2.0, 2.0).is_err());
        assert!(exponents(3, 0.0, 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn out_of_range_sigma_is_reported() {
        let r = exponents(3, 0.5, 3.0, 2.0, 2.0).unwrap();
        assert!(r.sigma_l.is_none());
        assert!(r.notes.iter().any(|n| n.contains("sigma_L")));
    }

    #[test]
    fn outside_zone_branches() {
        // q small: space-dominated branch
        let r = exponents(4, 0.5, 1.0, 100.0, 1.2).unwrap();
        let z = r.outside_zone.unwrap();
        assert_eq!(z.branch, OutsideBranch::SpaceDominated);
        let expect = 1.2 * 2.0 * 1.5 / (2.0 * (4.0 - 2.4));
        assert!((z.sigma.unwrap() - expect).abs() < 1e-14);
        assert_eq!(z.side_threshold.unwrap(), 8.0 / (8.0 - 0.5 * 2.0));
        // r small: time-dominated branch
        let r = exponents(3, 0.5, 1.0, 1.5, 2.0).unwrap();
        let z = r.outside_zone.unwrap();
        assert_eq!(z.branch, OutsideBranch::TimeDominated);
        let expect = 2.0 * 1.5 * 3.0 * 1.5 / (2.0 * (4.5 + 4.0 - 6.0));
        assert!((z.sigma.unwrap() - expect).abs() < 1e-14);
        assert_eq!(z.side_condition, Some(1.5 > 2.0 / 1.5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn printed_identities(n in 3usize..8, gamma in 0.01f64..0.99, t in 0.0f64..1.0) {
            let m_bar = exponents(n, gamma, 1.0, 2.0, 2.0).unwrap().m_bar;
            prop_assert!(m_bar > 1.0);
            // m ranges over [1, 2 m̄) so both sides of the threshold are hit
            let m = 1.0 + t * (2.0 * m_bar - 1.0);
            let r = exponents(n, gamma, m, 2.0, 2.0).unwrap();
            if let Some(q_bar) = r.q_bar {
                prop_assert_eq!(q_bar < 2.0, m < m_bar);
                prop_assert!(q_bar >= m * (gamma + 1.0) * (1.0 - 1e-14));
                prop_assert!(q_bar > 1.0);
            }
            if let Some(sigma) = r.sigma_l {
                prop_assert!(sigma >= m * (gamma + 1.0) * (1.0 - 1e-14));
            }
        }
    }
}
