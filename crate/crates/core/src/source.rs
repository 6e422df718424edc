//! Truncation, the regularized singular source `T_k(f) (u + 1/k)^{-γ}`,
//! exponent fields `γ(x, t)`, data presets and hypothesis validators.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, StripMask};

/// `T_k(σ) = max(-k, min(k, σ))`.
pub fn truncate(sigma: f64, k: f64) -> f64 {
    sigma.clamp(-k, k)
}

/// Values sampled per `(node, step)`; a single step means time-independent.
#[derive(Debug, Clone, PartialEq)]
pub struct Gridded {
    nodes: usize,
    steps: usize,
    values: Vec<f64>,
}

impl Gridded {
    pub fn new(nodes: usize, steps: usize, values: Vec<f64>) -> Result<Self> {
        if nodes == 0 || steps == 0 {
            return Err(invalid("gridded data needs at least one node and one step"));
        }
        if values.len() != nodes * steps {
            return Err(Error::DimensionMismatch {
                expected: nodes * steps,
                actual: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "gridded data contains a non-finite value {v}"
            )));
        }
        Ok(Self {
            nodes,
            steps,
            values,
        })
    }

    /// Time-independent data.
    pub fn stationary(values: Vec<f64>) -> Result<Self> {
        let nodes = values.len();
        Self::new(nodes, 1, values)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Value at `(node, step)`; steps beyond the stored range reuse the last one.
    pub fn at(&self, node: usize, step: usize) -> f64 {
        let m = step.min(self.steps - 1);
        self.values[m * self.nodes + node]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reads `node,step,value` rows (with header). Every `(node, step)` with
    /// `node < nodes` and `step <= max step` must appear exactly once.
    pub fn read_csv(path: &Path, nodes: usize) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for record in reader.deserialize() {
            let row: GriddedRow = record?;
            if row.node >= nodes {
                return Err(invalid(format!(
                    "{}: node {} outside the grid ({} interior nodes)",
                    path.display(),
                    row.node,
                    nodes
                )));
            }
            rows.push(row);
        }
        let steps = rows.iter().map(|r| r.step + 1).max().unwrap_or(0);
        if steps == 0 {
            return Err(invalid(format!("{}: no data rows", path.display())));
        }
        let mut values = vec![f64::NAN; nodes * steps];
        for r in &rows {
            let slot = &mut values[r.step * nodes + r.node];
            if !slot.is_nan() {
                return Err(invalid(format!(
                    "{}: duplicate row for node {} step {}",
                    path.display(),
                    r.node,
                    r.step
                )));
            }
            *slot = r.value;
        }
        if let Some(k) = values.iter().position(|v| v.is_nan()) {
            return Err(invalid(format!(
                "{}: missing row for node {} step {}",
                path.display(),
                k % nodes,
                k / nodes
            )));
        }
        Self::new(nodes, steps, values)
    }
}

#[derive(Debug, Deserialize)]
struct GriddedRow {
    node: usize,
    step: usize,
    value: f64,
}

/// Exponent field `γ(x, t) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaField {
    Constant(f64),
    Sampled {
        data: Gridded,
        lower: f64,
        upper: f64,
    },
}

impl GammaField {
    pub fn constant(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!(
                "γ must be positive and finite (got {gamma})"
            )));
        }
        Ok(GammaField::Constant(gamma))
    }

    pub fn sampled(data: Gridded) -> Result<Self> {
        let lower = data.values().iter().copied().fold(f64::INFINITY, f64::min);
        let upper = data
            .values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(lower > 0.0) {
            return Err(invalid(format!(
                "γ samples must be positive (minimum {lower})"
            )));
        }
        Ok(GammaField::Sampled { data, lower, upper })
    }

    /// Samples `γ(x, t_m)` for `m = 0..=steps` with `t_m = m τ`.
    pub fn from_fn<F: Fn(&[f64], f64) -> f64>(
        grid: &Grid,
        steps: usize,
        tau: f64,
        g: F,
    ) -> Result<Self> {
        let nodes = grid.interior_count();
        let mut values = Vec::with_capacity(nodes * (steps + 1));
        for m in 0..=steps {
            let t = m as f64 * tau;
            values.extend((0..nodes).map(|i| g(grid.point(i), t)));
        }
        Self::sampled(Gridded::new(nodes, steps + 1, values)?)
    }

    /// Continuous profile equal to `low` on the parabolic strip of width `δ`
    /// and rising linearly to `high` across the next `δ` of parabolic distance.
    pub fn strip_profile(
        grid: &Grid,
        steps: usize,
        tau: f64,
        low: f64,
        high: f64,
        delta: f64,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(invalid("strip profile needs δ > 0"));
        }
        Self::from_fn(grid, steps, tau, |x, t| {
            let dist = x
                .iter()
                .map(|&c| c.min(1.0 - c))
                .fold(f64::INFINITY, f64::min);
            let d = dist.min(t);
            low + (high - low) * ((d - delta) / delta).clamp(0.0, 1.0)
        })
    }

    pub fn at(&self, node: usize, step: usize) -> f64 {
        match self {
            GammaField::Constant(g) => *g,
            GammaField::Sampled { data, .. } => data.at(node, step),
        }
    }

    /// `γ_* = inf γ`.
    pub fn lower(&self) -> f64 {
        match self {
            GammaField::Constant(g) => *g,
            GammaField::Sampled { lower, .. } => *lower,
        }
    }

    /// `γ^* = sup γ`.
    pub fn upper(&self) -> f64 {
        match self {
            GammaField::Constant(g) => *g,
            GammaField::Sampled { upper, .. } => *upper,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, GammaField::Constant(_))
    }
}

/// Right-hand side `f(x, t) >= 0`.
#[derive(Clone)]
pub enum SourceTerm {
    Zero,
    Constant(f64),
    /// `scale · t^{-a} · dist(x, ∂Ω)^{-b}`; sampled at nodes and `t = m τ`,
    /// which truncates it at the grid scale.
    Singular {
        scale: f64,
        a: f64,
        b: f64,
    },
    Gridded(Gridded),
    /// Arbitrary `f(node, t)`.
    Custom(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Zero => write!(f, "Zero"),
            SourceTerm::Constant(c) => write!(f, "Constant({c})"),
            SourceTerm::Singular { scale, a, b } => {
                write!(f, "Singular {{ scale: {scale}, a: {a}, b: {b} }}")
            }
            SourceTerm::Gridded(g) => {
                write!(f, "Gridded({} nodes x {} steps)", g.nodes(), g.steps())
            }
            SourceTerm::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl SourceTerm {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(invalid(format!(
                "source must be nonnegative and finite (got {c})"
            )));
        }
        Ok(if c == 0.0 {
            SourceTerm::Zero
        } else {
            SourceTerm::Constant(c)
        })
    }

    pub fn singular(scale: f64, a: f64, b: f64) -> Result<Self> {
        if !(scale >= 0.0) || !(a >= 0.0) || !(b >= 0.0) {
            return Err(invalid("singular source needs scale, a, b >= 0"));
        }
        Ok(SourceTerm::Singular { scale, a, b })
    }

    pub fn gridded(data: Gridded) -> Result<Self> {
        if let Some(v) = data.values().iter().find(|&&v| v < 0.0) {
            return Err(invalid(format!(
                "source data must be nonnegative (found {v})"
            )));
        }
        Ok(SourceTerm::Gridded(data))
    }

    /// Samples `f(·, t)` on the interior nodes for step `step`.
    pub fn sample(&self, grid: &Grid, step: usize, t: f64) -> Vec<f64> {
        let nodes = grid.interior_count();
        match self {
            SourceTerm::Zero => vec![0.0; nodes],
            SourceTerm::Constant(c) => vec![*c; nodes],
            SourceTerm::Singular { scale, a, b } => {
                let tf = if *a == 0.0 { 1.0 } else { t.powf(-a) };
                (0..nodes)
                    .map(|i| scale * tf * grid.boundary_distance(i).powf(-b))
                    .collect()
            }
            SourceTerm::Gridded(g) => (0..nodes).map(|i| g.at(i, step)).collect(),
            SourceTerm::Custom(f) => (0..nodes).map(|i| f(i, t)).collect(),
        }
    }

    /// True when `f` does not depend on time.
    pub fn is_stationary(&self) -> bool {
        match self {
            SourceTerm::Zero | SourceTerm::Constant(_) => true,
            SourceTerm::Singular { a, .. } => *a == 0.0,
            SourceTerm::Gridded(g) => g.steps() == 1,
            SourceTerm::Custom(_) => false,
        }
    }

    /// `sup f` when it is known without sampling.
    pub fn known_sup(&self) -> Option<f64> {
        match self {
            SourceTerm::Zero => Some(0.0),
            SourceTerm::Constant(c) => Some(*c),
            SourceTerm::Singular { scale, a, b } if *a == 0.0 && *b == 0.0 => Some(*scale),
            SourceTerm::Gridded(g) => Some(g.values().iter().copied().fold(0.0, f64::max)),
            _ => None,
        }
    }

    /// `self` multiplied by a nonnegative factor.
    pub fn scaled(&self, factor: f64) -> SourceTerm {
        match self {
            SourceTerm::Zero => SourceTerm::Zero,
            SourceTerm::Constant(c) => SourceTerm::Constant(c * factor),
            SourceTerm::Singular { scale, a, b } => SourceTerm::Singular {
                scale: scale * factor,
                a: *a,
                b: *b,
            },
            SourceTerm::Gridded(g) => SourceTerm::Gridded(Gridded {
                values: g.values.iter().map(|v| v * factor).collect(),
                ..g.clone()
            }),
            SourceTerm::Custom(f) => {
                let f = f.clone();
                SourceTerm::Custom(Arc::new(move |i, t| factor * f(i, t)))
            }
        }
    }
}

/// Initial datum `u_0 >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    Constant(f64),
    Field(Vec<f64>),
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let nodes = grid.interior_count();
        let v = match self {
            InitialData::Zero => vec![0.0; nodes],
            InitialData::Constant(c) => vec![*c; nodes],
            InitialData::Field(v) => {
                if v.len() != nodes {
                    return Err(Error::DimensionMismatch {
                        expected: nodes,
                        actual: v.len(),
                    });
                }
                v.clone()
            }
        };
        if let Some(x) = v.iter().find(|&&x| !(x >= 0.0)) {
            return Err(invalid(format!(
                "initial datum must be nonnegative (found {x})"
            )));
        }
        Ok(v)
    }

    /// `sup u_0`.
    pub fn sup(&self) -> f64 {
        match self {
            InitialData::Zero => 0.0,
            InitialData::Constant(c) => *c,
            InitialData::Field(v) => v.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `self + shift`.
    pub fn shifted(&self, shift: f64) -> InitialData {
        match self {
            InitialData::Zero => InitialData::Constant(shift),
            InitialData::Constant(c) => InitialData::Constant(c + shift),
            InitialData::Field(v) => InitialData::Field(v.iter().map(|x| x + shift).collect()),
        }
    }
}

/// Integrability class the user asserts for `f`. Metadata only: samples
/// cannot certify membership in a Lebesgue space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DeclaredClass {
    Unspecified,
    Bounded,
    /// `L^m(Ω_T)`.
    Lebesgue {
        m: f64,
    },
    /// `L^r(0, T; L^q(Ω))`.
    Bochner {
        r: f64,
        q: f64,
    },
}

impl fmt::Display for DeclaredClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeclaredClass::Unspecified => write!(f, "unspecified"),
            DeclaredClass::Bounded => write!(f, "L^inf"),
            DeclaredClass::Lebesgue { m } => write!(f, "L^{m}(Omega_T)"),
            DeclaredClass::Bochner { r, q } => write!(f, "L^{r}(0,T;L^{q})"),
        }
    }
}

/// Data of one problem instance.
#[derive(Debug, Clone)]
pub struct SourceData {
    pub f: SourceTerm,
    pub u0: InitialData,
    pub declared_class: DeclaredClass,
}

impl SourceData {
    pub fn new(f: SourceTerm, u0: InitialData) -> Self {
        let declared_class = if f.known_sup().is_some() {
            DeclaredClass::Bounded
        } else {
            DeclaredClass::Unspecified
        };
        Self {
            f,
            u0,
            declared_class,
        }
    }

    pub fn with_class(mut self, class: DeclaredClass) -> Self {
        self.declared_class = class;
        self
    }
}

/// `T_k(f) (u + 1/k)^{-γ}` pointwise at step `step`.
pub fn regularized_rhs(
    f: &[f64],
    u: &[f64],
    gamma: &GammaField,
    step: usize,
    k: f64,
) -> Result<Vec<f64>> {
    check_level(k)?;
    if f.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: f.len(),
        });
    }
    let eps = 1.0 / k;
    u.iter()
        .zip(f)
        .enumerate()
        .map(|(i, (&ui, &fi))| {
            if !(ui >= 0.0) {
                return Err(Error::NegativeState { node: i, value: ui });
            }
            Ok(truncate(fi, k) * (ui + eps).powf(-gamma.at(i, step)))
        })
        .collect()
}

/// Source value and its (nonpositive) derivative in `u` at one node:
/// `(g, -∂g/∂u)` with `g = T_k(f) (u + 1/k)^{-γ}`.
pub(crate) fn source_and_slope(f: f64, u: f64, gamma: f64, k: f64) -> (f64, f64) {
    let fk = truncate(f, k);
    let base = u + 1.0 / k;
    let g = fk * base.powf(-gamma);
    (g, gamma * g / base)
}

pub(crate) fn check_level(k: f64) -> Result<()> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(invalid(format!(
            "ladder level must be a finite k >= 1 (got {k})"
        )));
    }
    Ok(())
}

/// Hypothesis on `γ` restricted to the parabolic strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GammaCheck {
    /// `γ <= 1` on the strip.
    StripAtMostOne,
    /// `sup γ < threshold` on the strip.
    StripBelow { threshold: f64 },
}

/// Outcome of [`validate_gamma_profile`].
#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub check: GammaCheck,
    pub passed: bool,
    pub samples_checked: usize,
    /// Largest strip value and where it occurs, `(node, step, γ)`.
    pub worst: Option<(usize, usize, f64)>,
    pub violations: usize,
}

/// Checks the strip condition on `γ`; failure is reported, not raised.
pub fn validate_gamma_profile(
    gamma: &GammaField,
    strip: &StripMask,
    check: GammaCheck,
) -> GammaReport {
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut samples = 0;
    let mut violations = 0;
    let bad = |g: f64| match check {
        GammaCheck::StripAtMostOne => g > 1.0,
        GammaCheck::StripBelow { threshold } => g >= threshold,
    };
    for (node, step) in strip.samples() {
        let g = gamma.at(node, step);
        samples += 1;
        if bad(g) {
            violations += 1;
        }
        if worst.is_none_or(|w| g > w.2) {
            worst = Some((node, step, g));
        }
    }
    GammaReport {
        check,
        passed: violations == 0,
        samples_checked: samples,
        worst,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, strip_mask};
    use proptest::prelude::*;

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate(5.0, 3.0), 3.0);
        assert_eq!(truncate(-7.0, 2.0), -2.0);
        assert_eq!(truncate(0.5, 1.0), 0.5);
    }

    #[test]
    fn regularized_examples() {
        let g1 = GammaField::constant(1.0).unwrap();
        let r = regularized_rhs(&[1.0; 3], &[0.0; 3], &g1, 0, 2.0).unwrap();
        assert!(r.iter().all(|&v| (v - 2.0).abs() < 1e-15));
        let g2 = GammaField::constant(2.0).unwrap();
        let r = regularized_rhs(&[1.0], &[1.0], &g2, 0, 1e12).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-11);
        let r = regularized_rhs(&[10.0], &[0.0], &g2, 0, 3.0).unwrap();
        assert!(r[0] <= 3.0 * 3f64.powi(2) + 1e-12);
        assert!((r[0] - 27.0).abs() < 1e-12);
    }

    #[test]
    fn negative_state_is_rejected() {
        let g = GammaField::constant(1.0).unwrap();
        assert!(matches!(
            regularized_rhs(&[1.0, 1.0], &[0.5, -1e-3], &g, 0, 2.0),
            Err(Error::NegativeState { node: 1, .. })
        ));
        assert!(regularized_rhs(&[1.0], &[0.5], &g, 0, 0.5).is_err());
    }

    #[test]
    fn gamma_validator_examples() {
        let g = build_grid(1, 8).unwrap();
        let steps = 10;
        let tau = 0.05;
        let strip = strip_mask(&g, 0.25, steps, tau).unwrap();
        let half = GammaField::constant(0.5).unwrap();
        assert!(validate_gamma_profile(&half, &strip, GammaCheck::StripAtMostOne).passed);

        // γ = 0.5 + dist: on the strip, dist < 0.25 or t < 0.25 (then dist ≤ 0.5)
        let ramp = GammaField::from_fn(&g, steps, tau, |x, _| 0.5 + x[0].min(1.0 - x[0])).unwrap();
        let report = validate_gamma_profile(&ramp, &strip, GammaCheck::StripAtMostOne);
        // early steps include the centre x = 0.5 where γ = 1, still ≤ 1
        assert!(report.passed);
        let (node, step, value) = report.worst.unwrap();
        assert_eq!(g.point(node)[0], 0.5);
        assert!(step as f64 * tau < 0.25);
        assert_eq!(value, 1.0);

        let two = GammaField::constant(2.0).unwrap();
        let report =
            validate_gamma_profile(&two, &strip, GammaCheck::StripBelow { threshold: 1.5 });
        assert!(!report.passed);
        assert_eq!(report.violations, strip.count());
    }

    #[test]
    fn strip_profile_respects_bounds() {
        let g = build_grid(2, 12).unwrap();
        let gamma = GammaField::strip_profile(&g, 20, 0.01, 0.8, 1.6, 0.1).unwrap();
        assert!((gamma.lower() - 0.8).abs() < 1e-15);
        assert!(gamma.upper() <= 1.6);
        let strip = strip_mask(&g, 0.1, 20, 0.01).unwrap();
        assert!(validate_gamma_profile(&gamma, &strip, GammaCheck::StripAtMostOne).passed);
    }

    #[test]
    fn gridded_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(
            &path,
            "node,step,value\n0,0,1.0\n1,0,2.0\n0,1,3.0\n1,1,4.0\n",
        )
        .unwrap();
        let g = Gridded::read_csv(&path, 2).unwrap();
        assert_eq!(g.steps(), 2);
        assert_eq!(g.at(1, 1), 4.0);
        assert_eq!(g.at(0, 7), 3.0);
        std::fs::write(&path, "node,step,value\n0,0,1.0\n0,1,3.0\n1,1,4.0\n").unwrap();
        assert!(Gridded::read_csv(&path, 2).is_err());
    }

    proptest! {
        #[test]
        fn truncate_is_lipschitz_and_idempotent(a in -1e3f64..1e3, b in -1e3f64..1e3, k in 0.01f64..100.0) {
            prop_assert!((truncate(a, k) - truncate(b, k)).abs() <= (a - b).abs());
            prop_assert_eq!(truncate(truncate(a, k), k), truncate(a, k));
        }

        #[test]
        fn regularized_rhs_is_monotone(
            f in 0.0f64..50.0,
            u in 0.0f64..5.0,
            du in 0.0f64..5.0,
            gamma in 0.05f64..4.0,
            k in 1.0f64..200.0,
            dk in 0.0f64..200.0,
        ) {
            let g = GammaField::constant(gamma).unwrap();
            let base = regularized_rhs(&[f], &[u], &g, 0, k).unwrap()[0];
            let more_u = regularized_rhs(&[f], &[u + du], &g, 0, k).unwrap()[0];
            let more_k = regularized_rhs(&[f], &[u], &g, 0, k + dk).unwrap()[0];
            prop_assert!(more_u <= base * (1.0 + 1e-14));
            prop_assert!(more_k >= base * (1.0 - 1e-14));
            prop_assert!(base <= 1f64.max(k.powf(gamma)) * truncate(f, k) * (1.0 + 1e-12));
        }
    }
}
