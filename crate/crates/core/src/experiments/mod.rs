//! Named, reproducible scenarios that turn qualitative properties of the
//! singular problem into pass/fail checks on discrete runs.

mod manufactured;
mod scenarios;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolve::{ProblemSpec, Scheme, Trajectory};
use crate::grid::{build_grid, Grid};
use crate::io::Table;
use crate::operators::{assemble_mixed, OperatorMatrix};
use crate::source::{GammaField, Gridded, InitialData, SourceData, SourceTerm};

pub use manufactured::{convergence_study, ConvergenceStudy};

/// Exponent `γ`, constant or a strip profile (`inner` on the parabolic strip
/// of width `delta`, rising to `outer` away from it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSpec {
    Constant { value: f64 },
    Strip { inner: f64, outer: f64, delta: f64 },
}

impl GammaSpec {
    pub fn field(&self, grid: &Grid, steps: usize, tau: f64) -> Result<GammaField> {
        match *self {
            GammaSpec::Constant { value } => GammaField::constant(value),
            GammaSpec::Strip {
                inner,
                outer,
                delta,
            } => GammaField::strip_profile(grid, steps, tau, inner, outer, delta),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match *self {
            GammaSpec::Constant { value } => Some(value),
            GammaSpec::Strip { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourcePreset {
    Constant {
        value: f64,
    },
    /// `scale · t^{-a} · dist(x, ∂Ω)^{-b}`.
    Singular {
        scale: f64,
        a: f64,
        b: f64,
    },
    /// CSV with columns `node,step,value`.
    Csv {
        path: PathBuf,
    },
}

impl SourcePreset {
    pub fn build(&self, grid: &Grid) -> Result<SourceData> {
        let f = match self {
            SourcePreset::Constant { value } => SourceTerm::constant(*value)?,
            SourcePreset::Singular { scale, a, b } => SourceTerm::singular(*scale, *a, *b)?,
            SourcePreset::Csv { path } => {
                SourceTerm::gridded(Gridded::read_csv(path, grid.interior_count())?)?
            }
        };
        Ok(SourceData::new(f, InitialData::Zero))
    }

    /// Exponents `(r, q)` with `f ∈ L^r(0,T;L^q)`; a singular preset
    /// `t^{-a} d^{-b}` belongs to every `r < 1/a`, `q < 1/b`, of which the
    /// values `0.99/a`, `0.99/b` are declared.
    pub fn declared_exponents(&self) -> Option<(f64, f64)> {
        let declare = |e: f64| if e == 0.0 { f64::INFINITY } else { 0.99 / e };
        match *self {
            SourcePreset::Constant { .. } => Some((f64::INFINITY, f64::INFINITY)),
            SourcePreset::Singular { a, b, .. } => Some((declare(a), declare(b))),
            SourcePreset::Csv { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPreset {
    Zero,
    Constant {
        value: f64,
    },
    /// CSV with columns `node,step,value`; only step 0 is used.
    Csv {
        path: PathBuf,
    },
}

impl InitialPreset {
    pub fn build(&self, grid: &Grid) -> Result<InitialData> {
        Ok(match self {
            InitialPreset::Zero => InitialData::Zero,
            InitialPreset::Constant { value } => InitialData::Constant(*value),
            InitialPreset::Csv { path } => {
                let g = Gridded::read_csv(path, grid.interior_count())?;
                InitialData::Field((0..g.nodes()).map(|i| g.at(i, 0)).collect())
            }
        })
    }
}

/// Parameters of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub dim: usize,
    pub cells: usize,
    pub s: f64,
    pub gamma: GammaSpec,
    pub source: SourcePreset,
    pub initial: InitialPreset,
    pub horizon: f64,
    pub tau: f64,
    pub ladder: Vec<f64>,
    pub scheme: Scheme,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Default configuration of a registered scenario.
    pub fn preset(name: &str) -> Result<Self> {
        let base = ScenarioConfig {
            dim: 1,
            cells: 64,
            s: 0.5,
            gamma: GammaSpec::Constant { value: 1.0 },
            source: SourcePreset::Constant { value: 1.0 },
            initial: InitialPreset::Zero,
            horizon: 0.5,
            tau: 5e-3,
            ladder: vec![1.0, 2.0, 4.0, 8.0],
            scheme: Scheme::default(),
            seed: 0,
        };
        let c = match lookup(name)?.name {
            "manufactured_convergence" => ScenarioConfig {
                cells: 128,
                gamma: GammaSpec::Constant { value: 0.5 },
                horizon: 0.2,
                tau: 1e-3,
                ladder: vec![1e8],
                ..base
            },
            "monotone_ladder" => ScenarioConfig {
                gamma: GammaSpec::Constant { value: 2.0 },
                ..base
            },
            "comparison_principle" => ScenarioConfig {
                ladder: vec![16.0],
                ..base
            },
            "positivity_floor" => ScenarioConfig {
                ladder: vec![1.0, 2.0, 4.0, 8.0, 16.0],
                ..base
            },
            "bounded_data" => ScenarioConfig {
                cells: 32,
                gamma: GammaSpec::Constant { value: 0.5 },
                ladder: doubling(64.0),
                ..base
            },
            "aronson_serrin" => ScenarioConfig {
                gamma: GammaSpec::Constant { value: 0.5 },
                source: SourcePreset::Singular {
                    scale: 1.0,
                    a: 0.25,
                    b: 0.25,
                },
                ladder: vec![16.0, 64.0, 256.0, 1024.0],
                ..base
            },
            "summability_scan" => ScenarioConfig {
                dim: 3,
                cells: 6,
                gamma: GammaSpec::Constant { value: 0.5 },
                horizon: 0.1,
                tau: 0.01,
                ladder: vec![1000.0],
                ..base
            },
            "variable_gamma" => ScenarioConfig {
                cells: 32,
                gamma: GammaSpec::Strip {
                    inner: 0.75,
                    outer: 2.0,
                    delta: 0.1,
                },
                ladder: vec![1000.0],
                ..base
            },
            "asymptotic_steady" => ScenarioConfig {
                horizon: 20.0,
                tau: 0.01,
                ladder: vec![1e4],
                ..base
            },
            other => unreachable!("registered scenario without preset: {other}"),
        };
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::grid::MAX_DIM).contains(&self.dim) {
            return Err(invalid(format!(
                "dimension must be 1, 2 or 3 (got {})",
                self.dim
            )));
        }
        if self.cells < 2 {
            return Err(invalid(format!(
                "need at least 2 cells per axis (got {})",
                self.cells
            )));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(invalid(format!("s must lie in (0, 1) (got {})", self.s)));
        }
        if self.ladder.is_empty() {
            return Err(invalid("ladder must contain at least one level"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.dim, self.cells)
    }

    pub fn top_level(&self) -> f64 {
        *self.ladder.last().expect("validated ladder is nonempty")
    }

    fn with_cells(&self, cells: usize) -> Self {
        ScenarioConfig {
            cells,
            ..self.clone()
        }
    }

    fn with_source(&self, source: SourcePreset) -> Self {
        ScenarioConfig {
            source,
            ..self.clone()
        }
    }

    fn with_gamma(&self, gamma: GammaSpec) -> Self {
        ScenarioConfig {
            gamma,
            ..self.clone()
        }
    }
}

/// `1, 2, 4, ..., top`.
pub fn doubling(top: f64) -> Vec<f64> {
    std::iter::successors(Some(1.0), |k| Some(k * 2.0))
        .take_while(|&k| k <= top)
        .collect()
}

/// Operator, grid and problem assembled from a configuration.
pub(crate) struct Setup {
    pub grid: Grid,
    pub op: Arc<OperatorMatrix>,
    pub spec: ProblemSpec,
}

impl Setup {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        Self::with_operator(config, None)
    }

    pub fn with_operator(config: &ScenarioConfig, op: Option<Arc<OperatorMatrix>>) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let op = match op {
            Some(op) => op,
            None => Arc::new(assemble_mixed(&grid, config.s)?),
        };
        let steps = (config.horizon / config.tau).round() as usize;
        let gamma = config.gamma.field(&grid, steps, config.tau)?;
        let mut data = config.source.build(&grid)?;
        data.u0 = config.initial.build(&grid)?;
        let spec = ProblemSpec::new(op.clone(), gamma, data, config.horizon, config.tau)?
            .with_ladder(config.ladder.clone())?
            .with_scheme(config.scheme);
        Ok(Self { grid, op, spec })
    }
}

/// How a measured value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Above,
}

impl Comparison {
    fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtMost => measured <= threshold,
            Comparison::AtLeast => measured >= threshold,
            Comparison::Above => measured > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Above => ">",
        }
    }
}

/// Serializes non-finite floats as strings so JSON round-trips.
mod lenient {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// One check: the measured number, the threshold and the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    #[serde(with = "lenient")]
    pub measured: f64,
    #[serde(with = "lenient")]
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
    /// Reported only; never affects the scenario outcome.
    pub exploratory: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    pub fn new(
        check: impl Into<String>,
        measured: f64,
        comparison: Comparison,
        threshold: f64,
    ) -> Self {
        Self {
            check: check.into(),
            measured,
            threshold,
            comparison,
            passed: comparison.holds(measured, threshold),
            exploratory: false,
            note: None,
        }
    }

    pub fn at_most(check: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(check, measured, Comparison::AtMost, threshold)
    }

    pub fn at_least(check: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(check, measured, Comparison::AtLeast, threshold)
    }

    pub fn above(check: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(check, measured, Comparison::Above, threshold)
    }

    pub fn exploratory(mut self) -> Self {
        self.exploratory = true;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.exploratory, self.passed) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        write!(
            f,
            "{status} {}: {:.6e} {} {:.6e}",
            self.check,
            self.measured,
            self.comparison.symbol(),
            self.threshold
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Data for one chart; rendering is left to the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

/// Outcome of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub claims: Vec<Claim>,
    pub config: ScenarioConfig,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// Trajectories worth persisting, with their grid.
    #[serde(skip)]
    pub trajectories: Vec<(Grid, Trajectory)>,
}

impl ScenarioReport {
    fn new(name: &str, config: &ScenarioConfig) -> Self {
        let claims = lookup(name).map(|e| e.claims.to_vec()).unwrap_or_default();
        Self {
            name: name.into(),
            claims,
            config: config.clone(),
            verdicts: Vec::new(),
            tables: Vec::new(),
            plots: Vec::new(),
            trajectories: Vec::new(),
        }
    }

    /// All non-exploratory verdicts passed.
    pub fn passed(&self) -> bool {
        self.verdicts
            .iter()
            .filter(|v| !v.exploratory)
            .all(|v| v.passed)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    fn push(&mut self, v: Verdict) {
        log::info!("{}: {v}", self.name);
        self.verdicts.push(v);
    }
}

/// Properties of the continuous problem that the registry exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Discretization,
    LinearPositivity,
    KatoInequality,
    Comparison,
    InteriorPositivity,
    LadderMonotone,
    LadderCauchyBound,
    BoundedData,
    EnergyEstimate,
    AlgebraicInequalities,
    PowerDataEnergy,
    IntegrableData,
    LocalEstimatesStrongSingularity,
    EnergyThreshold,
    BelowEnergyThreshold,
    AronsonSerrinBound,
    OutsideZoneSummability,
    VariableExponentNearBoundary,
    VariableExponentBelowCritical,
    SteadyState,
    LongTimeLimit,
}

impl Claim {
    pub const ALL: [Claim; 21] = [
        Claim::Discretization,
        Claim::LinearPositivity,
        Claim::KatoInequality,
        Claim::Comparison,
        Claim::InteriorPositivity,
        Claim::LadderMonotone,
        Claim::LadderCauchyBound,
        Claim::BoundedData,
        Claim::EnergyEstimate,
        Claim::AlgebraicInequalities,
        Claim::PowerDataEnergy,
        Claim::IntegrableData,
        Claim::LocalEstimatesStrongSingularity,
        Claim::EnergyThreshold,
        Claim::BelowEnergyThreshold,
        Claim::AronsonSerrinBound,
        Claim::OutsideZoneSummability,
        Claim::VariableExponentNearBoundary,
        Claim::VariableExponentBelowCritical,
        Claim::SteadyState,
        Claim::LongTimeLimit,
    ];
}

type Runner = fn(&ScenarioConfig) -> Result<ScenarioReport>;

pub struct ScenarioEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub claims: &'static [Claim],
    run: Runner,
}

impl fmt::Debug for ScenarioEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioEntry")
            .field("name", &self.name)
            .field("claims", &self.claims)
            .finish()
    }
}

pub static REGISTRY: &[ScenarioEntry] = &[
    ScenarioEntry {
        name: "manufactured_convergence",
        summary: "observed spatial and temporal orders against manufactured solutions",
        claims: &[Claim::Discretization],
        run: manufactured::run,
    },
    ScenarioEntry {
        name: "monotone_ladder",
        summary: "u_k increasing in k with the Cauchy bound u_k' - u_k <= 1/k - 1/k'",
        claims: &[Claim::LadderMonotone, Claim::LadderCauchyBound],
        run: scenarios::monotone_ladder,
    },
    ScenarioEntry {
        name: "comparison_principle",
        summary: "ordered data give ordered solutions; resolvent positivity and Kato inequality",
        claims: &[
            Claim::Comparison,
            Claim::LinearPositivity,
            Claim::KatoInequality,
        ],
        run: scenarios::comparison_principle,
    },
    ScenarioEntry {
        name: "positivity_floor",
        summary: "positive interior floor on the central half-box, nondecreasing along the ladder",
        claims: &[Claim::InteriorPositivity],
        run: scenarios::positivity_floor,
    },
    ScenarioEntry {
        name: "bounded_data",
        summary: "sup norms stabilize for bounded data; energy inequality for γ <= 1",
        claims: &[
            Claim::BoundedData,
            Claim::EnergyEstimate,
            Claim::AlgebraicInequalities,
        ],
        run: scenarios::bounded_data,
    },
    ScenarioEntry {
        name: "aronson_serrin",
        summary: "uniform sup-norm plateau for data inside 1/r + n/(2q) < 1",
        claims: &[Claim::AronsonSerrinBound],
        run: scenarios::aronson_serrin,
    },
    ScenarioEntry {
        name: "summability_scan",
        summary: "norms in the predicted spaces stay stable under one refinement",
        claims: &[
            Claim::EnergyThreshold,
            Claim::BelowEnergyThreshold,
            Claim::OutsideZoneSummability,
            Claim::PowerDataEnergy,
            Claim::IntegrableData,
        ],
        run: scenarios::summability_scan,
    },
    ScenarioEntry {
        name: "variable_gamma",
        summary: "strip conditions on γ(x,t) and the matching norm checks",
        claims: &[
            Claim::VariableExponentNearBoundary,
            Claim::VariableExponentBelowCritical,
            Claim::LocalEstimatesStrongSingularity,
        ],
        run: scenarios::variable_gamma,
    },
    ScenarioEntry {
        name: "asymptotic_steady",
        summary: "u(t) increases to the steady state w",
        claims: &[Claim::SteadyState, Claim::LongTimeLimit],
        run: scenarios::asymptotic_steady,
    },
];

pub fn scenario_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

pub fn lookup(name: &str) -> Result<&'static ScenarioEntry> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownScenario {
            name: name.into(),
            available: scenario_names().join(", "),
        })
}

/// Runs one registered scenario.
pub fn run_scenario(name: &str, config: &ScenarioConfig) -> Result<ScenarioReport> {
    let entry = lookup(name)?;
    config.validate()?;
    (entry.run)(config)
}

/// Runs several scenarios in parallel with their preset configurations.
pub fn run_presets(names: &[&str]) -> Vec<Result<ScenarioReport>> {
    names
        .par_iter()
        .map(|name| ScenarioConfig::preset(name).and_then(|c| run_scenario(name, &c)))
        .collect()
}

/// Runs a raw problem: the ladder with ordering, Cauchy and positivity checks.
pub fn run_problem(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    scenarios::ladder_report("problem", config)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn every_claim_is_exercised() {
        let covered: HashSet<Claim> = REGISTRY
            .iter()
            .flat_map(|e| e.claims.iter().copied())
            .collect();
        for c in Claim::ALL {
            assert!(covered.contains(&c), "{c:?} has no scenario");
        }
        assert_eq!(REGISTRY.len(), 9);
    }

    #[test]
    fn every_scenario_has_a_valid_preset() {
        for name in scenario_names() {
            let c = ScenarioConfig::preset(name).unwrap();
            c.validate().unwrap();
        }
        let err = ScenarioConfig::preset("monotone_ladderr").unwrap_err();
        assert!(err.to_string().contains("monotone_ladder"));
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h: &f64| (h, 3.0 * h.powf(1.5)))
            .collect();
        assert!((log_log_slope(&pts) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn verdicts_round_trip_through_json() {
        let v = Verdict::at_most("x", f64::INFINITY, 1.0).with_note("n");
        assert!(!v.passed);
        let back: Verdict = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        let nan = Verdict::above("y", f64::NAN, 0.0);
        assert!(!nan.passed);
    }

    #[test]
    fn configs_round_trip_through_json() {
        for name in scenario_names() {
            let c = ScenarioConfig::preset(name).unwrap();
            let back: ScenarioConfig =
                serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn doubling_ladder() {
        assert_eq!(doubling(64.0), vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    }
}
