//! Run configuration: a TOML document validated key by key before anything
//! is computed.
//!
//! ```toml
//! [run]
//! scenario = "monotone_ladder"   # or `problem = true` for a plain ladder run
//! out = "runs/monotone_ladder"   # optional, `--out` wins
//! emit_plots = true              # optional, default true
//! seed = 0                       # optional, `--seed` wins
//! snapshot_stride = 10           # optional, default: about 20 snapshots per rung
//!
//! [grid]
//! n = 1
//! N = 64
//!
//! [operator]
//! s = 0.5
//!
//! [physics]
//! gamma = 2.0                    # or { kind = "strip", inner = 0.75, outer = 2.0, delta = 0.1 }
//! f = 1.0                        # or { kind = "singular", scale = 1.0, a = 0.25, b = 0.25 }
//!                                # or { kind = "csv", path = "f.csv" }
//! u0 = 0.0                       # or { kind = "csv", path = "u0.csv" }
//! T = 0.5
//! tau = 0.005
//! scheme = "imex-fixed-point"    # optional, or "imex-lagged"
//!
//! [ladder]
//! levels = [1, 2, 4, 8]
//! ```
//!
//! Relative CSV paths are resolved against the directory of the config file.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml_edit::{Document, Item, TableLike};

use mixlab::evolve::Scheme;
use mixlab::experiments::{
    lookup, scenario_names, GammaSpec, InitialPreset, ScenarioConfig, SourcePreset,
};

use crate::error::{CliError, SchemaError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Scenario { name: String },
    Problem,
}

impl Target {
    pub fn name(&self) -> &str {
        match self {
            Target::Scenario { name } => name,
            Target::Problem => "problem",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub target: Target,
    pub problem: ScenarioConfig,
    pub out: Option<PathBuf>,
    pub emit_plots: bool,
    pub snapshot_stride: Option<usize>,
}

impl RunConfig {
    /// Steps between snapshots; about 20 per rung unless configured.
    pub fn stride(&self) -> usize {
        self.snapshot_stride.unwrap_or_else(|| {
            let steps = (self.problem.horizon / self.problem.tau).round() as usize;
            (steps / 20).max(1)
        })
    }

    /// Equivalent TOML document; parsing it gives back `self`.
    pub fn to_toml(&self) -> String {
        let p = &self.problem;
        let num = |v: f64| {
            if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
                format!("{v:.1}")
            } else {
                format!("{v:?}")
            }
        };
        let quote = |s: &str| toml_edit::Value::from(s).to_string().trim().to_string();
        let mut out = String::from("[run]\n");
        match &self.target {
            Target::Scenario { name } => out += &format!("scenario = {}\n", quote(name)),
            Target::Problem => out += "problem = true\n",
        }
        if let Some(dir) = &self.out {
            out += &format!("out = {}\n", quote(&dir.to_string_lossy()));
        }
        out += &format!("emit_plots = {}\nseed = {}\n", self.emit_plots, p.seed);
        if let Some(s) = self.snapshot_stride {
            out += &format!("snapshot_stride = {s}\n");
        }
        out += &format!(
            "\n[grid]\nn = {}\nN = {}\n\n[operator]\ns = {}\n\n[physics]\n",
            p.dim,
            p.cells,
            num(p.s)
        );
        out += &match &p.gamma {
            GammaSpec::Constant { value } => format!("gamma = {}\n", num(*value)),
            GammaSpec::Strip {
                inner,
                outer,
                delta,
            } => format!(
                "gamma = {{ kind = \"strip\", inner = {}, outer = {}, delta = {} }}\n",
                num(*inner),
                num(*outer),
                num(*delta)
            ),
        };
        out += &match &p.source {
            SourcePreset::Constant { value } => format!("f = {}\n", num(*value)),
            SourcePreset::Singular { scale, a, b } => format!(
                "f = {{ kind = \"singular\", scale = {}, a = {}, b = {} }}\n",
                num(*scale),
                num(*a),
                num(*b)
            ),
            SourcePreset::Csv { path } => format!(
                "f = {{ kind = \"csv\", path = {} }}\n",
                quote(&path.to_string_lossy())
            ),
        };
        out += &match &p.initial {
            InitialPreset::Zero => "u0 = 0.0\n".to_string(),
            InitialPreset::Constant { value } => format!("u0 = {}\n", num(*value)),
            InitialPreset::Csv { path } => format!(
                "u0 = {{ kind = \"csv\", path = {} }}\n",
                quote(&path.to_string_lossy())
            ),
        };
        let levels: Vec<String> = p.ladder.iter().map(|&k| num(k)).collect();
        out += &format!(
            "T = {}\ntau = {}\nscheme = \"{}\"\n\n[ladder]\nlevels = [{}]\n",
            num(p.horizon),
            num(p.tau),
            p.scheme,
            levels.join(", ")
        );
        out
    }
}

/// Reads and validates a config file.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base).map_err(|source| CliError::Schema {
        path: path.to_path_buf(),
        source,
    })
}

/// Validates a config document; `base` anchors relative CSV paths.
pub fn parse(text: &str, base: &Path) -> Result<RunConfig, SchemaError> {
    let doc = Document::parse(text).map_err(|e| SchemaError {
        line: e.span().map(|s| line_of(text, s.start)),
        key: None,
        message: e.message().trim().to_string(),
    })?;
    Parser { text, base }.document(doc.as_table())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

const SECTIONS: &[&str] = &["run", "grid", "operator", "physics", "ladder"];
const RUN_KEYS: &[&str] = &[
    "scenario",
    "problem",
    "out",
    "emit_plots",
    "seed",
    "snapshot_stride",
];
const GRID_KEYS: &[&str] = &["n", "N"];
const OPERATOR_KEYS: &[&str] = &["s"];
const PHYSICS_KEYS: &[&str] = &["gamma", "f", "u0", "T", "tau", "scheme"];
const LADDER_KEYS: &[&str] = &["levels"];

struct Parser<'a> {
    text: &'a str,
    base: &'a Path,
}

/// A table together with its dotted path and the position of its header.
struct Section<'t> {
    path: String,
    table: &'t dyn TableLike,
    span: Option<Range<usize>>,
}

impl<'a> Parser<'a> {
    fn error(
        &self,
        span: Option<Range<usize>>,
        key: &str,
        message: impl Into<String>,
    ) -> SchemaError {
        SchemaError {
            line: span.map(|s| line_of(self.text, s.start)),
            key: (!key.is_empty()).then(|| key.to_string()),
            message: message.into(),
        }
    }

    fn section<'t>(&self, root: &'t dyn TableLike, name: &str) -> Result<Section<'t>, SchemaError> {
        match root.get(name) {
            None => Err(self.error(
                Some(0..0),
                name,
                format!("missing required section [{name}]"),
            )),
            Some(item) => {
                let table = item.as_table_like().ok_or_else(|| {
                    self.error(
                        item.span(),
                        name,
                        format!("expected a table, found {}", item.type_name()),
                    )
                })?;
                let span = item
                    .as_table()
                    .and_then(|t| t.span())
                    .or_else(|| item.span());
                Ok(Section {
                    path: name.into(),
                    table,
                    span,
                })
            }
        }
    }

    fn reject_unknown(&self, section: &Section<'_>, allowed: &[&str]) -> Result<(), SchemaError> {
        for (key, _) in section.table.iter() {
            if !allowed.contains(&key) {
                let span = section.table.key(key).and_then(|k| k.span());
                let full = join(&section.path, key);
                return Err(self.error(
                    span,
                    &full,
                    format!("unknown key (allowed: {})", allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    fn required<'t>(&self, section: &Section<'t>, key: &str) -> Result<&'t Item, SchemaError> {
        section.table.get(key).ok_or_else(|| {
            self.error(
                section.span.clone(),
                &join(&section.path, key),
                "missing required key",
            )
        })
    }

    fn number(&self, item: &Item, key: &str) -> Result<f64, SchemaError> {
        item.as_float()
            .or_else(|| item.as_integer().map(|i| i as f64))
            .ok_or_else(|| {
                self.error(
                    item.span(),
                    key,
                    format!("expected a number, found {}", item.type_name()),
                )
            })
    }

    fn positive(&self, item: &Item, key: &str) -> Result<f64, SchemaError> {
        let v = self.number(item, key)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(
                item.span(),
                key,
                format!("must be positive and finite (got {v})"),
            ))
        }
    }

    fn count(&self, item: &Item, key: &str) -> Result<usize, SchemaError> {
        let i = item.as_integer().ok_or_else(|| {
            self.error(
                item.span(),
                key,
                format!("expected an integer, found {}", item.type_name()),
            )
        })?;
        usize::try_from(i)
            .map_err(|_| self.error(item.span(), key, format!("must be nonnegative (got {i})")))
    }

    fn number_field(
        &self,
        t: &dyn TableLike,
        span: Option<Range<usize>>,
        key: &str,
        field: &str,
    ) -> Result<f64, SchemaError> {
        let full = join(key, field);
        let item = t
            .get(field)
            .ok_or_else(|| self.error(span, &full, "missing required key"))?;
        self.number(item, &full)
    }

    fn path_field(
        &self,
        t: &dyn TableLike,
        span: Option<Range<usize>>,
        key: &str,
    ) -> Result<PathBuf, SchemaError> {
        let full = join(key, "path");
        let item = t
            .get("path")
            .ok_or_else(|| self.error(span.clone(), &full, "missing required key"))?;
        let raw = item.as_str().ok_or_else(|| {
            self.error(
                item.span(),
                &full,
                format!("expected a string, found {}", item.type_name()),
            )
        })?;
        let path = self.base.join(raw);
        if !path.is_file() {
            return Err(self.error(
                item.span(),
                &full,
                format!("no such file: {}", path.display()),
            ));
        }
        Ok(path)
    }

    /// A bare number or an inline table with a `kind` and its fields.
    fn kind<'t>(
        &self,
        item: &'t Item,
        key: &str,
        kinds: &[(&str, &[&str])],
    ) -> Result<Option<(&'t dyn TableLike, String)>, SchemaError> {
        if item.as_float().is_some() || item.as_integer().is_some() {
            return Ok(None);
        }
        let t = item.as_table_like().ok_or_else(|| {
            self.error(
                item.span(),
                key,
                format!(
                    "expected a number or a table with a `kind`, found {}",
                    item.type_name()
                ),
            )
        })?;
        let names: Vec<&str> = kinds.iter().map(|(k, _)| *k).collect();
        let kind_item = t.get("kind").ok_or_else(|| {
            self.error(
                item.span(),
                &join(key, "kind"),
                format!("missing required key (one of {})", names.join(", ")),
            )
        })?;
        let kind = kind_item
            .as_str()
            .ok_or_else(|| self.error(kind_item.span(), &join(key, "kind"), "expected a string"))?;
        let (_, fields) = kinds.iter().find(|(k, _)| *k == kind).ok_or_else(|| {
            self.error(
                kind_item.span(),
                &join(key, "kind"),
                format!(
                    "unknown kind `{kind}` (expected one of {})",
                    names.join(", ")
                ),
            )
        })?;
        for (field, value) in t.iter() {
            if field != "kind" && !fields.contains(&field) {
                let span = t.key(field).and_then(|k| k.span()).or_else(|| value.span());
                return Err(self.error(
                    span,
                    &join(key, field),
                    format!("unknown key for kind `{kind}`"),
                ));
            }
        }
        Ok(Some((t, kind.to_string())))
    }

    fn document(&self, root: &dyn TableLike) -> Result<RunConfig, SchemaError> {
        for (key, _) in root.iter() {
            if !SECTIONS.contains(&key) {
                let span = root.key(key).and_then(|k| k.span());
                return Err(self.error(
                    span,
                    key,
                    format!("unknown section (allowed: {})", SECTIONS.join(", ")),
                ));
            }
        }
        let run = self.section(root, "run")?;
        self.reject_unknown(&run, RUN_KEYS)?;
        let target = match (run.table.get("scenario"), run.table.get("problem")) {
            (Some(_), Some(p)) => {
                return Err(self.error(
                    p.span(),
                    "run.problem",
                    "give either run.scenario or run.problem, not both",
                ))
            }
            (None, None) => {
                return Err(self.error(
                    run.span.clone(),
                    "run.scenario",
                    "missing required key (or set run.problem = true)",
                ))
            }
            (Some(item), None) => {
                let name = item.as_str().ok_or_else(|| {
                    self.error(
                        item.span(),
                        "run.scenario",
                        format!("expected a string, found {}", item.type_name()),
                    )
                })?;
                lookup(name).map_err(|_| {
                    self.error(
                        item.span(),
                        "run.scenario",
                        format!(
                            "unknown scenario `{name}`; registered scenarios: {}",
                            scenario_names().join(", ")
                        ),
                    )
                })?;
                Target::Scenario { name: name.into() }
            }
            (None, Some(item)) => match item.as_bool() {
                Some(true) => Target::Problem,
                _ => return Err(self.error(item.span(), "run.problem", "expected `true`")),
            },
        };
        let out = match run.table.get("out") {
            None => None,
            Some(item) => Some(PathBuf::from(item.as_str().ok_or_else(|| {
                self.error(
                    item.span(),
                    "run.out",
                    format!("expected a string, found {}", item.type_name()),
                )
            })?)),
        };
        let emit_plots = match run.table.get("emit_plots") {
            None => true,
            Some(item) => item.as_bool().ok_or_else(|| {
                self.error(
                    item.span(),
                    "run.emit_plots",
                    format!("expected a boolean, found {}", item.type_name()),
                )
            })?,
        };
        let seed = match run.table.get("seed") {
            None => 0,
            Some(item) => self.count(item, "run.seed")? as u64,
        };
        let snapshot_stride = match run.table.get("snapshot_stride") {
            None => None,
            Some(item) => {
                let s = self.count(item, "run.snapshot_stride")?;
                if s == 0 {
                    return Err(self.error(
                        item.span(),
                        "run.snapshot_stride",
                        "must be at least 1",
                    ));
                }
                Some(s)
            }
        };

        let grid = self.section(root, "grid")?;
        self.reject_unknown(&grid, GRID_KEYS)?;
        let n_item = self.required(&grid, "n")?;
        let dim = self.count(n_item, "grid.n")?;
        if !(1..=3).contains(&dim) {
            return Err(self.error(
                n_item.span(),
                "grid.n",
                format!("dimension must be 1, 2 or 3 (got {dim})"),
            ));
        }
        let cells_item = self.required(&grid, "N")?;
        let cells = self.count(cells_item, "grid.N")?;
        if cells < 4 {
            return Err(self.error(
                cells_item.span(),
                "grid.N",
                format!("need at least 4 cells per axis (got {cells})"),
            ));
        }

        let operator = self.section(root, "operator")?;
        self.reject_unknown(&operator, OPERATOR_KEYS)?;
        let s_item = self.required(&operator, "s")?;
        let s = self.number(s_item, "operator.s")?;
        if !(s > 0.0 && s < 1.0) {
            return Err(self.error(
                s_item.span(),
                "operator.s",
                format!("must lie in (0, 1) (got {s})"),
            ));
        }

        let physics = self.section(root, "physics")?;
        self.reject_unknown(&physics, PHYSICS_KEYS)?;
        let gamma = self.gamma(self.required(&physics, "gamma")?)?;
        let source = self.source(self.required(&physics, "f")?)?;
        let initial = self.initial(self.required(&physics, "u0")?)?;
        let horizon = self.positive(self.required(&physics, "T")?, "physics.T")?;
        let tau_item = self.required(&physics, "tau")?;
        let tau = self.positive(tau_item, "physics.tau")?;
        let ratio = horizon / tau;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(self.error(
                tau_item.span(),
                "physics.tau",
                format!("T = {horizon} is not an integer multiple of tau = {tau}"),
            ));
        }
        let scheme = match physics.table.get("scheme") {
            None => Scheme::default(),
            Some(item) => {
                let name = item.as_str().ok_or_else(|| {
                    self.error(
                        item.span(),
                        "physics.scheme",
                        format!("expected a string, found {}", item.type_name()),
                    )
                })?;
                name.parse().map_err(|e: mixlab::Error| {
                    self.error(item.span(), "physics.scheme", e.to_string())
                })?
            }
        };

        let ladder_section = self.section(root, "ladder")?;
        self.reject_unknown(&ladder_section, LADDER_KEYS)?;
        let levels_item = self.required(&ladder_section, "levels")?;
        let array = levels_item.as_array().ok_or_else(|| {
            self.error(
                levels_item.span(),
                "ladder.levels",
                format!("expected an array, found {}", levels_item.type_name()),
            )
        })?;
        let mut ladder = Vec::with_capacity(array.len());
        for v in array.iter() {
            let k = v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| {
                    self.error(
                        v.span(),
                        "ladder.levels",
                        format!("expected a number, found {}", v.type_name()),
                    )
                })?;
            if !(k >= 1.0) || !k.is_finite() {
                return Err(self.error(
                    v.span(),
                    "ladder.levels",
                    format!("levels must be finite and >= 1 (got {k})"),
                ));
            }
            if ladder.last().is_some_and(|&prev| k <= prev) {
                return Err(self.error(
                    v.span(),
                    "ladder.levels",
                    "levels must be strictly increasing",
                ));
            }
            ladder.push(k);
        }
        if ladder.is_empty() {
            return Err(self.error(
                levels_item.span(),
                "ladder.levels",
                "need at least one level",
            ));
        }

        Ok(RunConfig {
            target,
            problem: ScenarioConfig {
                dim,
                cells,
                s,
                gamma,
                source,
                initial,
                horizon,
                tau,
                ladder,
                scheme,
                seed,
            },
            out,
            emit_plots,
            snapshot_stride,
        })
    }

    fn gamma(&self, item: &Item) -> Result<GammaSpec, SchemaError> {
        let key = "physics.gamma";
        let spec = match self.kind(
            item,
            key,
            &[
                ("constant", &["value"]),
                ("strip", &["inner", "outer", "delta"]),
            ],
        )? {
            None => GammaSpec::Constant {
                value: self.number(item, key)?,
            },
            Some((t, kind)) if kind == "constant" => GammaSpec::Constant {
                value: self.number_field(t, item.span(), key, "value")?,
            },
            Some((t, _)) => GammaSpec::Strip {
                inner: self.number_field(t, item.span(), key, "inner")?,
                outer: self.number_field(t, item.span(), key, "outer")?,
                delta: self.number_field(t, item.span(), key, "delta")?,
            },
        };
        let values = match spec {
            GammaSpec::Constant { value } => vec![value],
            GammaSpec::Strip { inner, outer, .. } => vec![inner, outer],
        };
        if values.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(self.error(item.span(), key, "γ must be positive and finite"));
        }
        if let GammaSpec::Strip { delta, .. } = spec {
            if !(delta > 0.0 && delta < 0.5) {
                return Err(self.error(
                    item.span(),
                    &join(key, "delta"),
                    format!("strip width must lie in (0, 0.5) (got {delta})"),
                ));
            }
        }
        Ok(spec)
    }

    fn source(&self, item: &Item) -> Result<SourcePreset, SchemaError> {
        let key = "physics.f";
        let preset = match self.kind(
            item,
            key,
            &[
                ("constant", &["value"]),
                ("singular", &["scale", "a", "b"]),
                ("csv", &["path"]),
            ],
        )? {
            None => SourcePreset::Constant {
                value: self.number(item, key)?,
            },
            Some((t, kind)) => match kind.as_str() {
                "constant" => SourcePreset::Constant {
                    value: self.number_field(t, item.span(), key, "value")?,
                },
                "singular" => SourcePreset::Singular {
                    scale: self.number_field(t, item.span(), key, "scale")?,
                    a: self.number_field(t, item.span(), key, "a")?,
                    b: self.number_field(t, item.span(), key, "b")?,
                },
                _ => SourcePreset::Csv {
                    path: self.path_field(t, item.span(), key)?,
                },
            },
        };
        match preset {
            SourcePreset::Constant { value } if !(value >= 0.0) || !value.is_finite() => {
                Err(self.error(item.span(), key, format!("source must be nonnegative and finite (got {value})")))
            }
            SourcePreset::Singular { scale, a, b } if !(scale >= 0.0) || !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) => Err(self.error(
                item.span(),
                key,
                format!("singular source needs scale >= 0 and exponents a, b in [0, 1) (got {scale}, {a}, {b})"),
            )),
            other => Ok(other),
        }
    }

    fn initial(&self, item: &Item) -> Result<InitialPreset, SchemaError> {
        let key = "physics.u0";
        let preset = match self.kind(
            item,
            key,
            &[("zero", &[]), ("constant", &["value"]), ("csv", &["path"])],
        )? {
            None => match self.number(item, key)? {
                0.0 => InitialPreset::Zero,
                v => InitialPreset::Constant { value: v },
            },
            Some((t, kind)) => match kind.as_str() {
                "zero" => InitialPreset::Zero,
                "constant" => InitialPreset::Constant {
                    value: self.number_field(t, item.span(), key, "value")?,
                },
                _ => InitialPreset::Csv {
                    path: self.path_field(t, item.span(), key)?,
                },
            },
        };
        if let InitialPreset::Constant { value } = preset {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(self.error(
                    item.span(),
                    key,
                    format!("initial datum must be nonnegative and finite (got {value})"),
                ));
            }
        }
        Ok(preset)
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LADDER: &str = r#"
[run]
scenario = "monotone_ladder"
seed = 3

[grid]
n = 1
N = 64

[operator]
s = 0.5

[physics]
gamma = 2
f = 1.0
u0 = 0
T = 0.5
tau = 0.005

[ladder]
levels = [1, 2, 4, 8]
"#;

    fn parse_str(text: &str) -> Result<RunConfig, SchemaError> {
        parse(text, Path::new("."))
    }

    #[test]
    fn accepts_the_ladder_config() {
        let c = parse_str(LADDER).unwrap();
        assert_eq!(
            c.target,
            Target::Scenario {
                name: "monotone_ladder".into()
            }
        );
        assert_eq!(c.problem.ladder, vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(c.problem.gamma, GammaSpec::Constant { value: 2.0 });
        assert_eq!(c.problem.initial, InitialPreset::Zero);
        assert_eq!(c.problem.seed, 3);
        assert!(c.emit_plots);
        assert_eq!(c.stride(), 5);
    }

    #[test]
    fn missing_key_is_named_with_its_section_line() {
        let text = LADDER.replace("N = 64\n", "");
        let e = parse_str(&text).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("grid.N"));
        assert_eq!(e.line, Some(6));
        assert!(e.to_string().contains("grid.N"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected_at_their_line() {
        let text = LADDER.replace("s = 0.5", "s = 0.5\nalpha = 1");
        let e = parse_str(&text).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("operator.alpha"));
        assert_eq!(e.line, Some(12));
        let e = parse_str(&format!("{LADDER}\n[extra]\nx = 1\n")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("extra"));
        let text = LADDER.replace(
            "f = 1.0",
            "f = { kind = \"singular\", scale = 1, a = 0.1, b = 0.1, c = 2 }",
        );
        assert_eq!(
            parse_str(&text).unwrap_err().key.as_deref(),
            Some("physics.f.c")
        );
    }

    #[test]
    fn scenario_typo_lists_the_registry() {
        let text = LADDER.replace("monotone_ladder", "monotone_ladr");
        let e = parse_str(&text).unwrap_err();
        assert_eq!(e.line, Some(3));
        for name in scenario_names() {
            assert!(e.message.contains(name));
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let text = LADDER.replace("n = 1", "n = = 1");
        let e = parse_str(&text).unwrap_err();
        assert_eq!(e.line, Some(7));
    }

    #[test]
    fn value_checks() {
        for (from, to, key) in [
            ("s = 0.5", "s = 1.5", "operator.s"),
            ("tau = 0.005", "tau = 0.003", "physics.tau"),
            (
                "levels = [1, 2, 4, 8]",
                "levels = [1, 4, 2]",
                "ladder.levels",
            ),
            ("gamma = 2", "gamma = -1", "physics.gamma"),
            ("N = 64", "N = \"64\"", "grid.N"),
            (
                "u0 = 0",
                "u0 = { kind = \"csv\", path = \"missing.csv\" }",
                "physics.u0.path",
            ),
        ] {
            let e = parse_str(&LADDER.replace(from, to)).unwrap_err();
            assert_eq!(e.key.as_deref(), Some(key), "{e}");
            assert!(e.line.is_some());
        }
    }

    #[test]
    fn toml_rendering_round_trips() {
        let mut c = parse_str(LADDER).unwrap();
        assert_eq!(parse_str(&c.to_toml()).unwrap(), c);
        c.problem.gamma = GammaSpec::Strip {
            inner: 0.75,
            outer: 2.0,
            delta: 0.1,
        };
        c.problem.source = SourcePreset::Singular {
            scale: 1.0,
            a: 0.25,
            b: 1.0 / 3.0,
        };
        c.problem.initial = InitialPreset::Constant { value: 0.1 };
        c.problem.ladder = vec![16.0, 64.0, 1e8];
        c.target = Target::Problem;
        c.out = Some("runs/x".into());
        c.snapshot_stride = Some(7);
        assert_eq!(parse_str(&c.to_toml()).unwrap(), c);
    }
}
