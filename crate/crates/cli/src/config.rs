//! Experiment configuration: a small TOML document with `[operator]`,
//! `[domain]`, `[sweep]`, `[tessellation]` and `[output]` sections. Every key
//! has a default; [`ExperimentConfig::echo`] writes the filled-in document
//! back out.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use weylbox::magop::SpinBlock;
use weylbox::{GridBox64, ScalarField64, VectorField64};

use crate::expr::{EvalError, Expr, ParseError as ExprError, VectorExpr};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for '{field}': {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Pauli,
    Dirac,
}

/// How the 3D count is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountPath {
    /// 2D operator on the `(x1, x2)` grid times Dirichlet levels along `x3`.
    Separable,
    /// Full 3D assembly.
    Direct,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MuRule {
    Fixed(f64),
    /// `mu hbar = c`, so `mu = c / hbar` on every row.
    Product(f64),
    /// Each listed value at every `hbar`; rows are scaled by `1 / (mu hbar + 1)`.
    Free(Vec<f64>),
}

impl MuRule {
    pub fn values(&self, hbar: f64) -> Vec<f64> {
        match self {
            MuRule::Fixed(m) => vec![*m],
            MuRule::Product(c) => vec![c / hbar],
            MuRule::Free(ms) => ms.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub points: [usize; 3],
}

impl Domain {
    pub fn grid(&self) -> Result<GridBox64, ConfigError> {
        GridBox64::new(self.lower, self.upper, self.points).map_err(|e| invalid("domain", e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tessellation {
    pub r: f64,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "both" => Some(Format::Both),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Both => "both",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub stem: String,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub path: CountPath,
    pub field: VectorExpr,
    /// `W` for Pauli runs, `V` for Dirac runs.
    pub potential: Expr,
    pub spin: SpinBlock,
    pub wilson: f64,
    pub domain: Domain,
    pub hbar: Vec<f64>,
    pub mu: MuRule,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub tessellation: Option<Tessellation>,
    pub output: Output,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    #[serde(default)]
    operator: RawOperator,
    #[serde(default)]
    domain: RawDomain,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(skip_serializing_if = "Option::is_none")]
    tessellation: Option<RawTessellation>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    kind: Option<String>,
    path: Option<String>,
    #[serde(rename = "B")]
    b: Option<String>,
    #[serde(rename = "W")]
    w: Option<String>,
    #[serde(rename = "V")]
    v: Option<String>,
    spin: Option<String>,
    wilson: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    lower: Option<[f64; 3]>,
    upper: Option<[f64; 3]>,
    points: Option<[usize; 3]>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    hbar: Option<Vec<f64>>,
    mu_rule: Option<String>,
    mu: Option<OneOrMany>,
    mu_hbar: Option<f64>,
    gamma: Option<Vec<f64>>,
    lambda: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTessellation {
    r: f64,
    rho: f64,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    stem: Option<String>,
    format: Option<String>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: Raw = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    // expression errors point at the line holding the key
    let key_line = |key: &str| {
        text.lines()
            .position(|l| l.trim_start().starts_with(key) && l.contains('='))
            .map_or(1, |i| i + 1)
    };
    let expr_err = |key: &str, e: ExprError| ConfigError::Parse {
        line: key_line(key),
        message: format!("{key}: {e}"),
    };

    let op = raw.operator;
    let kind = match op.kind.as_deref().unwrap_or("pauli") {
        "pauli" => Kind::Pauli,
        "dirac" => Kind::Dirac,
        other => return Err(invalid("operator.kind", format!("unknown kind '{other}'"))),
    };
    let field = VectorExpr::parse(op.b.as_deref().unwrap_or("(0, 0, 0)")).map_err(|e| expr_err("B", e))?;
    let potential = match kind {
        Kind::Pauli => {
            if op.v.is_some() {
                return Err(invalid("operator.V", "Pauli runs take W"));
            }
            Expr::parse(op.w.as_deref().unwrap_or("0")).map_err(|e| expr_err("W", e))?
        }
        Kind::Dirac => {
            if op.w.is_some() {
                return Err(invalid("operator.W", "Dirac runs take V"));
            }
            Expr::parse(op.v.as_deref().unwrap_or("0")).map_err(|e| expr_err("V", e))?
        }
    };
    let spin = match op.spin.as_deref().unwrap_or("both") {
        "both" => SpinBlock::Both,
        "up" => SpinBlock::Up,
        "down" => SpinBlock::Down,
        other => return Err(invalid("operator.spin", format!("unknown spin block '{other}'"))),
    };
    let wilson = op.wilson.unwrap_or(1.0);
    if !(wilson.is_finite() && wilson >= 0.0) {
        return Err(invalid("operator.wilson", "must be finite and nonnegative"));
    }

    let d = raw.domain;
    let domain = Domain {
        lower: d.lower.unwrap_or([0.0; 3]),
        upper: d.upper.unwrap_or([1.0; 3]),
        points: d.points.unwrap_or([33, 33, 1]),
    };
    domain.grid()?;
    let slab = domain.points[2] == 1;
    let path = match (op.path.as_deref(), kind) {
        (None, Kind::Pauli) if slab => CountPath::Separable,
        (None, _) | (Some("direct"), _) => CountPath::Direct,
        (Some("separable"), Kind::Pauli) => CountPath::Separable,
        (Some("separable"), Kind::Dirac) => {
            return Err(invalid("operator.path", "Dirac runs are assembled directly"))
        }
        (Some(other), _) => return Err(invalid("operator.path", format!("unknown path '{other}'"))),
    };
    match path {
        CountPath::Separable => {
            if !slab {
                return Err(invalid("domain.points", "the separable path needs a single point along x3"));
            }
            if field.uses_var(2) {
                return Err(invalid("operator.B", "the separable path needs fields independent of x3"));
            }
            if potential.uses_var(2) {
                return Err(invalid("operator.W", "the separable path needs fields independent of x3"));
            }
            if field.0[0] != Expr::Num(0.0) || field.0[1] != Expr::Num(0.0) {
                return Err(invalid("operator.B", "the separable path needs B = (0, 0, B3)"));
            }
        }
        CountPath::Direct => {
            if slab {
                return Err(invalid("domain.points", "direct 3D runs need at least 3 points along x3"));
            }
        }
    }
    if kind == Kind::Dirac && spin != SpinBlock::Both {
        return Err(invalid("operator.spin", "spin blocks apply to Pauli runs only"));
    }

    let s = raw.sweep;
    let hbar = s.hbar.unwrap_or_else(|| vec![0.2, 0.1]);
    if hbar.is_empty() || hbar.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(invalid("sweep.hbar", "need at least one positive value"));
    }
    if hbar.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("sweep.hbar", "ladder must be strictly decreasing"));
    }
    let mu = match s.mu_rule.as_deref().unwrap_or(if s.mu.is_some() { "fixed" } else { "product" }) {
        "fixed" => {
            let v = s.mu.map(OneOrMany::into_vec).unwrap_or_else(|| vec![1.0]);
            match v.as_slice() {
                [m] => MuRule::Fixed(*m),
                _ => return Err(invalid("sweep.mu", "the fixed rule takes a single value")),
            }
        }
        "product" => {
            if s.mu.is_some() {
                return Err(invalid("sweep.mu", "the product rule takes mu_hbar"));
            }
            MuRule::Product(s.mu_hbar.unwrap_or(1.0))
        }
        "free" => match s.mu.map(OneOrMany::into_vec) {
            Some(v) if !v.is_empty() => MuRule::Free(v),
            _ => return Err(invalid("sweep.mu", "the free rule needs a list of values")),
        },
        other => return Err(invalid("sweep.mu_rule", format!("unknown rule '{other}'"))),
    };
    let mus: Vec<f64> = match &mu {
        MuRule::Fixed(m) | MuRule::Product(m) => vec![*m],
        MuRule::Free(v) => v.clone(),
    };
    if mus.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(invalid("sweep.mu", "values must be finite and nonnegative"));
    }
    let gamma = s.gamma.unwrap_or_else(|| vec![0.0]);
    if gamma.is_empty() || gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(invalid("sweep.gamma", "need nonnegative values"));
    }
    if kind == Kind::Dirac && gamma.iter().any(|g| *g != 0.0) {
        return Err(invalid("sweep.gamma", "Dirac runs count eigenvalues only (gamma = 0)"));
    }
    let lambda = s.lambda.unwrap_or_else(|| vec![0.1]);
    if lambda.is_empty() || lambda.iter().any(|l| !l.is_finite()) {
        return Err(invalid("sweep.lambda", "need finite values"));
    }
    let positive_needed = kind == Kind::Dirac || matches!(mu, MuRule::Free(_));
    if positive_needed && lambda.iter().any(|l| *l <= 0.0) {
        return Err(invalid("sweep.lambda", "lambda must be positive for this run"));
    }
    if kind == Kind::Dirac && lambda.iter().any(|l| *l >= 1.0) {
        return Err(invalid("sweep.lambda", "Dirac runs need lambda in (0, 1)"));
    }

    let tessellation = match raw.tessellation {
        None => None,
        Some(t) => {
            if !(t.r > 0.0) {
                return Err(invalid("tessellation.r", "must be positive"));
            }
            if !(t.rho > 0.0 && t.rho < 1.0) {
                return Err(invalid("tessellation.rho", "must lie in (0, 1)"));
            }
            Some(Tessellation { r: t.r, rho: t.rho })
        }
    };

    let o = raw.output;
    let format = o.format.as_deref().unwrap_or("csv");
    let output = Output {
        dir: PathBuf::from(o.dir.unwrap_or_else(|| ".".into())),
        stem: o.stem.unwrap_or_else(|| "sweep".into()),
        format: Format::parse(format).ok_or_else(|| invalid("output.format", format!("unknown format '{format}'")))?,
    };
    if output.stem.is_empty() || output.stem.contains(['/', '\\']) {
        return Err(invalid("output.stem", "must be a plain file name"));
    }

    Ok(ExperimentConfig {
        kind,
        path,
        field,
        potential,
        spin,
        wilson,
        domain,
        hbar,
        mu,
        gamma,
        lambda,
        tessellation,
        output,
    })
}

impl ExperimentConfig {
    /// The configuration with every default written out; parses back to an
    /// equal value.
    pub fn echo(&self) -> String {
        let (w, v) = match self.kind {
            Kind::Pauli => (Some(self.potential.to_string()), None),
            Kind::Dirac => (None, Some(self.potential.to_string())),
        };
        let (mu_rule, mu, mu_hbar) = match &self.mu {
            MuRule::Fixed(m) => ("fixed", Some(OneOrMany::One(*m)), None),
            MuRule::Product(c) => ("product", None, Some(*c)),
            MuRule::Free(ms) => ("free", Some(OneOrMany::Many(ms.clone())), None),
        };
        let raw = Raw {
            operator: RawOperator {
                kind: Some(match self.kind {
                    Kind::Pauli => "pauli".into(),
                    Kind::Dirac => "dirac".into(),
                }),
                path: Some(match self.path {
                    CountPath::Separable => "separable".into(),
                    CountPath::Direct => "direct".into(),
                }),
                b: Some(self.field.to_string()),
                w,
                v,
                spin: Some(
                    match self.spin {
                        SpinBlock::Both => "both",
                        SpinBlock::Up => "up",
                        SpinBlock::Down => "down",
                    }
                    .into(),
                ),
                wilson: Some(self.wilson),
            },
            domain: RawDomain {
                lower: Some(self.domain.lower),
                upper: Some(self.domain.upper),
                points: Some(self.domain.points),
            },
            sweep: RawSweep {
                hbar: Some(self.hbar.clone()),
                mu_rule: Some(mu_rule.into()),
                mu,
                mu_hbar,
                gamma: Some(self.gamma.clone()),
                lambda: Some(self.lambda.clone()),
            },
            tessellation: self.tessellation.map(|t| RawTessellation { r: t.r, rho: t.rho }),
            output: RawOutput {
                dir: Some(self.output.dir.to_string_lossy().into_owned()),
                stem: Some(self.output.stem.clone()),
                format: Some(self.output.format.name().into()),
            },
        };
        toml::to_string(&raw).unwrap_or_default()
    }

    pub fn grid(&self) -> GridBox64 {
        // validated at parse time
        self.domain.grid().expect("validated domain")
    }

    /// Samples `B` and the potential on the configured grid.
    pub fn sample_fields(&self) -> Result<(VectorField64, ScalarField64), FieldEvalError> {
        sample_fields(&self.field, &self.potential, &self.grid())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{which} at node {node} ({x:?}): {error}")]
pub struct FieldEvalError {
    pub which: &'static str,
    pub node: usize,
    pub x: [f64; 3],
    pub error: EvalError,
}

pub fn sample_fields(
    b: &VectorExpr,
    w: &Expr,
    grid: &GridBox64,
) -> Result<(VectorField64, ScalarField64), FieldEvalError> {
    Ok((sample_vector(b, grid)?, sample_scalar(w, grid, "potential")?))
}

pub fn sample_scalar(e: &Expr, grid: &GridBox64, which: &'static str) -> Result<ScalarField64, FieldEvalError> {
    let mut values = Vec::with_capacity(grid.node_count());
    for i in 0..grid.node_count() {
        let x = grid.position(i);
        values.push(e.eval(x).map_err(|error| FieldEvalError { which, node: i, x, error })?);
    }
    Ok(ScalarField64::new(grid.clone(), values).expect("one value per node"))
}

pub fn sample_vector(b: &VectorExpr, grid: &GridBox64) -> Result<VectorField64, FieldEvalError> {
    let comps = [0, 1, 2].map(|d| sample_scalar(&b.0[d], grid, "B").map(|f| f.values().to_vec()));
    let [c0, c1, c2] = comps;
    Ok(VectorField64::new(grid.clone(), [c0?, c1?, c2?]).expect("one value per node"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_echo() {
        let c = parse_config("[operator]\nB = \"(0,0,5)\"\nW = \"-1\"\n").unwrap();
        assert_eq!(c.kind, Kind::Pauli);
        assert_eq!(c.path, CountPath::Separable);
        assert_eq!(c.mu, MuRule::Product(1.0));
        let (b, w) = c.sample_fields().unwrap();
        assert_eq!(b.at(0), [0.0, 0.0, 5.0]);
        assert_eq!(w.get(7), -1.0);
        assert_eq!(parse_config(&c.echo()).unwrap(), c);
    }

    #[test]
    fn gaussian_well() {
        let c = parse_config(
            "[operator]\nW = \"-exp(-x1^2-x2^2-x3^2)\"\n[domain]\nlower = [-1,-1,-1]\npoints = [5,5,5]\n",
        )
        .unwrap();
        assert_eq!(c.potential.eval([0.0; 3]).unwrap(), -1.0);
        assert_eq!(c.path, CountPath::Direct);
    }

    #[test]
    fn errors() {
        match parse_config("[operator]\nB = \"(0,0,1)\"\nW = \"sin(\"\n") {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("column 5"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("[sweep]\nhbar = [0.1, 0.2]\n"), Err(ConfigError::Validation { field, .. }) if field == "sweep.hbar"));
        assert!(matches!(parse_config("[sweep\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(parse_config("\n[bogus]\nx = 1\n"), Err(ConfigError::Parse { .. })));
        assert!(matches!(
            parse_config("[operator]\nkind = \"dirac\"\n[domain]\npoints = [5,5,5]\n[sweep]\nlambda = [1.5]\n"),
            Err(ConfigError::Validation { field, .. }) if field == "sweep.lambda"
        ));
        assert!(matches!(
            parse_config("[operator]\nW = \"x3\"\n"),
            Err(ConfigError::Validation { field, .. }) if field == "operator.W"
        ));
    }
}
