//! One function per single-shot subcommand. Each returns a [`Table`] that the
//! binary prints as CSV or JSON.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;
use weylbox::effectivefield::{effective_length, shen_bound, BoundKind, Dim, EffectiveFieldParams};
use weylbox::magop::{assemble, SpinBlock};
use weylbox::reference::{square_well_spectrum, torus_flux, WellSpec};
use weylbox::speccount::{
    count_below, dirac_gap_count_symmetric, dirac_gap_eigenvalues, eigen_dense, eigen_window, DENSE_CAP,
};
use weylbox::tessellate::{bracket_counts, tessellate_domain};
use weylbox::weylcoeff::{beta_gamma, beta_gamma_quadrature, weyl_coefficient, Region, WeylParams};
use weylbox::{GridBox64, HermitianBuilder, OperatorSpec64, ScalarField64, VectorField64};

use crate::config::{sample_scalar, sample_vector, ConfigError, ExperimentConfig, FieldEvalError, Kind};
use crate::expr::{Expr, VectorExpr};
use crate::report::fmt_float;
use crate::sweep::{operator_spec, Counter};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<FieldEvalError> for CommandError {
    fn from(e: FieldEvalError) -> Self {
        CommandError::Config(ConfigError::Validation {
            field: e.which.into(),
            message: e.to_string(),
        })
    }
}

fn numerical(e: impl ToString) -> CommandError {
    CommandError::Numerical(e.to_string())
}

fn bad_arg(field: &str, message: impl Into<String>) -> CommandError {
    CommandError::Config(ConfigError::Validation {
        field: field.into(),
        message: message.into(),
    })
}

/// Rows of named values.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn record(pairs: Vec<(&str, Value)>) -> Self {
        let (columns, row): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
        Self { columns, rows: vec![row] }
    }

    pub fn get(&self, row: usize, column: &str) -> Option<&Value> {
        let k = self.columns.iter().position(|c| c == column)?;
        self.rows.get(row)?.get(k)
    }

    pub fn to_csv(&self) -> String {
        let cell = |v: &Value| match v {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            Value::Number(n) if n.is_f64() => fmt_float(n.as_f64().unwrap_or(f64::NAN)),
            other => other.to_string(),
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let _ = w.write_record(&self.columns);
        for r in &self.rows {
            let _ = w.write_record(r.iter().map(cell));
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        serde_json::to_string_pretty(&rows).unwrap_or_default() + "\n"
    }
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DomainArgs {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub points: [usize; 3],
}

impl DomainArgs {
    pub fn grid(&self) -> Result<GridBox64, CommandError> {
        GridBox64::new(self.lower, self.upper, self.points).map_err(|e| bad_arg("domain", e.to_string()))
    }
}

fn parse_scalar(name: &str, src: &str) -> Result<Expr, CommandError> {
    Expr::parse(src).map_err(|e| bad_arg(name, e.to_string()))
}

fn parse_vector(name: &str, src: &str) -> Result<VectorExpr, CommandError> {
    VectorExpr::parse(src).map_err(|e| bad_arg(name, e.to_string()))
}

pub fn beta(gamma: f64) -> Result<Table, CommandError> {
    let closed = beta_gamma(gamma).map_err(|e| bad_arg("gamma", e.to_string()))?;
    let quad = beta_gamma_quadrature(gamma).map_err(|e| bad_arg("gamma", e.to_string()))?;
    Ok(Table::record(vec![
        ("gamma", num(gamma)),
        ("beta", num(closed)),
        ("beta_quadrature", num(quad)),
    ]))
}

#[allow(clippy::too_many_arguments)]
pub fn weyl(
    b: &str,
    w: &str,
    gamma: f64,
    lambda: f64,
    mu: f64,
    hbar: f64,
    domain: &DomainArgs,
) -> Result<Table, CommandError> {
    let grid = domain.grid()?;
    let bf = sample_vector(&parse_vector("b", b)?, &grid)?;
    let wf = sample_scalar(&parse_scalar("w", w)?, &grid, "potential")?;
    let bmag = bf.magnitude().map(|v| mu * hbar * v);
    let r = weyl_coefficient(&bmag, &wf, &WeylParams::new(gamma).with_lambda(lambda), Region::Whole)
        .map_err(|e| bad_arg("weyl", e.to_string()))?;
    Ok(Table::record(vec![
        ("gamma", num(gamma)),
        ("lambda", num(lambda)),
        ("value", num(r.value)),
        ("max_landau_index", json!(r.max_landau_index)),
        ("nodes", json!(r.nodes)),
    ]))
}

pub fn effective_field(b: &str, p: f64, dim: u8, at: Option<[f64; 3]>, domain: &DomainArgs) -> Result<Table, CommandError> {
    let grid = domain.grid()?;
    let bf = sample_vector(&parse_vector("b", b)?, &grid)?;
    let dim = match dim {
        2 => Dim::Two,
        3 => Dim::Three,
        _ => return Err(bad_arg("dim", "must be 2 or 3")),
    };
    let x = at.unwrap_or_else(|| [0, 1, 2].map(|d| 0.5 * (domain.lower[d] + domain.upper[d])));
    let l = effective_length(&bf, x, &EffectiveFieldParams::new(p), dim).map_err(|e| bad_arg("p", e.to_string()))?;
    Ok(Table::record(vec![
        ("p", num(p)),
        ("length", num(l.length)),
        ("capped", json!(l.capped)),
        ("b_p", num(1.0 / (l.length * l.length))),
    ]))
}

#[allow(clippy::too_many_arguments)]
pub fn shen(
    b: &str,
    w: &str,
    mu: f64,
    hbar: f64,
    lambda: f64,
    p: f64,
    kind: &str,
    domain: &DomainArgs,
) -> Result<Table, CommandError> {
    let grid = domain.grid()?;
    let bf = sample_vector(&parse_vector("b", b)?, &grid)?;
    let wf = sample_scalar(&parse_scalar("w", w)?, &grid, "potential")?;
    let kind = match kind {
        "trace" => BoundKind::Trace,
        "count" => BoundKind::Count,
        other => return Err(bad_arg("kind", format!("unknown bound '{other}'"))),
    };
    let v = shen_bound(&wf, &bf, mu, hbar, lambda, &EffectiveFieldParams::new(p), kind)
        .map_err(|e| bad_arg("shen-bound", e.to_string()))?;
    Ok(Table::record(vec![("lambda", num(lambda)), ("bound", num(v))]))
}

/// Operator of the config at `hbar` (default: first ladder entry) and `mu`
/// (default: first value of the rule at that `hbar`).
pub fn config_operator(
    cfg: &ExperimentConfig,
    hbar: Option<f64>,
    mu: Option<f64>,
) -> Result<OperatorSpec64, CommandError> {
    let hbar = hbar.unwrap_or(cfg.hbar[0]);
    let mu = mu.unwrap_or_else(|| cfg.mu.values(hbar)[0]);
    let (b, w) = cfg.sample_fields()?;
    Ok(operator_spec(cfg, &b, &w, hbar, mu))
}

pub fn assemble_info(spec: &OperatorSpec64) -> Result<(Table, weylbox::SparseHermitian64), CommandError> {
    let a = assemble(spec).map_err(numerical)?;
    let h = a.into_matrix();
    let (lo, hi) = h.gershgorin();
    let t = Table::record(vec![
        ("kind", json!(spec.kind().name())),
        ("hbar", num(spec.hbar())),
        ("mu", num(spec.mu())),
        ("dim", json!(h.dim())),
        ("nnz", json!(h.nnz())),
        ("bandwidth", json!(h.bandwidth())),
        ("hermiticity_defect", num(h.hermiticity_defect())),
        ("gershgorin_lo", num(lo)),
        ("gershgorin_hi", num(hi)),
    ]);
    Ok((t, h))
}

pub fn count(cfg: &ExperimentConfig, spec: &OperatorSpec64, tau: f64) -> Result<Table, CommandError> {
    let c = Counter::new(cfg, spec).map_err(CommandError::Numerical)?;
    let n = c.count(tau).map_err(numerical)?;
    Ok(Table::record(vec![
        ("hbar", num(spec.hbar())),
        ("mu", num(spec.mu())),
        ("tau", num(tau)),
        ("count", json!(n)),
    ]))
}

/// Self-check on a random Hermitian matrix: inertia count against the dense
/// spectrum.
pub fn count_random(dim: usize, tau: f64, seed: u64) -> Result<Table, CommandError> {
    if dim == 0 || dim > DENSE_CAP {
        return Err(bad_arg("random", format!("dimension must lie in 1..={DENSE_CAP}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = HermitianBuilder::new(dim);
    for i in 0..dim {
        b.add_diag(i, rng.gen_range(-3.0..3.0));
        for j in 0..i {
            b.add_pair(i, j, Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    let h = b.build();
    let n = count_below(&h, tau).map_err(numerical)?.count;
    let dense = eigen_dense(&h).map_err(numerical)?.iter().filter(|e| **e < tau).count();
    Ok(Table::record(vec![
        ("seed", json!(seed)),
        ("dim", json!(dim)),
        ("tau", num(tau)),
        ("count", json!(n)),
        ("dense_count", json!(dense)),
        ("agree", json!(n == dense)),
    ]))
}

pub fn riesz(cfg: &ExperimentConfig, spec: &OperatorSpec64, gamma: f64, lambda: f64) -> Result<Table, CommandError> {
    if !(gamma >= 0.0) {
        return Err(bad_arg("gamma", "must be nonnegative"));
    }
    let c = Counter::new(cfg, spec).map_err(CommandError::Numerical)?;
    let n = c.count(-lambda).map_err(numerical)?;
    let m = if gamma == 0.0 { n as f64 } else { c.riesz(gamma, lambda).map_err(numerical)? };
    Ok(Table::record(vec![
        ("hbar", num(spec.hbar())),
        ("mu", num(spec.mu())),
        ("gamma", num(gamma)),
        ("lambda", num(lambda)),
        ("count", json!(n)),
        ("riesz", num(m)),
    ]))
}

pub fn dirac_gap(cfg: &ExperimentConfig, spec: &OperatorSpec64, lambda: f64) -> Result<Table, CommandError> {
    if cfg.kind != Kind::Dirac {
        return Err(bad_arg("operator.kind", "dirac-gap needs a Dirac config"));
    }
    let (plus, minus, half) = dirac_gap_count_symmetric(spec, lambda).map_err(numerical)?;
    let eig = if 4 * spec.grid().node_count() <= DENSE_CAP {
        dirac_gap_eigenvalues(spec, lambda)
            .map_err(numerical)?
            .iter()
            .map(|e| format!("{e:.10}"))
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        String::new()
    };
    Ok(Table::record(vec![
        ("lambda", num(lambda)),
        ("count_plus", json!(plus)),
        ("count_minus", json!(minus)),
        ("half_sum", num(half)),
        ("eigenvalues_plus", json!(eig)),
    ]))
}

#[derive(Clone, Copy, Debug)]
pub struct TorusArgs {
    pub flux: i64,
    pub period: f64,
    pub points: usize,
    pub hbar: f64,
    pub mu: f64,
    /// Relative amplitude `a` of `B = B0 (1 + a cos(2 pi x1 / T))`.
    pub modulation: f64,
    /// Threshold as a fraction of the first Landau gap `2 mu hbar B0`.
    pub window: f64,
}

/// Zero modes of the favored spin block on a torus with `flux` quanta.
pub fn torus(a: &TorusArgs) -> Result<Table, CommandError> {
    if a.flux == 0 {
        return Err(bad_arg("flux", "need a nonzero flux"));
    }
    if !(a.mu > 0.0 && a.hbar > 0.0 && a.period > 0.0) {
        return Err(bad_arg("torus", "mu, hbar and period must be positive"));
    }
    if !(a.modulation.abs() < 1.0) {
        return Err(bad_arg("modulation", "need |a| < 1 so the field keeps its sign"));
    }
    let b0 = 2.0 * PI * a.hbar * a.flux as f64 / (a.mu * a.period * a.period);
    let t = OperatorSpec64::torus([a.period, a.period, 1.0], [a.points, a.points, 1]).map_err(|e| bad_arg("points", e.to_string()))?;
    let g = t.grid().clone();
    let (period, m) = (a.period, a.modulation);
    let field = VectorField64::from_fn(&g, |x| [0.0, 0.0, b0 * (1.0 + m * (2.0 * PI * x[0] / period).cos())])
        .map_err(|e| bad_arg("torus", e.to_string()))?;
    let b3 = ScalarField64::new(g.clone(), field.component(2).to_vec()).map_err(|e| bad_arg("torus", e.to_string()))?;
    let flux = torus_flux(&b3, a.period, a.period, a.mu, a.hbar);
    let spin = if a.flux > 0 { SpinBlock::Up } else { SpinBlock::Down };
    let spec = t.with_hbar(a.hbar).with_mu(a.mu).with_field(field).with_spin(spin);
    let h = assemble(&spec).map_err(numerical)?.into_matrix();
    let threshold = a.window * 2.0 * a.mu * a.hbar * b0.abs();
    let n = count_below(&h, threshold).map_err(numerical)?.count;
    let low = eigen_window(&h, 0.0, threshold, 4 * a.flux.unsigned_abs() as usize + 8)
        .map_err(numerical)?
        .iter()
        .map(|e| format!("{e:.3e}"))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Table::record(vec![
        ("flux", json!(flux.n)),
        ("b0", num(b0)),
        ("threshold", num(threshold)),
        ("count", json!(n)),
        ("expected", json!(a.flux.unsigned_abs())),
        ("eigenvalues", json!(low)),
    ]))
}

pub fn square_well(depth: f64, half_width: f64, hbar: f64) -> Result<Table, CommandError> {
    let rep = square_well_spectrum(&WellSpec { depth, half_width, hbar }).map_err(|e| bad_arg("square-well", e.to_string()))?;
    let columns = [
        "lambda", "parity", "residual", "oracle_coarse", "oracle_fine", "order", "confirmed", "count", "bound",
        "oracle_count", "factor4_roots", "factor4_matches_oracle",
    ];
    let f4 = rep.factor4_roots.iter().map(|r| format!("{r:.12}")).collect::<Vec<_>>().join(" ");
    let rows = rep
        .roots
        .iter()
        .map(|r| {
            vec![
                num(r.lambda),
                json!(if r.even { "even" } else { "odd" }),
                num(r.residual),
                num(r.oracle.0),
                num(r.oracle.1),
                num(r.order),
                json!(r.confirmed),
                json!(rep.count),
                json!(rep.bound),
                json!(rep.oracle_count),
                json!(f4),
                json!(rep.factor4_matches_oracle),
            ]
        })
        .collect::<Vec<_>>();
    let rows = if rows.is_empty() {
        vec![vec![
            Value::Null,
            Value::Null,
            Value::Null,
            Value::Null,
            Value::Null,
            Value::Null,
            Value::Null,
            json!(rep.count),
            json!(rep.bound),
            json!(rep.oracle_count),
            json!(f4),
            json!(rep.factor4_matches_oracle),
        ]]
    } else {
        rows
    };
    Ok(Table {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}

pub fn bracket(cfg: &ExperimentConfig, spec: &OperatorSpec64, lambda: f64) -> Result<Table, CommandError> {
    let t = cfg
        .tessellation
        .ok_or_else(|| bad_arg("tessellation", "bracket needs a [tessellation] section"))?;
    let tess = tessellate_domain(spec.grid(), t.r).map_err(|e| bad_arg("tessellation.r", e.to_string()))?;
    let r = bracket_counts(spec, &tess, t.rho, lambda).map_err(|e| match e {
        weylbox::TessellateError::Spectral(_) | weylbox::TessellateError::Operator(_) => numerical(e),
        other => bad_arg("tessellation", other.to_string()),
    })?;
    Ok(Table::record(vec![
        ("r", num(t.r)),
        ("rho", num(t.rho)),
        ("lambda", num(lambda)),
        ("cubes", json!(tess.len())),
        ("lower", json!(r.lower)),
        ("full", json!(r.full)),
        ("upper", json!(r.upper)),
        ("penalty", num(r.penalty)),
        ("c_pu", num(r.c_pu)),
    ]))
}
