//! Semiclassical sweeps: for every `(hbar, mu, gamma, lambda)` count or
//! Riesz-sum the operator and set the result against the Weyl coefficient.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;
use weylbox::magop::{assemble, OperatorKind, OperatorSpec};
use weylbox::reference::{dirichlet_level, separable_count, separable_spectrum};
use weylbox::speccount::{count_below, dirac_gap_count_symmetric, levels_from_count_fn, riesz_from_counts};
use weylbox::weylcoeff::{weyl_coefficient, Region, WeylParams};
use weylbox::{OperatorSpec64, ScalarField64, SparseHermitian64, SpectralError, VectorField64};

use crate::config::{CountPath, ExperimentConfig, FieldEvalError, Kind, MuRule};

/// Guard in the relative gap when the target vanishes.
pub const GAP_EPS: f64 = 1e-12;

/// Relative width at which Riesz-sum bisection stops.
const RIESZ_TOL: f64 = 1e-4;

/// Width, relative to the searched range, to which planar levels are located.
const LEVEL_TOL: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub hbar: f64,
    pub mu: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Eigenvalue count; a half-integer for the combined Dirac count.
    pub count: f64,
    /// `M_gamma`; equals `count` when `gamma = 0`.
    pub riesz: f64,
    /// `hbar^3 M_gamma`, or `hbar^3 M_gamma / (mu hbar + 1)` under the free rule.
    pub scaled: f64,
    /// Weyl coefficient with the same normalization as `scaled`.
    pub target: f64,
    pub gap: f64,
    pub wall_time: f64,
    /// Set when the point failed; the numeric columns are then NaN.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error(transparent)]
    Field(#[from] FieldEvalError),
}

/// Row order: `hbar` (ladder order), then `mu`, `gamma`, `lambda`.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for &h in &cfg.hbar {
        for mu in cfg.mu.values(h) {
            for &g in &cfg.gamma {
                for &l in &cfg.lambda {
                    out.push((h, mu, g, l));
                }
            }
        }
    }
    out
}

/// `1 / (mu hbar + 1)` under the free rule, 1 otherwise.
fn normalization(cfg: &ExperimentConfig, hbar: f64, mu: f64) -> f64 {
    match cfg.mu {
        MuRule::Free(_) => 1.0 / (mu * hbar + 1.0),
        _ => 1.0,
    }
}

pub fn relative_gap(scaled: f64, target: f64) -> f64 {
    (scaled - target).abs() / target.max(GAP_EPS)
}

/// Operator for one `(hbar, mu)` pair on the configured grid.
pub fn operator_spec(cfg: &ExperimentConfig, b: &VectorField64, w: &ScalarField64, hbar: f64, mu: f64) -> OperatorSpec64 {
    let kind = match cfg.kind {
        Kind::Pauli => OperatorKind::Pauli,
        Kind::Dirac => OperatorKind::Dirac,
    };
    OperatorSpec::new(kind, cfg.grid())
        .with_hbar(hbar)
        .with_mu(mu)
        .with_field(b.clone())
        .with_potential(w.clone())
        .with_spin(cfg.spin)
        .with_wilson(cfg.wilson)
}

/// Counting function of the 3D operator, either assembled or separable.
pub(crate) enum Counter {
    Direct(SparseHermitian64),
    Separable {
        planar: SparseHermitian64,
        lowest: f64,
        length: f64,
        hbar: f64,
    },
}

impl Counter {
    pub(crate) fn new(cfg: &ExperimentConfig, spec: &OperatorSpec64) -> Result<Self, String> {
        let h = assemble(spec).map_err(|e| e.to_string())?.into_matrix();
        Ok(match cfg.path {
            CountPath::Direct => Counter::Direct(h),
            CountPath::Separable => {
                let lowest = h.gershgorin().0;
                Counter::Separable {
                    planar: h,
                    lowest,
                    length: spec.grid().extent(2),
                    hbar: spec.hbar(),
                }
            }
        })
    }

    pub(crate) fn count(&self, tau: f64) -> Result<usize, SpectralError> {
        match self {
            Counter::Direct(h) => count_below(h, tau).map(|c| c.count),
            Counter::Separable {
                planar,
                lowest,
                length,
                hbar,
            } => separable_count(|t| count_below(planar, t).map(|c| c.count), *lowest, *length, *hbar, tau),
        }
    }

    /// `M_gamma` for `gamma > 0`.
    pub(crate) fn riesz(&self, gamma: f64, lambda: f64) -> Result<f64, SpectralError> {
        match self {
            Counter::Direct(h) => riesz_from_counts(h, gamma, lambda, RIESZ_TOL),
            Counter::Separable {
                planar,
                lowest,
                length,
                hbar,
            } => {
                // planar levels once, then exact sums over all (level, m) pairs
                let tau = -lambda;
                let top = tau - dirichlet_level(1, *length, *hbar);
                let tol = LEVEL_TOL * (top - lowest).abs().max(f64::MIN_POSITIVE);
                let levels = levels_from_count_fn(|t| count_below(planar, t).map(|c| c.count), *lowest, top, tol)?;
                let sep = separable_spectrum(&levels, *length, *hbar, tau);
                Ok(sep.levels.iter().map(|(e, k)| *k as f64 * (tau - e).powf(gamma)).sum())
            }
        }
    }
}

fn failed(p: (f64, f64, f64, f64), start: Instant, error: String) -> SweepRow {
    SweepRow {
        hbar: p.0,
        mu: p.1,
        gamma: p.2,
        lambda: p.3,
        count: f64::NAN,
        riesz: f64::NAN,
        scaled: f64::NAN,
        target: f64::NAN,
        gap: f64::NAN,
        wall_time: start.elapsed().as_secs_f64(),
        error: Some(error),
    }
}

fn weyl_target(
    cfg: &ExperimentConfig,
    bmag: &ScalarField64,
    w: &ScalarField64,
    hbar: f64,
    mu: f64,
    gamma: f64,
    lambda: f64,
) -> Result<f64, String> {
    let b = bmag.map(|v| mu * hbar * v);
    // Dirac counts are compared with the Pauli-type coefficient of -(2|V| + V^2)
    let v = match cfg.kind {
        Kind::Pauli => w.clone(),
        Kind::Dirac => w.map(|v| -(2.0 * v.abs() + v * v)),
    };
    let params = WeylParams::new(gamma).with_lambda(lambda);
    weyl_coefficient(&b, &v, &params, Region::Whole)
        .map(|r| r.value)
        .map_err(|e| e.to_string())
}

/// All rows of one `(hbar, mu)` group; the operator is assembled once.
fn run_group(
    cfg: &ExperimentConfig,
    b: &VectorField64,
    bmag: &ScalarField64,
    w: &ScalarField64,
    points: &[(f64, f64, f64, f64)],
) -> Vec<SweepRow> {
    let (hbar, mu) = (points[0].0, points[0].1);
    let spec = operator_spec(cfg, b, w, hbar, mu);
    let start = Instant::now();
    let counter = match cfg.kind {
        Kind::Pauli => Counter::new(cfg, &spec).map(Some),
        Kind::Dirac => Ok(None),
    };
    let setup = start.elapsed().as_secs_f64();
    let norm = normalization(cfg, hbar, mu);
    points
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let start = Instant::now();
            let (_, _, gamma, lambda) = p;
            let counted = match &counter {
                Err(e) => Err(e.clone()),
                Ok(Some(c)) => c
                    .count(-lambda)
                    .and_then(|n| {
                        let m = if gamma == 0.0 { n as f64 } else { c.riesz(gamma, lambda)? };
                        Ok((n as f64, m))
                    })
                    .map_err(|e| e.to_string()),
                Ok(None) => dirac_gap_count_symmetric(&spec, lambda)
                    .map(|(_, _, half)| (half, half))
                    .map_err(|e| e.to_string()),
            };
            let row = counted.and_then(|(count, riesz)| {
                let target = weyl_target(cfg, bmag, w, hbar, mu, gamma, lambda)? * norm;
                let scaled = hbar.powi(3) * riesz * norm;
                Ok((count, riesz, scaled, target))
            });
            match row {
                Err(e) => failed(p, start, e),
                Ok((count, riesz, scaled, target)) => SweepRow {
                    hbar,
                    mu,
                    gamma,
                    lambda,
                    count,
                    riesz,
                    scaled,
                    target,
                    gap: relative_gap(scaled, target),
                    // the shared assembly is charged to the group's first row
                    wall_time: start.elapsed().as_secs_f64() + if k == 0 { setup } else { 0.0 },
                    error: None,
                },
            }
        })
        .collect()
}

/// Runs every sweep point. Groups sharing `(hbar, mu)` run in parallel on the
/// current rayon pool; rows come back in [`sweep_points`] order. A failed
/// point becomes a row with its error set.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, SweepError> {
    let (b, w) = cfg.sample_fields()?;
    let bmag = b.magnitude();
    let points = sweep_points(cfg);
    let per_group = cfg.gamma.len() * cfg.lambda.len();
    let groups: Vec<&[(f64, f64, f64, f64)]> = points.chunks(per_group).collect();
    let rows: Vec<Vec<SweepRow>> = groups
        .par_iter()
        .map(|g| run_group(cfg, &b, &bmag, &w, g))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}
