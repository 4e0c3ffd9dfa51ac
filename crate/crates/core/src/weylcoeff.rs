//! Magnetic Weyl coefficient, its classical limit and the majorant
//! functionals used to compare coefficients for different fields and
//! potentials.

use rayon::prelude::*;

use crate::error::WeylError;
use crate::grid::{GridBox, ScalarField};
use crate::num::{lit, neg_part, pos_part, to_f64, Real};
use crate::quad;
use crate::tessellate::Tessellation;

/// Integration region for the grid functionals.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a, T> {
    /// The whole grid box.
    Whole,
    /// The union of the cubes of a tessellation.
    Cubes(&'a Tessellation<T>),
    /// An axis-aligned sub-box.
    Box { lower: [T; 3], upper: [T; 3] },
}

impl<T: Real> Region<'_, T> {
    /// Quadrature weight of every node: its dual cell clipped to the region.
    pub fn weights(&self, grid: &GridBox<T>) -> Vec<T> {
        let (lo, hi) = match self {
            Region::Whole => (grid.lower(), grid.upper()),
            Region::Cubes(t) => (t.union_lower(), t.union_upper()),
            Region::Box { lower, upper } => (*lower, *upper),
        };
        (0..grid.node_count())
            .map(|i| grid.node_weight_in(i, lo, hi))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylParams<T> {
    pub gamma: T,
    /// Constant shift folded into the potential.
    pub lambda: T,
    /// Fields at or below this value use the classical density.
    pub eps_b: T,
}

impl<T: Real> WeylParams<T> {
    pub fn new(gamma: T) -> Self {
        Self {
            gamma,
            lambda: T::zero(),
            eps_b: lit(1e-8),
        }
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylResult<T> {
    pub value: T,
    /// Largest Landau index that contributed at any node.
    pub max_landau_index: usize,
    /// Nodes with nonzero weight and nonzero density.
    pub nodes: usize,
}

/// `beta_gamma = (1/4 pi^2) int_0^1 (1-t)^{-1/2} t^gamma dt
///             = B(gamma + 1, 1/2) / (4 pi^2)`.
pub fn beta_gamma<T: Real>(gamma: T) -> Result<T, WeylError> {
    let g = to_f64(gamma);
    if !(g >= 0.0) {
        return Err(WeylError::NegativeGamma(g));
    }
    let closed = quad::beta(g + 1.0, 0.5);
    if closed.is_finite() && closed > 0.0 {
        let four_pi2 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        Ok(lit(closed / four_pi2))
    } else {
        beta_gamma_quadrature(gamma)
    }
}

/// Same integral by quadrature after `t = 1 - s^2`, which removes the
/// endpoint singularity: `int_0^1 2 (1 - s^2)^gamma ds`.
pub fn beta_gamma_quadrature<T: Real>(gamma: T) -> Result<T, WeylError> {
    if !(gamma >= T::zero()) {
        return Err(WeylError::NegativeGamma(to_f64(gamma)));
    }
    let (v, _) = quad::integrate(
        |s: T| lit::<T>(2.0) * (T::one() - s * s).powf(gamma),
        T::zero(),
        T::one(),
        lit(1e-15),
        lit(1e-14),
        400,
    );
    Ok(v / (lit::<T>(4.0) * T::PI() * T::PI()))
}

/// Pointwise Weyl density for field strength `b >= 0` and shifted potential
/// `w`, with the Landau index it was truncated at.
pub fn weyl_density<T: Real>(b: T, w: T, gamma: T, beta: T, eps_b: T) -> (T, usize) {
    let wm = neg_part(w);
    if wm == T::zero() {
        return (T::zero(), 0);
    }
    let half = lit::<T>(0.5);
    if b <= eps_b {
        let e = gamma + lit(1.5);
        return (beta * wm.powf(e) / e, 0);
    }
    let e = gamma + half;
    let two_b = b + b;
    let kmax = (wm / two_b).floor().to_usize().unwrap_or(0);
    let mut sum = T::zero();
    for k in 1..=kmax {
        sum += pos_part(wm - two_b * lit(k as f64)).powf(e);
    }
    (beta * b * (wm.powf(e) + sum + sum), kmax)
}

fn check_pair<T: Real>(b: &ScalarField<T>, v: &ScalarField<T>) -> Result<(), WeylError> {
    if !b.grid().same_as(v.grid()) {
        return Err(WeylError::GridMismatch);
    }
    if let Some(i) = b.values().iter().position(|x| *x < T::zero()) {
        return Err(WeylError::NegativeB(i));
    }
    Ok(())
}

fn coefficient_with<T: Real>(
    b: &ScalarField<T>,
    v: &ScalarField<T>,
    params: &WeylParams<T>,
    weights: &[T],
    beta: T,
) -> WeylResult<T> {
    let parts: Vec<(T, usize, usize)> = (0..weights.len())
        .into_par_iter()
        .map(|i| {
            let w = weights[i];
            if w == T::zero() {
                return (T::zero(), 0, 0);
            }
            let (d, k) = weyl_density(b.get(i), v.get(i) + params.lambda, params.gamma, beta, params.eps_b);
            (d * w, k, usize::from(d > T::zero()))
        })
        .collect();
    let mut value = T::zero();
    let mut kmax = 0;
    let mut nodes = 0;
    for (d, k, n) in parts {
        value += d;
        kmax = kmax.max(k);
        nodes += n;
    }
    WeylResult {
        value,
        max_landau_index: kmax,
        nodes,
    }
}

/// `B_gamma(b, v + lambda, region)` by dual-cell quadrature.
pub fn weyl_coefficient<T: Real>(
    b: &ScalarField<T>,
    v: &ScalarField<T>,
    params: &WeylParams<T>,
    region: Region<'_, T>,
) -> Result<WeylResult<T>, WeylError> {
    check_pair(b, v)?;
    let beta = beta_gamma(params.gamma)?;
    let weights = region.weights(b.grid());
    Ok(coefficient_with(b, v, params, &weights, beta))
}

/// Direct `B_gamma(b, v)` next to `gamma int_0^inf t^{gamma-1} B_0(b, v + t) dt`.
///
/// The `t` integral is taken in the variable `s = t^gamma`, which turns the
/// weight into `ds`, with adaptive Gauss–Kronrod to relative tolerance 1e-6.
pub fn riesz_integral_identity_check<T: Real>(
    b: &ScalarField<T>,
    v: &ScalarField<T>,
    gamma: T,
    region: Region<'_, T>,
) -> Result<(T, T), WeylError> {
    if gamma == T::zero() {
        return Err(WeylError::GammaZero);
    }
    let params = WeylParams::new(gamma);
    let direct = weyl_coefficient(b, v, &params, region)?.value;
    let top = v.values().iter().map(|x| neg_part(*x)).fold(T::zero(), T::max);
    if top == T::zero() {
        return Ok((direct, T::zero()));
    }
    let weights = region.weights(b.grid());
    let beta0 = beta_gamma(T::zero())?;
    let p0 = WeylParams::new(T::zero());
    let inv = T::one() / gamma;
    let (integrated, _) = quad::integrate(
        |s: T| {
            let t = s.powf(inv);
            coefficient_with(b, v, &p0.with_lambda(t), &weights, beta0).value
        },
        T::zero(),
        top.powf(gamma),
        T::zero(),
        lit(1e-6),
        2000,
    );
    Ok((direct, integrated))
}

/// `M(b, U) = int b |U|^{1/2}`.
pub fn functional_m<T: Real>(b: &ScalarField<T>, u: &ScalarField<T>, region: Region<'_, T>) -> T {
    let w = region.weights(u.grid());
    (0..w.len())
        .map(|i| w[i] * b.get(i) * u.get(i).abs().sqrt())
        .sum()
}

/// `N(U) = int |U|^{3/2}`.
pub fn functional_n<T: Real>(u: &ScalarField<T>, region: Region<'_, T>) -> T {
    let w = region.weights(u.grid());
    (0..w.len())
        .map(|i| w[i] * u.get(i).abs().powf(lit(1.5)))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Majorants<T> {
    /// `M(b, U1 - U2)`.
    pub m12: T,
    /// `N(U1 - U2)`.
    pub n12: T,
    /// `N(U2)`.
    pub n2: T,
    /// Bound on `|B(b, U1) - B(b, U2)|`: `M12 + N12^{1/3} (N12^{2/3} + N2^{2/3})`.
    pub potential_bound: T,
    /// Bound on `|B(b1, U1) - B(b2, U1)|` with `b` read as `|b1 - b2|`:
    /// `M + 2 M^{1/2} N^{1/2} + M^{1/4} N^{3/4}`, `M = M(b, U1)`, `N = N(U1)`.
    pub field_bound: T,
    /// `int [b + U1]_+^{3/2 + gamma}`.
    pub clr: T,
}

/// All comparison functionals at once (constants set to one).
pub fn majorants<T: Real>(
    b: &ScalarField<T>,
    u1: &ScalarField<T>,
    u2: &ScalarField<T>,
    gamma: T,
    region: Region<'_, T>,
) -> Result<Majorants<T>, WeylError> {
    check_pair(b, u1)?;
    if !u1.grid().same_as(u2.grid()) {
        return Err(WeylError::GridMismatch);
    }
    let diff = ScalarField::new(
        u1.grid().clone(),
        u1.values().iter().zip(u2.values()).map(|(a, c)| *a - *c).collect(),
    )
    .map_err(|_| WeylError::GridMismatch)?;
    let m12 = functional_m(b, &diff, region);
    let n12 = functional_n(&diff, region);
    let n2 = functional_n(u2, region);
    let third = lit::<T>(1.0 / 3.0);
    let two_thirds = lit::<T>(2.0 / 3.0);
    let potential_bound = m12 + n12.powf(third) * (n12.powf(two_thirds) + n2.powf(two_thirds));
    let m = functional_m(b, u1, region);
    let n = functional_n(u1, region);
    let field_bound = m
        + lit::<T>(2.0) * (m * n).sqrt()
        + m.powf(lit(0.25)) * n.powf(lit(0.75));
    let w = region.weights(b.grid());
    let e = gamma + lit(1.5);
    let clr = (0..w.len())
        .map(|i| w[i] * pos_part(b.get(i) + u1.get(i)).powf(e))
        .sum();
    Ok(Majorants {
        m12,
        n12,
        n2,
        potential_bound,
        field_bound,
        clr,
    })
}
