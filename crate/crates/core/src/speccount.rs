//! Eigenvalue counting by inertia, Riesz means, windowed eigenvalues and
//! Dirac gap counts.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SpectralError;
use crate::linalg::{dense_eigenvalues, BandedLdl, BunchKaufman, Factorization};
use crate::magop::{assemble_dirac, OperatorSpec};
use crate::num::{lit, to_f64, Cplx, Real};
use crate::sparse::SparseHermitian;

/// Largest dimension handled by dense routines.
pub const DENSE_CAP: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMethod {
    /// Unpivoted banded `L D L^H`.
    BandedInertia,
    /// Bunch–Kaufman on the dense matrix.
    DenseInertia,
    /// Counting a full dense spectrum.
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountResult<T> {
    /// Threshold actually used (after any collision retry).
    pub tau: T,
    pub count: usize,
    pub method: CountMethod,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RieszResult<T> {
    pub gamma: T,
    pub lambda: T,
    pub value: T,
    /// Eigenvalues strictly below `-lambda`.
    pub contributing: usize,
}

/// Ascending spectrum of a matrix of dimension at most [`DENSE_CAP`].
pub fn eigen_dense<T: Real>(h: &SparseHermitian<T>) -> Result<Vec<T>, SpectralError> {
    eigen_dense_capped(h, DENSE_CAP)
}

pub fn eigen_dense_capped<T: Real>(h: &SparseHermitian<T>, cap: usize) -> Result<Vec<T>, SpectralError> {
    if h.dim() > cap {
        return Err(SpectralError::DimensionTooLarge { dim: h.dim(), cap });
    }
    Ok(dense_eigenvalues(h))
}

fn prefers_dense<T: Real>(h: &SparseHermitian<T>) -> bool {
    let n = h.dim();
    n <= DENSE_CAP && 3 * h.bandwidth() > n
}

enum Factored<T> {
    Banded(BandedLdl<T>),
    Dense(BunchKaufman<T>),
}

impl<T: Real> Factored<T> {
    fn get(&self) -> &dyn Factorization<T> {
        match self {
            Factored::Banded(f) => f,
            Factored::Dense(f) => f,
        }
    }

    fn method(&self) -> CountMethod {
        match self {
            Factored::Banded(_) => CountMethod::BandedInertia,
            Factored::Dense(_) => CountMethod::DenseInertia,
        }
    }
}

/// Factorizes `h - tau I`, falling back from the banded elimination to
/// Bunch–Kaufman when multipliers grow or a pivot collapses.
fn factor<T: Real>(h: &SparseHermitian<T>, tau: T, scale: T) -> Factored<T> {
    if prefers_dense(h) {
        return Factored::Dense(BunchKaufman::factor(h, tau));
    }
    let f = BandedLdl::factor(h, tau);
    let unstable = !(f.growth() < lit(1e8)) || f.min_pivot() < scale * lit(1e-12);
    if unstable && h.dim() <= DENSE_CAP {
        return Factored::Dense(BunchKaufman::factor(h, tau));
    }
    Factored::Banded(f)
}

/// `#{eigenvalues < tau}` from the inertia of `h - tau I`.
///
/// A pivot below `1e-12 ||h||` means `tau` sits on an eigenvalue; the count
/// is retried once at `tau (1 + 1e-9)` before giving up.
pub fn count_below<T: Real>(h: &SparseHermitian<T>, tau: T) -> Result<CountResult<T>, SpectralError> {
    if h.dim() == 0 {
        return Ok(CountResult {
            tau,
            count: 0,
            method: CountMethod::BandedInertia,
        });
    }
    let scale = h.norm_inf().max(T::min_positive_value());
    let tiny = scale * lit(1e-12);
    let mut t = tau;
    for attempt in 0..2 {
        let f = factor(h, t, scale);
        if f.get().min_pivot() >= tiny {
            return Ok(CountResult {
                tau: t,
                count: f.get().inertia().negative,
                method: f.method(),
            });
        }
        if attempt == 0 {
            let bump = if t == T::zero() { scale * lit(1e-9) } else { t.abs() * lit(1e-9) };
            t += bump;
        }
    }
    Err(SpectralError::ShiftTooCloseToEigenvalue {
        shift: to_f64(tau),
        suggested: to_f64(scale * lit(1e-8)),
    })
}

/// Count without collision handling, for bisection where either answer at an
/// exact eigenvalue is acceptable.
fn raw_count<T: Real>(h: &SparseHermitian<T>, tau: T, scale: T) -> usize {
    factor(h, tau, scale).get().inertia().negative
}

/// Eigenvalues below `bound`, using the dense solver when possible and
/// spectrum slicing otherwise.
fn eigenvalues_below<T: Real>(h: &SparseHermitian<T>, bound: T) -> Result<Vec<T>, SpectralError> {
    if h.dim() <= DENSE_CAP {
        return Ok(dense_eigenvalues(h).into_iter().filter(|e| *e < bound).collect());
    }
    let (lo, _) = h.gershgorin();
    if !(lo < bound) {
        return Ok(Vec::new());
    }
    let half = (bound - lo) * lit(0.5);
    eigen_window(h, lo + half, half, usize::MAX)
}

/// `M_gamma = sum_{e < -lambda} |e + lambda|^gamma`; `gamma = 0` is the count.
pub fn riesz_mean<T: Real>(h: &SparseHermitian<T>, gamma: T, lambda: T) -> Result<RieszResult<T>, SpectralError> {
    if gamma == T::zero() {
        let c = count_below(h, -lambda)?;
        return Ok(RieszResult {
            gamma,
            lambda,
            value: lit(c.count as f64),
            contributing: c.count,
        });
    }
    let ev = eigenvalues_below(h, -lambda)?;
    let value = ev.iter().map(|e| (-(*e + lambda)).powf(gamma)).sum();
    Ok(RieszResult {
        gamma,
        lambda,
        value,
        contributing: ev.len(),
    })
}

/// `gamma int_0^inf t^{gamma-1} N(h + lambda + t) dt` evaluated from counts
/// alone, see [`riesz_from_count_fn`].
pub fn riesz_from_counts<T: Real>(
    h: &SparseHermitian<T>,
    gamma: T,
    lambda: T,
    rel_tol: T,
) -> Result<T, SpectralError> {
    let (lo, _) = h.gershgorin();
    let scale = h.norm_inf().max(T::min_positive_value());
    riesz_from_count_fn(
        |t: T| Ok::<_, SpectralError>(raw_count(h, -lambda - t, scale)),
        gamma,
        -lambda - lo,
        rel_tol,
    )
}

/// `gamma int_0^top t^{gamma-1} n(t) dt` for a nonincreasing step function
/// `n` that vanishes beyond `top`.
///
/// An interval whose end counts agree integrates exactly to
/// `n (b^gamma - a^gamma)`; intervals holding jumps are bisected until they
/// are narrower than `rel_tol` of their right end and then split at the
/// midpoint. The piece below `t0 = 1e-9 top` is `n(t0) t0^gamma`.
pub fn riesz_from_count_fn<T: Real, E>(
    mut count: impl FnMut(T) -> Result<usize, E>,
    gamma: T,
    top: T,
    rel_tol: T,
) -> Result<T, E> {
    if !(top > T::zero()) {
        return Ok(T::zero());
    }
    let t0 = top * lit(1e-9);
    let n0 = count(t0)?;
    let mut total = lit::<T>(n0 as f64) * t0.powf(gamma);
    let ntop = count(top)?;
    let mut stack = vec![(t0, n0, top, ntop)];
    let weight = |n: usize, x: T, y: T| lit::<T>(n as f64) * (y.powf(gamma) - x.powf(gamma));
    while let Some((a, na, b, nb)) = stack.pop() {
        if na == nb {
            total += weight(na, a, b);
            continue;
        }
        // geometric midpoint keeps the work logarithmic in the range
        let m = (a * b).sqrt();
        if b - a <= rel_tol * b {
            let m = (a + b) * lit(0.5);
            total += weight(na, a, m) + weight(nb, m, b);
            continue;
        }
        let nm = count(m)?;
        stack.push((a, na, m, nm));
        stack.push((m, nm, b, nb));
    }
    Ok(total)
}

/// Jumps of a nondecreasing counting function on `[lo, hi]`, located by
/// bisection to width `tol` and returned ascending as `(midpoint, jump)`.
pub fn levels_from_count_fn<T: Real, E>(
    mut count: impl FnMut(T) -> Result<usize, E>,
    lo: T,
    hi: T,
    tol: T,
) -> Result<Vec<(T, usize)>, E> {
    let mut out = Vec::new();
    if !(hi > lo) {
        return Ok(out);
    }
    let (nlo, nhi) = (count(lo)?, count(hi)?);
    // right half pushed first so the left half is resolved first
    let mut stack = vec![(lo, nlo, hi, nhi)];
    while let Some((a, na, b, nb)) = stack.pop() {
        if na == nb {
            continue;
        }
        if b - a <= tol {
            out.push(((a + b) * lit(0.5), nb - na));
            continue;
        }
        let m = (a + b) * lit(0.5);
        let nm = count(m)?;
        stack.push((m, nm, b, nb));
        stack.push((a, na, m, nm));
    }
    Ok(out)
}

fn norm2<T: Real>(x: &[Cplx<T>]) -> T {
    x.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
}

fn dot<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> Cplx<T> {
    a.iter().zip(b).fold(Complex::default(), |s, (x, y)| s + x.conj() * y)
}

/// Orthonormalizes `vs` in place (modified Gram–Schmidt, twice).
fn orthonormalize<T: Real>(vs: &mut [Vec<Cplx<T>>]) {
    for _ in 0..2 {
        for k in 0..vs.len() {
            for j in 0..k {
                let (a, b) = vs.split_at_mut(k);
                let c = dot(&a[j], &b[0]);
                for (x, y) in b[0].iter_mut().zip(&a[j]) {
                    *x -= c * y;
                }
            }
            let n = norm2(&vs[k]);
            if n > T::zero() {
                for x in vs[k].iter_mut() {
                    *x = *x / n;
                }
            }
        }
    }
}

/// Eigenvalues in `[center - radius, center + radius]`, located by
/// bisection on inertia counts and refined by (block) inverse iteration;
/// every value is checked through the residual `||Hx - e x|| <= 1e-8 ||H||`.
pub fn eigen_window<T: Real>(
    h: &SparseHermitian<T>,
    center: T,
    radius: T,
    max_count: usize,
) -> Result<Vec<T>, SpectralError> {
    let scale = h.norm_inf().max(T::min_positive_value());
    let (lo, hi) = (center - radius, center + radius);
    let n_lo = raw_count(h, lo, scale);
    let n_hi = raw_count(h, hi, scale);
    let found = n_hi.saturating_sub(n_lo);
    if found == 0 {
        return Ok(Vec::new());
    }
    if found > max_count {
        return Err(SpectralError::TooManyEigenvalues { found, max: max_count });
    }
    let isolate_width = scale * lit(1e-6);
    let cluster_width = scale * lit(1e-11);
    // intervals (a, b, multiplicity) with a single eigenvalue or a tight cluster
    let mut stack = vec![(lo, n_lo, hi, n_hi)];
    let mut cells = Vec::new();
    while let Some((a, na, b, nb)) = stack.pop() {
        let m = nb - na;
        if m == 0 {
            continue;
        }
        if (m == 1 && b - a <= isolate_width) || b - a <= cluster_width {
            cells.push((a, b, m));
            continue;
        }
        let mid = (a + b) * lit(0.5);
        let nm = raw_count(h, mid, scale);
        stack.push((mid, nm, b, nb));
        stack.push((a, na, mid, nm));
    }
    cells.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let tol = scale * lit(1e-8);
    let mut out = Vec::with_capacity(found);
    for (a, b, m) in cells {
        let sigma = (a + b) * lit(0.5) + (b - a) * lit(0.01);
        let f = factor(h, sigma, scale);
        let mut vs: Vec<Vec<Cplx<T>>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| Complex::new(lit(rng.gen_range(-1.0..1.0)), lit(rng.gen_range(-1.0..1.0))))
                    .collect()
            })
            .collect();
        orthonormalize(&mut vs);
        let mut values = vec![sigma; m];
        let mut ok = false;
        for _ in 0..40 {
            for v in vs.iter_mut() {
                *v = f.get().solve(v);
            }
            orthonormalize(&mut vs);
            ok = true;
            for (k, v) in vs.iter().enumerate() {
                let hv = h.matvec(v);
                let e = dot(v, &hv).re;
                values[k] = e;
                let r: Vec<Cplx<T>> = hv.iter().zip(v).map(|(x, y)| *x - *y * e).collect();
                if norm2(&r) > tol {
                    ok = false;
                }
            }
            if ok {
                break;
            }
        }
        if !ok {
            return Err(SpectralError::NoConvergence(40));
        }
        values.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        out.extend(values);
    }
    Ok(out)
}

/// Number of eigenvalues of the Dirac operator in `(-sqrt(1-lambda), sqrt(1-lambda))`,
/// counted as eigenvalues of `D^2` below `1 - lambda`.
pub fn dirac_gap_count<T: Real>(spec: &OperatorSpec<T>, lambda: T) -> Result<CountResult<T>, SpectralError> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(SpectralError::LambdaOutOfRange(to_f64(lambda)));
    }
    let d = assemble_dirac(spec)?;
    let d2 = d.matrix().square();
    count_below(&d2, T::one() - lambda)
}

/// Gap counts for `+V` and `-V` and their half-sum.
pub fn dirac_gap_count_symmetric<T: Real>(
    spec: &OperatorSpec<T>,
    lambda: T,
) -> Result<(usize, usize, T), SpectralError> {
    let plus = dirac_gap_count(spec, lambda)?.count;
    let neg = spec.potential().map(|v| -v);
    let minus = dirac_gap_count(&spec.clone().with_potential(neg), lambda)?.count;
    Ok((plus, minus, lit::<T>((plus + minus) as f64) * lit(0.5)))
}

/// Eigenvalues of the Dirac operator itself inside `(-sqrt(1-lambda), sqrt(1-lambda))`.
pub fn dirac_gap_eigenvalues<T: Real>(spec: &OperatorSpec<T>, lambda: T) -> Result<Vec<T>, SpectralError> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(SpectralError::LambdaOutOfRange(to_f64(lambda)));
    }
    let d = assemble_dirac(spec)?;
    let edge = (T::one() - lambda).sqrt();
    Ok(eigen_dense(d.matrix())?.into_iter().filter(|e| e.abs() < edge).collect())
}
