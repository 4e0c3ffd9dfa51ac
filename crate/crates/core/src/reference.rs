//! Closed-form and semi-analytic reference spectra.

use crate::error::ReferenceError;
use crate::grid::ScalarField;
use crate::magop::cell_flux;
use crate::num::{from_usize, lit, neg_part, to_f64, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct LandauLadder<T> {
    pub b0: T,
    pub mu: T,
    pub hbar: T,
    /// `2 k mu hbar B0`, `k >= 0`: the block containing the zero modes.
    pub favored: Vec<T>,
    /// `2 (k + 1) mu hbar B0`.
    pub other: Vec<T>,
    /// States per unit area in each level, `mu B0 / (2 pi hbar)`.
    pub degeneracy_density: T,
}

/// Pauli Landau levels in 2D for a constant field `B0 > 0`.
pub fn landau_pauli_levels<T: Real>(b0: T, mu: T, hbar: T, k_max: usize) -> Result<LandauLadder<T>, ReferenceError> {
    if !(b0 > T::zero()) {
        return Err(ReferenceError::NonpositiveField);
    }
    let step = lit::<T>(2.0) * mu * hbar * b0;
    Ok(LandauLadder {
        b0,
        mu,
        hbar,
        favored: (0..=k_max).map(|k| step * from_usize(k)).collect(),
        other: (0..=k_max).map(|k| step * from_usize(k + 1)).collect(),
        degeneracy_density: mu * b0 / (lit::<T>(2.0) * T::PI() * hbar),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusFlux<T> {
    /// `(1/2 pi) int B`.
    pub phi: T,
    /// Nearest integer to `mu Phi / hbar`.
    pub n: i64,
    pub defect: T,
}

/// Flux of `B_3` sampled on a periodic cell grid.
pub fn torus_flux<T: Real>(b3: &ScalarField<T>, t1: T, t2: T, mu: T, hbar: T) -> TorusFlux<T> {
    let (phi, n, defect) = cell_flux(b3, [t1, t2, T::one()], mu, hbar);
    TorusFlux { phi, n, defect }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusWindow<T> {
    pub center: T,
    pub halfwidth: T,
    pub applicable: bool,
}

/// Window `(T3 / pi hbar) W_-^{1/2} |N| +- |N|` for the count on a 3D torus
/// with constant `W`, valid when `W_- < 2 mu hbar kappa`.
pub fn torus_count_window<T: Real>(w: T, n: i64, t3: T, hbar: T, kappa: T, mu: T) -> TorusWindow<T> {
    let wm = neg_part(w);
    let an = lit::<T>(n.unsigned_abs() as f64);
    TorusWindow {
        center: t3 / (T::PI() * hbar) * wm.sqrt() * an,
        halfwidth: an,
        applicable: wm < lit::<T>(2.0) * mu * hbar * kappa,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellSpec<T> {
    /// Depth `c > 0`.
    pub depth: T,
    /// Half-width `R > 0`.
    pub half_width: T,
    pub hbar: T,
}

/// One bound state of `-hbar^2 d^2 - c chi_(-R,R)` by the standard matching.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellRoot<T> {
    /// Binding energy: the eigenvalue is `-lambda`.
    pub lambda: T,
    pub even: bool,
    /// `|theta tan theta - s|` or `|-theta cot theta - s|` at the root.
    pub residual: T,
    /// Lattice eigenvalue magnitudes at spacing `h` and `h/2`.
    pub oracle: (T, T),
    /// Observed convergence order of the lattice value.
    pub order: T,
    pub confirmed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareWellReport<T> {
    pub roots: Vec<WellRoot<T>>,
    /// Roots of the alternative combined equation with factor 4.
    pub factor4_roots: Vec<T>,
    /// Whether the factor-4 roots reproduce the lattice spectrum.
    pub factor4_matches_oracle: bool,
    /// Confirmed bound states.
    pub count: usize,
    /// `floor(2 R sqrt(c) / (pi hbar))`.
    pub bound: usize,
    /// Lattice bound-state count at the finer spacing.
    pub oracle_count: usize,
}

fn bisect<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = (a + b) * lit(0.5);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == T::zero() {
            return m;
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    (a + b) * lit(0.5)
}

/// Negative eigenvalues (as binding energies) of the tridiagonal lattice
/// operator on `[-L, L]` with spacing `h`; the jump nodes `|x| = R` carry
/// half the well depth. Sturm-sequence bisection.
fn lattice_well<T: Real>(c: T, r: T, hbar: T, steps_per_r: usize, outer: usize) -> Vec<T> {
    let h = r / from_usize(steps_per_r);
    let half_nodes = steps_per_r + outer;
    // interior nodes i = -(half_nodes - 1) ..= half_nodes - 1
    let n = 2 * half_nodes - 1;
    let k = hbar * hbar / (h * h);
    let diag: Vec<T> = (0..n)
        .map(|i| {
            let j = (i as isize - (half_nodes as isize - 1)).unsigned_abs();
            let v = match j.cmp(&steps_per_r) {
                std::cmp::Ordering::Less => -c,
                std::cmp::Ordering::Equal => -c * lit(0.5),
                std::cmp::Ordering::Greater => T::zero(),
            };
            k + k + v
        })
        .collect();
    let count = |x: T| {
        let mut neg = 0;
        let mut d = T::one();
        for (i, &a) in diag.iter().enumerate() {
            d = if i == 0 { a - x } else { a - x - k * k / d };
            if d == T::zero() {
                d = T::eps() * k;
            }
            if d < T::zero() {
                neg += 1;
            }
        }
        neg
    };
    let m = count(T::zero());
    let mut out = Vec::with_capacity(m);
    for idx in 0..m {
        // idx-th eigenvalue from the bottom lies in (-c, 0)
        let (mut a, mut b) = (-c - T::one(), T::zero());
        for _ in 0..200 {
            let mid = (a + b) * lit(0.5);
            if mid <= a || mid >= b {
                break;
            }
            if count(mid) > idx {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(-(a + b) * lit(0.5));
    }
    out
}

/// Bound states of the 1D square well, by even/odd matching, by the factor-4
/// combined equation, and by a lattice oracle at two spacings.
pub fn square_well_spectrum<T: Real>(spec: &WellSpec<T>) -> Result<SquareWellReport<T>, ReferenceError> {
    let (c, r, hbar) = (spec.depth, spec.half_width, spec.hbar);
    if !(c > T::zero() && r > T::zero() && hbar > T::zero()) {
        return Err(ReferenceError::InvalidParameter("depth, half-width and hbar must be positive".into()));
    }
    let z0 = r * c.sqrt() / hbar;
    let s_of = |t: T| (z0 * z0 - t * t).max(T::zero()).sqrt();
    let excl = lit::<T>(1e-12);
    let half_pi = T::FRAC_PI_2();
    let lambda_of = |t: T| c - (hbar * t / r).powi(2);

    let mut found: Vec<(T, bool, T)> = Vec::new();
    let mut j = 0usize;
    loop {
        let start = half_pi * from_usize(j);
        if start >= z0 {
            break;
        }
        let even = j % 2 == 0;
        let a = start + excl;
        let b = (start + half_pi - excl).min(z0 - excl);
        if b > a {
            let f = |t: T| {
                if even {
                    t * t.tan() - s_of(t)
                } else {
                    -t / t.tan() - s_of(t)
                }
            };
            if f(a) < T::zero() && f(b) > T::zero() {
                let t = bisect(f, a, b);
                found.push((t, even, f(t).abs()));
            }
        }
        j += 1;
    }

    // combined equation with the factor 4, written pole-free:
    // sin(2t)(t^2 - s^2) - 4 t s cos(2t) = 0
    let g = |t: T| {
        let s = s_of(t);
        (t + t).sin() * (t * t - s * s) - lit::<T>(4.0) * t * s * (t + t).cos()
    };
    let mut factor4_roots = Vec::new();
    let samples = 4000usize.max((z0 * lit(400.0)).to_usize().unwrap_or(4000));
    let mut prev_t = excl;
    let mut prev = g(prev_t);
    for i in 1..=samples {
        let t = excl + (z0 - excl - excl) * from_usize(i) / from_usize(samples);
        let v = g(t);
        if (v < T::zero()) != (prev < T::zero()) {
            factor4_roots.push(lambda_of(bisect(g, prev_t, t)));
        }
        prev_t = t;
        prev = v;
    }
    factor4_roots.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));

    // lattice oracle, box long enough for the shallowest state to decay
    let shallow = found
        .iter()
        .map(|(t, _, _)| lambda_of(*t))
        .fold(c, T::min)
        .max(c * lit(1e-6));
    let decay = hbar / shallow.sqrt();
    let outer_len = (decay * lit(18.0)).min(r * lit(200.0));
    let base = 64usize.max((lit::<T>(8.0) * z0).to_usize().unwrap_or(64));
    let coarse = lattice_well(c, r, hbar, base, (outer_len / (r / from_usize(base))).ceil().to_usize().unwrap_or(1));
    let fine = lattice_well(c, r, hbar, 2 * base, (outer_len / (r / from_usize(2 * base))).ceil().to_usize().unwrap_or(1));

    let mut by_depth = found.clone();
    by_depth.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let roots: Vec<WellRoot<T>> = by_depth
        .iter()
        .enumerate()
        .map(|(idx, &(t, even, residual))| {
            let lam = lambda_of(t);
            let o1 = coarse.get(idx).copied().unwrap_or(T::nan());
            let o2 = fine.get(idx).copied().unwrap_or(T::nan());
            let (e1, e2) = ((o1 - lam).abs(), (o2 - lam).abs());
            let order = if e2 > T::zero() { (e1 / e2).log2() } else { T::infinity() };
            let tol = c * lit(1e-2);
            WellRoot {
                lambda: lam,
                even,
                residual,
                oracle: (o1, o2),
                order,
                confirmed: residual < lit(1e-10) && e2 < tol && e2 <= e1,
            }
        })
        .collect();

    let factor4_matches_oracle = factor4_roots.len() == fine.len()
        && factor4_roots
            .iter()
            .zip(&fine)
            .all(|(p, o)| (*p - *o).abs() < c * lit(1e-2));
    let count = roots.iter().filter(|r| r.confirmed).count();
    let bound = (lit::<T>(2.0) * z0 / T::PI()).floor().to_usize().unwrap_or(0);
    Ok(SquareWellReport {
        roots,
        factor4_roots,
        factor4_matches_oracle,
        count,
        bound,
        oracle_count: fine.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparableSpectrum<T> {
    pub count: usize,
    /// `(lambda_n + eps_m, multiplicity)` below the threshold, ascending.
    pub levels: Vec<(T, usize)>,
}

/// `eps_m = (m pi hbar / R)^2`, the Dirichlet levels on `(0, R)`.
pub fn dirichlet_level<T: Real>(m: usize, r: T, hbar: T) -> T {
    (from_usize::<T>(m) * T::PI() * hbar / r).powi(2)
}

/// All sums `lambda_n + eps_m < tau` of 2D levels (with degeneracies) and
/// Dirichlet levels on `(0, R)`.
pub fn separable_spectrum<T: Real>(levels2d: &[(T, usize)], r: T, hbar: T, tau: T) -> SeparableSpectrum<T> {
    let mut levels = Vec::new();
    let mut m = 1;
    loop {
        let e = dirichlet_level(m, r, hbar);
        if levels2d.first().map_or(true, |l| l.0 + e >= tau) {
            break;
        }
        for &(l, d) in levels2d {
            if l + e < tau {
                levels.push((l + e, d));
            }
        }
        m += 1;
    }
    levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    SeparableSpectrum {
        count: levels.iter().map(|l| l.1).sum(),
        levels,
    }
}

/// `sum_m N_2(tau - eps_m)` for a 2D counting function given as a closure.
pub fn separable_count<T: Real, E>(
    mut count2d: impl FnMut(T) -> Result<usize, E>,
    lowest2d: T,
    r: T,
    hbar: T,
    tau: T,
) -> Result<usize, E> {
    let mut total = 0;
    let mut m = 1;
    loop {
        let t = tau - dirichlet_level(m, r, hbar);
        if t <= lowest2d {
            break;
        }
        total += count2d(t)?;
        m += 1;
    }
    Ok(total)
}

/// Right-hand sides of the cylinder bounds with unit constants:
/// `gamma = 0`: `hbar^-3 (mu hbar + 1) sqrt(c) |ln lambda| R int (|B| + c)`;
/// `gamma > 0`: `hbar^-3 (mu hbar + 1) c^{gamma + 1/2} (|ln c| + 1) R int (|B| + c)`.
#[allow(clippy::too_many_arguments)]
pub fn cylinder_bound<T: Real>(c: T, r: T, field_integral: T, mu: T, hbar: T, lambda: T, gamma: T) -> Result<T, ReferenceError> {
    let pre = (mu * hbar + T::one()) * r * field_integral / hbar.powi(3);
    if gamma == T::zero() {
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(ReferenceError::LambdaOutOfRange(to_f64(lambda)));
        }
        Ok(pre * c.sqrt() * lambda.ln().abs())
    } else if gamma > T::zero() {
        Ok(pre * c.powf(gamma + lit(0.5)) * (c.ln().abs() + T::one()))
    } else {
        Err(ReferenceError::InvalidParameter("gamma must be nonnegative".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_spacing() {
        let l = landau_pauli_levels(5.0, 1.0, 0.1, 3).unwrap();
        assert_eq!(l.favored.len(), 4);
        for (k, v) in l.favored.iter().enumerate() {
            assert!((v - k as f64).abs() < 1e-12);
        }
        assert!((l.other[0] - 1.0).abs() < 1e-12);
        assert!(landau_pauli_levels(0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn window_formula() {
        let w = torus_count_window(-1.0, 5, 1.0, 0.1, 1.0, 1.0);
        assert!((w.center - 50.0 / std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(w.halfwidth, 5.0);
    }

    #[test]
    fn separable_example() {
        let lv = [(0.0, 1), (2.0, 1), (4.0, 1)];
        let s = separable_spectrum(&lv, std::f64::consts::PI, 1.0, 5.0);
        assert_eq!(s.count, 3);
    }

    #[test]
    fn well_bound_and_roots() {
        let rep = square_well_spectrum(&WellSpec { depth: 10.0, half_width: 1.0, hbar: 1.0 }).unwrap();
        assert_eq!(rep.bound, 2);
        assert_eq!(rep.roots.len(), 3);
        assert!(rep.count <= rep.bound + 1);
        for r in &rep.roots {
            assert!(r.confirmed, "{r:?}");
            assert!(r.order > 1.8, "{r:?}");
        }
    }

    #[test]
    fn cylinder_bound_plug_in() {
        let v = cylinder_bound(1.0, 1.0, 1.0, 0.0, 1.0, (-1.0f64).exp(), 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(cylinder_bound(1.0, 1.0, 1.0, 0.0, 1.0, 1.5, 0.0).is_err());
    }
}
