//! Shen's effective magnetic field `b_p = l_p^{-2}` and the bound
//! functionals built from it.

use rayon::prelude::*;

use crate::error::EffectiveFieldError;
use crate::grid::{GridBox, ScalarField, VectorField};
use crate::num::{lit, neg_part, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    /// Squares in the `(x1, x2)` plane through the evaluation point.
    Two,
    /// Cubes.
    Three,
}

impl Dim {
    fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveFieldParams<T> {
    pub p: T,
    /// Cap on the length; `None` means the diameter of the field grid.
    pub l_max: Option<T>,
    /// Bisection tolerance relative to the cap.
    pub rel_tol: T,
}

impl<T: Real> EffectiveFieldParams<T> {
    pub fn new(p: T) -> Self {
        Self {
            p,
            l_max: None,
            rel_tol: lit(1e-10),
        }
    }

    fn validate(&self, dim: Dim) -> Result<(), EffectiveFieldError> {
        let min = match dim {
            Dim::Two => 1.0,
            Dim::Three => 1.5,
        };
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        if !(p > min) {
            return Err(EffectiveFieldError::InvalidExponent { p, dim: dim.n(), min });
        }
        if let Some(l) = self.l_max {
            if !(l > T::zero()) {
                return Err(EffectiveFieldError::InvalidCap);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveLength<T> {
    pub length: T,
    /// The defining inequality still held at the cap.
    pub capped: bool,
}

/// `|B|^p` on the grid together with the geometry needed for box integrals.
struct Density<'a, T> {
    grid: &'a GridBox<T>,
    values: Vec<T>,
}

impl<T: Real> Density<'_, T> {
    /// `int_{box(x, l)} |B|^p`, with partial dual-cell overlaps at the box
    /// boundary and `B = 0` outside the grid. In 2D the integral runs over
    /// the node plane nearest to `x3`.
    fn box_integral(&self, x: [T; 3], l: T, dim: Dim) -> T {
        let g = self.grid;
        let half = l * lit(0.5);
        let pts = g.points();
        let mut range = [(0usize, 0usize); 3];
        for d in 0..3 {
            if !g.is_active(d) {
                range[d] = (0, 0);
                continue;
            }
            let h = g.spacing(d);
            if d == 2 && dim == Dim::Two {
                let s = ((x[2] - g.lower()[2]) / h).round();
                let k = s.max(T::zero()).to_usize().unwrap_or(0).min(pts[2] - 1);
                range[d] = (k, k);
                continue;
            }
            let lo = ((x[d] - half - g.lower()[d]) / h - lit(0.5)).floor();
            let hi = ((x[d] + half - g.lower()[d]) / h + lit(0.5)).ceil();
            let last = (pts[d] - 1) as f64;
            let lo = lo.to_f64().unwrap_or(0.0).clamp(0.0, last) as usize;
            let hi = hi.to_f64().unwrap_or(last).clamp(0.0, last) as usize;
            if x[d] + half < g.lower()[d] || x[d] - half > g.upper()[d] {
                return T::zero();
            }
            range[d] = (lo, hi);
        }
        let mut acc = T::zero();
        for k in range[2].0..=range[2].1 {
            let wz = if dim == Dim::Two {
                T::one()
            } else {
                overlap_or_full(g, 2, k, x[2], half, l)
            };
            if wz == T::zero() {
                continue;
            }
            for j in range[1].0..=range[1].1 {
                let wy = overlap_or_full(g, 1, j, x[1], half, l);
                if wy == T::zero() {
                    continue;
                }
                for i in range[0].0..=range[0].1 {
                    let wx = overlap_or_full(g, 0, i, x[0], half, l);
                    if wx == T::zero() {
                        continue;
                    }
                    acc += wx * wy * wz * self.values[g.index([i, j, k])];
                }
            }
        }
        acc
    }

    fn f(&self, x: [T; 3], l: T, dim: Dim, p: T) -> T {
        let vol = l.powi(dim.n() as i32);
        let avg = self.box_integral(x, l, dim) / vol;
        l * l * avg.powf(T::one() / p)
    }
}

/// Overlap of node `i`'s dual cell with `[x - half, x + half]`; an inactive
/// axis is treated as a field constant along it, contributing the full `l`.
fn overlap_or_full<T: Real>(g: &GridBox<T>, axis: usize, i: usize, x: T, half: T, l: T) -> T {
    if g.is_active(axis) {
        g.dual_overlap(axis, i, x - half, x + half)
    } else {
        l
    }
}

fn density<'a, T: Real>(b: &'a VectorField<T>, p: T) -> Density<'a, T> {
    Density {
        grid: b.grid(),
        values: (0..b.grid().node_count()).map(|i| b.norm_at(i).powf(p)).collect(),
    }
}

fn length_with<T: Real>(
    dens: &Density<'_, T>,
    x: [T; 3],
    params: &EffectiveFieldParams<T>,
    dim: Dim,
) -> EffectiveLength<T> {
    let cap = params.l_max.unwrap_or_else(|| dens.grid.diameter());
    let p = params.p;
    let f = |l: T| dens.f(x, l, dim, p);
    if f(cap) <= T::one() {
        return EffectiveLength {
            length: cap,
            capped: true,
        };
    }
    let n = 64;
    let mut lo_end = cap * lit(1e-4);
    let mut scan: Vec<T>;
    loop {
        let ratio = (cap / lo_end).ln() / lit((n - 1) as f64);
        scan = (0..n).map(|k| lo_end * (ratio * lit(k as f64)).exp()).collect();
        scan[n - 1] = cap;
        if f(scan[0]) <= T::one() || lo_end < cap * lit(1e-30) {
            break;
        }
        lo_end = lo_end * lit(1e-4);
    }
    let vals: Vec<T> = scan.iter().map(|&l| f(l)).collect();
    // last point where the condition holds; the next one violates it
    let Some(k) = (0..n - 1).rev().find(|&k| vals[k] <= T::one()) else {
        return EffectiveLength {
            length: T::zero(),
            capped: false,
        };
    };
    let (mut a, mut b) = (scan[k], scan[k + 1]);
    let tol = cap * params.rel_tol;
    while b - a > tol {
        let m = (a + b) * lit(0.5);
        if f(m) <= T::one() {
            a = m;
        } else {
            b = m;
        }
    }
    EffectiveLength {
        length: a,
        capped: false,
    }
}

/// `l_p(x) = sup { l <= l_max : l^2 (l^{-d} int_{box(x,l)} |B|^p)^{1/p} <= 1 }`.
pub fn effective_length<T: Real>(
    b: &VectorField<T>,
    x: [T; 3],
    params: &EffectiveFieldParams<T>,
    dim: Dim,
) -> Result<EffectiveLength<T>, EffectiveFieldError> {
    params.validate(dim)?;
    Ok(length_with(&density(b, params.p), x, params, dim))
}

/// The defining function `F(l)` itself, for checking the returned length.
pub fn scale_function<T: Real>(b: &VectorField<T>, x: [T; 3], l: T, p: T, dim: Dim) -> T {
    density(b, p).f(x, l, dim, p)
}

/// `b_p(x) = l_p(x)^{-2}`.
pub fn effective_field<T: Real>(
    b: &VectorField<T>,
    x: [T; 3],
    params: &EffectiveFieldParams<T>,
    dim: Dim,
) -> Result<T, EffectiveFieldError> {
    let l = effective_length(b, x, params, dim)?.length;
    Ok(T::one() / (l * l))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// `lambda^{-1} { hbar^{-3} int W_-^{5/2} + mu^{3/2} hbar^{-3/2} int b_p^{3/2} W_- }`.
    Trace,
    /// `hbar^{-3} lambda^{-1/2} { int W_-^2 + mu hbar int b^_p W_- }`, 2D fields.
    Count,
}

/// Shen-type bound functionals with unit constants. `b_p` is evaluated only
/// at nodes of `w`'s grid where `W_- > 0`; `b` may live on a larger grid.
pub fn shen_bound<T: Real>(
    w: &ScalarField<T>,
    b: &VectorField<T>,
    mu: T,
    hbar: T,
    lambda: T,
    params: &EffectiveFieldParams<T>,
    kind: BoundKind,
) -> Result<T, EffectiveFieldError> {
    if !(lambda > T::zero()) {
        return Err(EffectiveFieldError::NonpositiveLambda);
    }
    let dim = match kind {
        BoundKind::Trace => Dim::Three,
        BoundKind::Count => Dim::Two,
    };
    params.validate(dim)?;
    let g = w.grid();
    let dens = density(b, params.p);
    let terms: Vec<(T, T)> = (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let wm = neg_part(w.get(i));
            if wm == T::zero() {
                return (T::zero(), T::zero());
            }
            let l = length_with(&dens, g.position(i), params, dim).length;
            let bp = T::one() / (l * l);
            let wt = g.node_weight(i);
            match kind {
                BoundKind::Trace => (wt * wm.powf(lit(2.5)), wt * bp.powf(lit(1.5)) * wm),
                BoundKind::Count => (wt * wm * wm, wt * bp * wm),
            }
        })
        .collect();
    let (a, c) = terms
        .into_iter()
        .fold((T::zero(), T::zero()), |s, t| (s.0 + t.0, s.1 + t.1));
    Ok(match kind {
        BoundKind::Trace => {
            (a / hbar.powi(3) + mu.powf(lit(1.5)) / hbar.powf(lit(1.5)) * c) / lambda
        }
        BoundKind::Count => (a + mu * hbar * c) / (hbar.powi(3) * lambda.sqrt()),
    })
}
