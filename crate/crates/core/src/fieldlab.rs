//! Gauges, piecewise-constant approximants and moduli of continuity.

use rayon::prelude::*;

use crate::error::FieldError;
use crate::grid::{interpolate, GridBox, ScalarField, VectorField};
use crate::num::{lit, Real};
use crate::tessellate::Tessellation;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuityModulus<T> {
    pub r: T,
    pub sigma: T,
}

/// Central-difference derivative of `values` along `axis` at an interior
/// node; zero on inactive axes and at the ends of the axis.
fn central<T: Real>(grid: &GridBox<T>, values: &[T], ijk: [usize; 3], axis: usize) -> T {
    let n = grid.points()[axis];
    if n < 3 || ijk[axis] == 0 || ijk[axis] + 1 == n {
        return T::zero();
    }
    let mut p = ijk;
    let mut m = ijk;
    p[axis] += 1;
    m[axis] -= 1;
    (values[grid.index(p)] - values[grid.index(m)]) / (grid.spacing(axis) + grid.spacing(axis))
}

fn is_interior<T: Real>(grid: &GridBox<T>, i: usize) -> bool {
    !grid.is_boundary(i)
}

/// `max |div_h B| * h_min / max |B|` over interior nodes (0 for `B = 0`).
pub fn divergence_defect<T: Real>(b: &VectorField<T>) -> T {
    let g = b.grid();
    let scale = (0..g.node_count()).map(|i| b.norm_at(i)).fold(T::zero(), T::max);
    if scale == T::zero() {
        return T::zero();
    }
    let worst = (0..g.node_count())
        .filter(|&i| is_interior(g, i))
        .map(|i| {
            let ijk = g.ijk(i);
            (0..3)
                .map(|d| central(g, b.component(d), ijk, d))
                .fold(T::zero(), |a, c| a + c)
                .abs()
        })
        .fold(T::zero(), T::max);
    worst * g.min_spacing() / scale
}

/// Central-difference curl; zero on boundary nodes.
pub fn discrete_curl<T: Real>(a: &VectorField<T>) -> VectorField<T> {
    let g = a.grid();
    let mut out = [
        vec![T::zero(); g.node_count()],
        vec![T::zero(); g.node_count()],
        vec![T::zero(); g.node_count()],
    ];
    for i in 0..g.node_count() {
        if !is_interior(g, i) {
            continue;
        }
        let ijk = g.ijk(i);
        let d = |comp: usize, axis: usize| central(g, a.component(comp), ijk, axis);
        out[0][i] = d(2, 1) - d(1, 2);
        out[1][i] = d(0, 2) - d(2, 0);
        out[2][i] = d(1, 0) - d(0, 1);
    }
    VectorField::new(g.clone(), out).expect("same grid")
}

/// Largest `|curl_h a - B|` over interior nodes.
pub fn curl_residual<T: Real>(a: &VectorField<T>, b: &VectorField<T>) -> T {
    let c = discrete_curl(a);
    let g = a.grid();
    (0..g.node_count())
        .filter(|&i| is_interior(g, i))
        .map(|i| {
            let (x, y) = (c.at(i), b.at(i));
            ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
        })
        .fold(T::zero(), T::max)
}

/// `int_from^to f(p with p[axis] = t) dt` for the multilinear interpolant,
/// trapezoid on each piece between grid planes (exact for the interpolant).
fn line_integral<T: Real>(grid: &GridBox<T>, values: &[T], p: [T; 3], axis: usize, from: T, to: T) -> T {
    if from == to {
        return T::zero();
    }
    let (lo, hi, sign) = if from < to { (from, to, T::one()) } else { (to, from, -T::one()) };
    let mut knots = vec![lo];
    if grid.is_active(axis) {
        for j in 0..grid.points()[axis] {
            let c = grid.coord(axis, j);
            if c > lo && c < hi {
                knots.push(c);
            }
        }
    }
    knots.push(hi);
    let eval = |t: T| {
        let mut q = p;
        q[axis] = t;
        interpolate(grid, values, q)
    };
    let mut acc = T::zero();
    let mut prev = eval(knots[0]);
    for w in knots.windows(2) {
        let next = eval(w[1]);
        acc += (w[1] - w[0]) * (prev + next) * lit(0.5);
        prev = next;
    }
    acc * sign
}

/// Gauge of the construction in the appendix at a single point:
/// `a1 = -1/2 int_{c2}^{x2} B3(x1,t,c3) dt + int_{c3}^{x3} B2(x1,x2,t) dt`,
/// `a2 =  1/2 int_{c1}^{x1} B3(t,x2,c3) dt - int_{c3}^{x3} B1(x1,x2,t) dt`,
/// `a3 = 0`.
fn gauge_at<T: Real>(b: &VectorField<T>, c: [T; 3], x: [T; 3]) -> [T; 3] {
    let g = b.grid();
    let half = lit::<T>(0.5);
    let a1 = -half * line_integral(g, b.component(2), [x[0], x[1], c[2]], 1, c[1], x[1])
        + line_integral(g, b.component(1), x, 2, c[2], x[2]);
    let a2 = half * line_integral(g, b.component(2), [x[0], x[1], c[2]], 0, c[0], x[0])
        - line_integral(g, b.component(0), x, 2, c[2], x[2]);
    [a1, a2, T::zero()]
}

/// Vector potential with `curl a = B` built from line integrals about
/// `center`. Rejects fields whose relative discrete divergence exceeds `tol`.
pub fn gauge_from_field<T: Real>(
    b: &VectorField<T>,
    center: [T; 3],
    tol: T,
) -> Result<VectorField<T>, FieldError> {
    let defect = divergence_defect(b);
    if defect > tol {
        return Err(FieldError::DivergenceTooLarge(defect.to_f64().unwrap_or(f64::NAN)));
    }
    let g = b.grid();
    let vals: Vec<[T; 3]> = (0..g.node_count())
        .into_par_iter()
        .map(|i| gauge_at(b, center, g.position(i)))
        .collect();
    Ok(split(g, &vals))
}

fn split<T: Real>(g: &GridBox<T>, vals: &[[T; 3]]) -> VectorField<T> {
    let comps = [0, 1, 2].map(|d| vals.iter().map(|v| v[d]).collect::<Vec<T>>());
    VectorField::new(g.clone(), comps).expect("node count matches")
}

/// Gauge built cube by cube, each about its own center. This is the `a`
/// that the per-cube comparison with the linear gauge refers to.
pub fn cubewise_gauge<T: Real>(
    b: &VectorField<T>,
    tess: &Tessellation<T>,
) -> Result<VectorField<T>, FieldError> {
    let g = b.grid();
    let owners = tess.node_owners(g);
    let vals: Vec<[T; 3]> = (0..g.node_count())
        .into_par_iter()
        .map(|i| match owners[i] {
            Some(k) => gauge_at(b, tess.cube(k).center(), g.position(i)),
            None => [T::zero(); 3],
        })
        .collect();
    Ok(split(g, &vals))
}

fn check_inside<T: Real>(grid: &GridBox<T>, tess: &Tessellation<T>) -> Result<(), FieldError> {
    for (k, c) in tess.cubes().enumerate() {
        if !grid.contains(c.lower) || !grid.contains(c.upper) {
            return Err(FieldError::CubeOutsideGrid(k));
        }
    }
    Ok(())
}

/// Fields that can be frozen to their cube-center values.
pub trait PiecewiseConstant: Sized {
    type Scalar: Real;
    fn piecewise_constant(&self, tess: &Tessellation<Self::Scalar>) -> Result<Self, FieldError>;
}

impl<T: Real> PiecewiseConstant for ScalarField<T> {
    type Scalar = T;
    fn piecewise_constant(&self, tess: &Tessellation<T>) -> Result<Self, FieldError> {
        let g = self.grid();
        check_inside(g, tess)?;
        let centers: Vec<T> = tess.cubes().map(|c| self.interpolate(c.center())).collect();
        let owners = tess.node_owners(g);
        let vals = owners
            .iter()
            .map(|o| o.map_or(T::zero(), |k| centers[k]))
            .collect();
        ScalarField::new(g.clone(), vals)
    }
}

impl<T: Real> PiecewiseConstant for VectorField<T> {
    type Scalar = T;
    fn piecewise_constant(&self, tess: &Tessellation<T>) -> Result<Self, FieldError> {
        let g = self.grid();
        check_inside(g, tess)?;
        let centers: Vec<[T; 3]> = tess.cubes().map(|c| self.interpolate(c.center())).collect();
        let owners = tess.node_owners(g);
        let vals: Vec<[T; 3]> = owners
            .iter()
            .map(|o| o.map_or([T::zero(); 3], |k| centers[k]))
            .collect();
        Ok(split(g, &vals))
    }
}

/// `B(x_k)` on each cube `Q_k`, zero outside.
pub fn piecewise_constant<F: PiecewiseConstant>(
    field: &F,
    tess: &Tessellation<F::Scalar>,
) -> Result<F, FieldError> {
    field.piecewise_constant(tess)
}

/// Linear gauge of a cube-wise constant field, about each cube center:
/// `a1 = -1/2 B3 (x2 - c2) + B2 (x3 - c3)`, `a2 = 1/2 B3 (x1 - c1) - B1 (x3 - c3)`.
pub fn linear_gauge<T: Real>(
    b_o: &VectorField<T>,
    tess: &Tessellation<T>,
) -> Result<VectorField<T>, FieldError> {
    let g = b_o.grid();
    check_inside(g, tess)?;
    let owners = tess.node_owners(g);
    let mut value: Vec<Option<[T; 3]>> = vec![None; tess.len()];
    for (i, o) in owners.iter().enumerate() {
        let Some(k) = *o else { continue };
        let v = b_o.at(i);
        match value[k] {
            None => value[k] = Some(v),
            Some(w) => {
                let scale = T::one().max(w.iter().fold(T::zero(), |a, c| a.max(c.abs())));
                if (0..3).any(|d| (v[d] - w[d]).abs() > scale * lit(1e-12)) {
                    return Err(FieldError::NotPiecewiseConstant(k));
                }
            }
        }
    }
    let half = lit::<T>(0.5);
    let vals: Vec<[T; 3]> = (0..g.node_count())
        .map(|i| {
            let Some(k) = owners[i] else { return [T::zero(); 3] };
            let b = value[k].unwrap_or([T::zero(); 3]);
            let c = tess.cube(k).center();
            let x = g.position(i);
            [
                -half * b[2] * (x[1] - c[1]) + b[1] * (x[2] - c[2]),
                half * b[2] * (x[0] - c[0]) - b[0] * (x[2] - c[2]),
                T::zero(),
            ]
        })
        .collect();
    Ok(split(g, &vals))
}

/// `sigma_r = max_{|x - y| < r} |B(x) - B(y)|` over grid node pairs.
pub fn modulus_of_continuity<T: Real>(
    b: &VectorField<T>,
    r: T,
) -> Result<ContinuityModulus<T>, FieldError> {
    if !(r > T::zero()) {
        return Err(FieldError::NonpositiveRadius);
    }
    let g = b.grid();
    let pts = g.points();
    // index-space reach of the ball on each axis
    let reach = [0, 1, 2].map(|d| {
        if !g.is_active(d) {
            0
        } else {
            (r / g.spacing(d)).ceil().to_usize().unwrap_or(0).min(pts[d] - 1)
        }
    });
    let r2 = r * r;
    let sigma = (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let ijk = g.ijk(i);
            let x = g.position(i);
            let bi = b.at(i);
            let mut best = T::zero();
            let lo = [0, 1, 2].map(|d| ijk[d].saturating_sub(reach[d]));
            let hi = [0, 1, 2].map(|d| (ijk[d] + reach[d]).min(pts[d] - 1));
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for l in lo[0]..=hi[0] {
                        let jdx = g.index([l, j, k]);
                        if jdx <= i {
                            continue;
                        }
                        let y = g.position(jdx);
                        let dist2 = (0..3)
                            .filter(|&d| g.is_active(d))
                            .map(|d| (x[d] - y[d]).powi(2))
                            .fold(T::zero(), |a, c| a + c);
                        if dist2 >= r2 {
                            continue;
                        }
                        let bj = b.at(jdx);
                        let diff = ((bi[0] - bj[0]).powi(2)
                            + (bi[1] - bj[1]).powi(2)
                            + (bi[2] - bj[2]).powi(2))
                        .sqrt();
                        best = best.max(diff);
                    }
                }
            }
            best
        })
        .reduce(|| T::zero(), T::max);
    Ok(ContinuityModulus { r, sigma })
}

/// Per-cube `max |a - a_lin|` over the nodes owned by each cube.
pub fn gauge_gap<T: Real>(
    a: &VectorField<T>,
    a_lin: &VectorField<T>,
    tess: &Tessellation<T>,
) -> Result<Vec<T>, FieldError> {
    if !a.grid().same_as(a_lin.grid()) {
        return Err(FieldError::GridMismatch);
    }
    let g = a.grid();
    let mut gaps = vec![T::zero(); tess.len()];
    for (i, o) in tess.node_owners(g).into_iter().enumerate() {
        let Some(k) = o else { continue };
        let (u, v) = (a.at(i), a_lin.at(i));
        let d = ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2)).sqrt();
        gaps[k] = gaps[k].max(d);
    }
    Ok(gaps)
}

/// Smallest `C` with `gap_k <= C r sigma_r` for every cube (0 when
/// `sigma_r = 0`).
pub fn fitted_gauge_constant<T: Real>(gaps: &[T], r: T, sigma: T) -> T {
    let denom = r * sigma;
    if denom == T::zero() {
        return T::zero();
    }
    gaps.iter().fold(T::zero(), |a, g| a.max(*g / denom))
}
