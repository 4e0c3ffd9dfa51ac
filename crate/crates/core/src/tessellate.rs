//! Cube tessellations, smooth partitions of unity and Dirichlet/IMS
//! bracketing of counting functions.

use rayon::prelude::*;

use crate::error::TessellateError;
use crate::grid::GridBox;
use crate::magop::{assemble, OperatorSpec};
use crate::num::{from_usize, lit, Real};
use crate::speccount::count_below;

/// One cell of a tessellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cube<T> {
    pub lower: [T; 3],
    pub upper: [T; 3],
}

impl<T: Real> Cube<T> {
    pub fn center(&self) -> [T; 3] {
        let h = lit::<T>(0.5);
        [
            (self.lower[0] + self.upper[0]) * h,
            (self.lower[1] + self.upper[1]) * h,
            (self.lower[2] + self.upper[2]) * h,
        ]
    }
}

/// Regular arrangement of congruent axis-parallel cubes of side `r`.
///
/// On an inactive grid axis the "cube" spans the full slab thickness, so the
/// same type serves 2D cross-sections.
#[derive(Clone, Debug, PartialEq)]
pub struct Tessellation<T> {
    origin: [T; 3],
    cell: [T; 3],
    counts: [usize; 3],
    side: T,
    remainder: T,
    axes: [bool; 3],
}

impl<T: Real> Tessellation<T> {
    /// Cubes `origin + [i, i+1) * cell` for `i < counts`.
    /// Axes whose cell length differs from `side` are treated as unsubdivided
    /// slabs.
    pub fn new(origin: [T; 3], side: T, cell: [T; 3], counts: [usize; 3]) -> Self {
        let axes = [0, 1, 2].map(|d| cell[d] == side);
        Self {
            origin,
            cell,
            counts,
            side,
            remainder: T::zero(),
            axes,
        }
    }

    pub fn side(&self) -> T {
        self.side
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of the region left uncovered by the cubes.
    pub fn remainder(&self) -> T {
        self.remainder
    }

    pub fn union_lower(&self) -> [T; 3] {
        self.origin
    }

    pub fn union_upper(&self) -> [T; 3] {
        let mut u = self.origin;
        for d in 0..3 {
            u[d] += self.cell[d] * from_usize(self.counts[d]);
        }
        u
    }

    pub fn cube(&self, k: usize) -> Cube<T> {
        let nx = self.counts[0];
        let ny = self.counts[1];
        let ijk = [k % nx, (k / nx) % ny, k / (nx * ny)];
        let mut lower = self.origin;
        let mut upper = self.origin;
        for d in 0..3 {
            lower[d] += self.cell[d] * from_usize(ijk[d]);
            upper[d] = lower[d] + self.cell[d];
        }
        Cube { lower, upper }
    }

    pub fn cubes(&self) -> impl Iterator<Item = Cube<T>> + '_ {
        (0..self.len()).map(move |k| self.cube(k))
    }

    /// Cube containing `x`: half-open cells, the last cell on each axis closed.
    pub fn locate(&self, x: [T; 3]) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for d in 0..3 {
            let tol = self.cell[d] * lit(1e-9);
            let s = (x[d] - self.origin[d] + tol) / self.cell[d];
            if s < T::zero() {
                return None;
            }
            let mut i = s.floor().to_usize()?;
            if i >= self.counts[d] {
                let end = self.origin[d] + self.cell[d] * from_usize(self.counts[d]);
                if (x[d] - end).abs() <= tol * lit(2.0) {
                    i = self.counts[d] - 1;
                } else {
                    return None;
                }
            }
            ijk[d] = i;
        }
        Some(ijk[0] + self.counts[0] * (ijk[1] + self.counts[1] * ijk[2]))
    }

    /// Cube owning each grid node (`None` outside the tessellated region).
    pub fn node_owners(&self, grid: &GridBox<T>) -> Vec<Option<usize>> {
        (0..grid.node_count())
            .map(|i| self.locate(grid.position(i)))
            .collect()
    }

    /// Active axes of a grid that the tessellation subdivides.
    pub fn is_subdivided(&self, axis: usize) -> bool {
        self.axes[axis]
    }

    fn active(&self, axis: usize) -> bool {
        self.axes[axis]
    }

    /// Signed distance from `x` to the boundary of cube `k`, measured over
    /// the subdivided axes (negative outside).
    pub fn depth_in(&self, k: usize, x: [T; 3]) -> T {
        let c = self.cube(k);
        let mut depth = T::infinity();
        for d in 0..3 {
            if !self.active(d) {
                continue;
            }
            depth = depth.min((x[d] - c.lower[d]).min(c.upper[d] - x[d]));
        }
        depth
    }
}

/// Splits `region` into the largest grid of cubes of side `r` anchored at the
/// lower corner; inactive axes are spanned whole.
pub fn tessellate_domain<T: Real>(
    region: &GridBox<T>,
    r: T,
) -> Result<Tessellation<T>, TessellateError> {
    let mut counts = [1usize; 3];
    let mut cell = [T::zero(); 3];
    for d in 0..3 {
        if region.is_active(d) {
            let m = (region.extent(d) / r + lit(1e-9)).floor();
            let m = m.to_usize().unwrap_or(0);
            if m == 0 || !(r > T::zero()) {
                return Err(TessellateError::RTooLarge(r.to_f64().unwrap_or(f64::NAN)));
            }
            counts[d] = m;
            cell[d] = r;
        } else {
            cell[d] = region.extent(d);
        }
    }
    let mut t = Tessellation::new(region.lower(), r, cell, counts);
    t.axes = [0, 1, 2].map(|d| region.is_active(d));
    let covered = (0..3)
        .map(|d| cell[d] * from_usize(counts[d]))
        .fold(T::one(), |a, b| a * b);
    t.remainder = (region.volume() - covered).max(T::zero());
    Ok(t)
}

/// Quintic smoothstep clamped to `[0, 1]`.
fn smoothstep<T: Real>(t: T) -> T {
    let t = t.max(T::zero()).min(T::one());
    t * t * t * (t * (t * lit(6.0) - lit(15.0)) + lit(10.0))
}

/// Partition `{psi_k}` with `sum psi_k^2 = 1`, `psi_0` living on the margin
/// set within `rho * r` of the cube boundaries and `psi_k` (k >= 1) supported
/// inside cube `k`.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity<T> {
    tess: Tessellation<T>,
    grid: GridBox<T>,
    rho: T,
    /// `values[k][node]`, `k = 0..=K`.
    values: Vec<Vec<T>>,
    c_pu: T,
    c_pu_discrete: T,
}

impl<T: Real> PartitionOfUnity<T> {
    pub fn margin(&self) -> T {
        self.rho * self.tess.side()
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn values(&self, k: usize) -> &[T] {
        &self.values[k]
    }

    pub fn functions(&self) -> usize {
        self.values.len()
    }

    /// Measured `max sum |grad psi_k|^2 * (rho r)^2` over the grid nodes.
    pub fn c_pu(&self) -> T {
        self.c_pu
    }

    /// Same constant from the lattice form
    /// `1/2 sum_{y~x} sum_k ((psi_k(x) - psi_k(y))/h)^2`, which is what the
    /// discrete localisation identity actually needs.
    pub fn c_pu_discrete(&self) -> T {
        self.c_pu_discrete
    }

    /// Constant used for the localisation penalty.
    pub fn penalty_constant(&self) -> T {
        self.c_pu.max(self.c_pu_discrete)
    }

    /// Largest `|sum_k psi_k^2 - 1|` over the grid.
    pub fn normalization_defect(&self) -> T {
        (0..self.grid.node_count())
            .map(|i| {
                let s: T = self.values.iter().map(|v| v[i] * v[i]).sum();
                (s - T::one()).abs()
            })
            .fold(T::zero(), T::max)
    }

    /// Evaluates every `psi_k` at an arbitrary point.
    pub fn evaluate(&self, x: [T; 3]) -> Vec<T> {
        raw_bumps(&self.tess, self.margin(), x, true)
    }
}

fn raw_bumps<T: Real>(tess: &Tessellation<T>, m: T, x: [T; 3], normalize: bool) -> Vec<T> {
    let k_count = tess.len();
    let mut eta = vec![T::zero(); k_count + 1];
    let quarter = m * lit(0.25);
    let half = m * lit(0.5);
    let mut depth = T::neg_infinity();
    for k in 0..k_count {
        let c = tess.cube(k);
        let mut prod = T::one();
        let mut dk = T::infinity();
        for d in 0..3 {
            if !tess.active(d) {
                continue;
            }
            let dist = (x[d] - c.lower[d]).min(c.upper[d] - x[d]);
            dk = dk.min(dist);
            prod *= smoothstep((dist - quarter) / half);
        }
        depth = depth.max(dk);
        eta[k + 1] = prod;
    }
    let depth = depth.max(T::zero());
    eta[0] = T::one() - smoothstep((depth - half) / half);
    if normalize {
        let s = eta.iter().map(|e| *e * *e).sum::<T>().sqrt();
        for e in eta.iter_mut() {
            *e /= s;
        }
    }
    eta
}

/// Builds the partition on `grid` and measures its gradient constant.
pub fn partition_of_unity<T: Real>(
    tess: &Tessellation<T>,
    rho: T,
    grid: &GridBox<T>,
) -> Result<PartitionOfUnity<T>, TessellateError> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(TessellateError::InvalidRho);
    }
    let m = rho * tess.side();
    let h = grid.min_spacing();
    let resolved = m / h;
    if resolved < lit(4.0 - 1e-9) {
        return Err(TessellateError::GridTooCoarseForMargin {
            margin: m.to_f64().unwrap_or(f64::NAN),
            nodes: resolved.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = grid.node_count();
    let per_node: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| raw_bumps(tess, m, grid.position(i), true))
        .collect();
    let k1 = tess.len() + 1;
    let mut values = vec![vec![T::zero(); n]; k1];
    for (i, v) in per_node.iter().enumerate() {
        for k in 0..k1 {
            values[k][i] = v[k];
        }
    }

    // continuum gradient by central differences of the closed-form bumps
    let step = m * lit(1e-4);
    let grad_max = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.position(i);
            let mut total = T::zero();
            for d in 0..3 {
                if !grid.is_active(d) {
                    continue;
                }
                let mut xp = x;
                let mut xm = x;
                xp[d] += step;
                xm[d] -= step;
                let fp = raw_bumps(tess, m, xp, true);
                let fm = raw_bumps(tess, m, xm, true);
                for k in 0..k1 {
                    let g = (fp[k] - fm[k]) / (step + step);
                    total += g * g;
                }
            }
            total
        })
        .reduce(|| T::zero(), T::max);

    // lattice version over nearest-neighbour edges
    let disc_max = (0..n)
        .into_par_iter()
        .map(|i| {
            let ijk = grid.ijk(i);
            let mut total = T::zero();
            for d in 0..3 {
                if !grid.is_active(d) {
                    continue;
                }
                let hd = grid.spacing(d);
                for dir in [-1isize, 1] {
                    let j = ijk[d] as isize + dir;
                    if j < 0 || j as usize >= grid.points()[d] {
                        continue;
                    }
                    let mut nb = ijk;
                    nb[d] = j as usize;
                    let jn = grid.index(nb);
                    for k in 0..k1 {
                        let g = (values[k][i] - values[k][jn]) / hd;
                        total += g * g;
                    }
                }
            }
            total * lit(0.5)
        })
        .reduce(|| T::zero(), T::max);

    Ok(PartitionOfUnity {
        tess: tess.clone(),
        grid: grid.clone(),
        rho,
        values,
        c_pu: grad_max * m * m,
        c_pu_discrete: disc_max * m * m,
    })
}

/// Two-sided estimate of `N(H + lambda)` on the full box.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketResult<T> {
    /// Sum of Dirichlet counts over the cubes.
    pub lower: usize,
    /// Count of the full operator (reported for checking the sandwich).
    pub full: usize,
    /// Localised count with the IMS penalty, cubes plus margin region.
    pub upper: usize,
    /// `C_pu * hbar^2 / (rho r)^2`.
    pub penalty: T,
    pub c_pu: T,
}

/// Dirichlet bracketing from below and IMS localisation from above.
///
/// The operator grid must have its cube faces on grid planes so that the
/// interior nodes of different cubes are never linked.
pub fn bracket_counts<T: Real>(
    spec: &OperatorSpec<T>,
    tess: &Tessellation<T>,
    rho: T,
    lambda: T,
) -> Result<BracketResult<T>, TessellateError> {
    let grid = spec.grid();
    check_alignment(grid, tess)?;
    let pu = partition_of_unity(tess, rho, grid)?;
    let op = assemble(spec)?;
    let tau = -lambda;
    let comps = op.components();

    let full = count_below(op.matrix(), tau)?.count;

    // interior nodes of each cube
    let tol = grid.min_spacing() * lit(1e-6);
    let mut cube_dofs: Vec<Vec<usize>> = vec![Vec::new(); tess.len()];
    for (block, &node) in op.dof_nodes().iter().enumerate() {
        let x = grid.position(node);
        if let Some(k) = tess.locate(x) {
            if tess.depth_in(k, x) > tol {
                for c in 0..comps {
                    cube_dofs[k].push(block * comps + c);
                }
            }
        }
    }

    let lower = cube_dofs
        .par_iter()
        .filter(|d| !d.is_empty())
        .map(|d| count_below(&op.matrix().principal_submatrix(d), tau).map(|c| c.count))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();

    let m = pu.margin();
    let c_pu = pu.penalty_constant();
    let penalty = c_pu * spec.hbar() * spec.hbar() / (m * m);
    let lo = tess.union_lower();
    let hi = tess.union_upper();
    let shift: Vec<T> = op
        .dof_nodes()
        .iter()
        .flat_map(|&node| {
            let x = grid.position(node);
            let mut dist2 = T::zero();
            for d in 0..3 {
                if !grid.is_active(d) {
                    continue;
                }
                let out = (lo[d] - x[d]).max(x[d] - hi[d]).max(T::zero());
                dist2 += out * out;
            }
            let p = if dist2.sqrt() < m { -penalty } else { T::zero() };
            std::iter::repeat(p).take(comps)
        })
        .collect();
    let lowered = op.matrix().with_diagonal_added(&shift);

    let mut margin_dofs = Vec::new();
    for (block, &node) in op.dof_nodes().iter().enumerate() {
        if pu.values(0)[node] != T::zero() {
            for c in 0..comps {
                margin_dofs.push(block * comps + c);
            }
        }
    }
    let mut sets: Vec<&Vec<usize>> = cube_dofs.iter().filter(|d| !d.is_empty()).collect();
    if !margin_dofs.is_empty() {
        sets.push(&margin_dofs);
    }
    let upper = sets
        .par_iter()
        .map(|d| count_below(&lowered.principal_submatrix(d), tau).map(|c| c.count))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();

    Ok(BracketResult {
        lower,
        full,
        upper,
        penalty,
        c_pu,
    })
}

fn check_alignment<T: Real>(grid: &GridBox<T>, tess: &Tessellation<T>) -> Result<(), TessellateError> {
    let lo = tess.union_lower();
    for d in 0..3 {
        if !grid.is_active(d) {
            continue;
        }
        let h = grid.spacing(d);
        for edge in [lo[d], lo[d] + tess.cell[d]] {
            let s = (edge - grid.lower()[d]) / h;
            if (s - s.round()).abs() > lit(1e-6) {
                return Err(TessellateError::NotAligned);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> GridBox<f64> {
        GridBox::<f64>::new([0.0; 3], [1.0; 3], [11, 11, 11]).unwrap()
    }

    #[test]
    fn unit_cube_halves() {
        let t = tessellate_domain(&unit_cube(), 0.5).unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.remainder().abs() < 1e-15);
    }

    #[test]
    fn leftover_is_reported() {
        let t = tessellate_domain(&unit_cube(), 0.3).unwrap();
        assert_eq!(t.len(), 27);
        assert!((t.remainder() - (1.0 - 0.729)).abs() < 1e-12);
        let u = t.union_upper();
        assert!((u[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn single_cube_and_too_large() {
        assert_eq!(tessellate_domain(&unit_cube(), 1.0).unwrap().len(), 1);
        assert!(matches!(
            tessellate_domain(&unit_cube(), 1.5),
            Err(TessellateError::RTooLarge(_))
        ));
    }

    #[test]
    fn locate_uses_half_open_cells() {
        let g = GridBox::<f64>::new([0.0; 3], [1.0, 1.0, 1.0], [5, 1, 1]).unwrap();
        let t = tessellate_domain(&g, 0.5).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.locate([0.5, 0.5, 0.5]), Some(1));
        assert_eq!(t.locate([1.0, 0.5, 0.5]), Some(1));
        assert_eq!(t.locate([0.0, 0.5, 0.5]), Some(0));
        assert_eq!(t.locate([1.2, 0.5, 0.5]), None);
    }

    #[test]
    fn partition_sums_to_one_and_localises() {
        let g = GridBox::<f64>::new([0.0; 3], [1.0, 1.0, 1.0], [41, 41, 1]).unwrap();
        let t = tessellate_domain(&g, 0.5).unwrap();
        let pu = partition_of_unity(&t, 0.4, &g).unwrap();
        assert!(pu.normalization_defect() <= 1e-12);
        // deep inside cube 0
        let i = g.index([10, 10, 0]);
        assert!((pu.values(1)[i] - 1.0).abs() < 1e-15);
        assert_eq!(pu.values(0)[i], 0.0);
        assert_eq!(pu.values(2)[i], 0.0);
        // psi_k vanishes on its cube boundary
        let j = g.index([20, 10, 0]);
        assert_eq!(pu.values(1)[j], 0.0);
        assert_eq!(pu.values(2)[j], 0.0);
        assert!(pu.c_pu().is_finite() && pu.c_pu() > 0.0);
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = GridBox::<f64>::new([0.0; 3], [1.0, 1.0, 1.0], [11, 11, 1]).unwrap();
        let t = tessellate_domain(&g, 0.5).unwrap();
        assert!(matches!(
            partition_of_unity(&t, 0.4, &g),
            Err(TessellateError::GridTooCoarseForMargin { .. })
        ));
    }
}
