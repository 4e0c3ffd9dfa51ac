//! Compressed sparse Hermitian matrices.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::num::{Cplx, Real};

/// Accumulates entries of a Hermitian matrix. Off-diagonal entries are always
/// inserted together with their conjugate mirror, so the result is exactly
/// conjugate-symmetric.
#[derive(Clone, Debug)]
pub struct HermitianBuilder<T> {
    dim: usize,
    entries: Vec<BTreeMap<usize, Cplx<T>>>,
}

impl<T: Real> HermitianBuilder<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![BTreeMap::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds a real value to the diagonal entry `(i, i)`.
    pub fn add_diag(&mut self, i: usize, v: T) {
        let e = self.entries[i].entry(i).or_insert_with(Complex::default);
        e.re += v;
    }

    /// Adds `v` at `(i, j)` and `conj(v)` at `(j, i)`; `i != j`.
    pub fn add_pair(&mut self, i: usize, j: usize, v: Cplx<T>) {
        debug_assert_ne!(i, j);
        *self.entries[i].entry(j).or_insert_with(Complex::default) += v;
        *self.entries[j].entry(i).or_insert_with(Complex::default) += v.conj();
    }

    pub fn build(self) -> SparseHermitian<T> {
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in self.entries {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseHermitian {
            dim: row_ptr.len() - 1,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Hermitian matrix in compressed sparse row form (both triangles stored).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Cplx<T>>,
}

impl<T: Real> SparseHermitian<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Cplx<T>)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b]
            .iter()
            .copied()
            .zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => Complex::default(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Maximum absolute row sum, an upper bound for the spectral radius.
    pub fn norm_inf(&self) -> T {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..self.dim {
            let mut d = T::zero();
            let mut r = T::zero();
            for (j, v) in self.row(i) {
                if j == i {
                    d = v.re;
                } else {
                    r += v.norm();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        if self.dim == 0 {
            (T::zero(), T::zero())
        } else {
            (lo, hi)
        }
    }

    /// Largest `|A_ij - conj(A_ji)|`; zero for every matrix built here.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .into_par_iter()
            .map(|i| {
                self.row(i)
                    .fold(Complex::default(), |acc, (j, v)| acc + v * x[j])
            })
            .collect()
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: T) -> Self {
        self.with_diagonal_added(&vec![shift; self.dim])
    }

    /// `self + diag(d)`.
    pub fn with_diagonal_added(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.dim);
        let mut b = HermitianBuilder::new(self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                if j == i {
                    b.add_diag(i, v.re);
                } else if j > i {
                    b.add_pair(i, j, v);
                }
            }
            b.add_diag(i, d[i]);
        }
        b.build()
    }

    /// Principal submatrix on the given (strictly increasing) index set.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut b = HermitianBuilder::new(keep.len());
        for (ni, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                let nj = map[j];
                if nj == usize::MAX {
                    continue;
                }
                if nj == ni {
                    b.add_diag(ni, v.re);
                } else if nj > ni {
                    b.add_pair(ni, nj, v);
                }
            }
        }
        b.build()
    }

    /// `self * self`, computed from the upper triangle and mirrored so the
    /// product stays exactly Hermitian.
    pub fn square(&self) -> Self {
        let n = self.dim;
        let rows: Vec<BTreeMap<usize, Cplx<T>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc: BTreeMap<usize, Cplx<T>> = BTreeMap::new();
                for (k, a) in self.row(i) {
                    for (j, b) in self.row(k) {
                        if j >= i {
                            *acc.entry(j).or_insert_with(Complex::default) += a * b;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut b = HermitianBuilder::new(n);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                if j == i {
                    b.add_diag(i, v.re);
                } else {
                    b.add_pair(i, j, v);
                }
            }
        }
        b.build()
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Cplx<T>> {
        let n = self.dim;
        let mut m = vec![Complex::default(); n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[i * n + j] = v;
            }
        }
        m
    }

    /// Builds from a dense row-major matrix, symmetrising from the lower triangle.
    pub fn from_dense_lower(n: usize, m: &[Cplx<T>]) -> Self {
        let mut b = HermitianBuilder::new(n);
        for i in 0..n {
            b.add_diag(i, m[i * n + i].re);
            for j in 0..i {
                let v = m[i * n + j];
                if v != Complex::default() {
                    b.add_pair(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn from_real_diagonal(d: &[T]) -> Self {
        let mut b = HermitianBuilder::new(d.len());
        for (i, &v) in d.iter().enumerate() {
            b.add_diag(i, v);
        }
        b.build()
    }

    /// Coordinate text export: one `row col re im` line per stored entry,
    /// preceded by a `# dim nnz` header.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# {} {}", self.dim, self.nnz())?;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                writeln!(
                    out,
                    "{} {} {:.17e} {:.17e}",
                    i,
                    j,
                    v.re.to_f64().unwrap_or(f64::NAN),
                    v.im.to_f64().unwrap_or(f64::NAN)
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseHermitian<f64> {
        let mut b = HermitianBuilder::new(3);
        b.add_diag(0, 2.0);
        b.add_diag(1, -1.0);
        b.add_diag(2, 0.5);
        b.add_pair(0, 1, Complex::new(0.3, -0.4));
        b.add_pair(1, 2, Complex::new(0.0, 1.0));
        b.build()
    }

    #[test]
    fn builder_is_exactly_hermitian() {
        let a = sample();
        assert_eq!(a.hermiticity_defect(), 0.0);
        assert_eq!(a.get(1, 0), Complex::new(0.3, 0.4));
        assert_eq!(a.bandwidth(), 1);
    }

    #[test]
    fn square_matches_dense_product() {
        let a = sample();
        let s = a.square();
        assert_eq!(s.hermiticity_defect(), 0.0);
        let d = a.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc: Complex<f64> = Complex::default();
                for k in 0..3 {
                    acc += d[i * 3 + k] * d[k * 3 + j];
                }
                assert!((acc - s.get(i, j)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn submatrix_and_shift() {
        let a = sample();
        let s = a.principal_submatrix(&[0, 2]);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.get(0, 1), Complex::default());
        assert_eq!(s.get(1, 1).re, 0.5);
        let t = a.shifted(1.0);
        assert_eq!(t.diagonal(), vec![3.0, 0.0, 1.5]);
    }

    #[test]
    fn coordinate_export_lists_entries() {
        let mut buf = Vec::new();
        sample().write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# 3 7\n"));
        assert_eq!(text.lines().count(), 8);
    }
}
