//! Hermitian factorizations used for inertia counting and shifted solves,
//! plus a dense eigenvalue backend.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::num::{lit, Cplx, Real};
use crate::sparse::SparseHermitian;

/// Signature of a Hermitian matrix as seen by a triangular factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Common interface of the two factorizations.
pub trait Factorization<T: Real> {
    fn inertia(&self) -> Inertia;
    /// Smallest pivot magnitude relative to the matrix scale used when
    /// factorizing; small values mean the shift sits on an eigenvalue.
    fn min_pivot(&self) -> T;
    fn solve(&self, b: &[Cplx<T>]) -> Vec<Cplx<T>>;
}

/// Unpivoted `L D L^H` of a banded Hermitian matrix (row-oriented,
/// `O(n * bw^2)` work, `O(n * bw)` storage).
#[derive(Clone, Debug)]
pub struct BandedLdl<T> {
    n: usize,
    bw: usize,
    /// `l[i * bw + (bw - (i - j))]` for `i - bw <= j < i`.
    l: Vec<Cplx<T>>,
    d: Vec<T>,
    growth: T,
}

impl<T: Real> BandedLdl<T> {
    /// Factorizes `a - shift * I`.
    pub fn factor(a: &SparseHermitian<T>, shift: T) -> Self {
        let n = a.dim();
        let bw = a.bandwidth();
        let mut l = vec![Complex::default(); n * bw.max(1)];
        let mut d = vec![T::zero(); n];
        let mut growth = T::zero();
        let bwm = bw.max(1);
        // scratch: row i of A below the diagonal, then of L * D
        let mut row = vec![Complex::<T>::default(); bwm];
        for i in 0..n {
            let start = i.saturating_sub(bw);
            for v in row.iter_mut() {
                *v = Complex::default();
            }
            let mut diag = T::zero();
            for (j, v) in a.row(i) {
                if j == i {
                    diag = v.re - shift;
                } else if j < i {
                    row[bw - (i - j)] = v;
                }
            }
            // u_j = L[i][j] * D[j]
            for j in start..i {
                let mut s = row[bw - (i - j)];
                let jstart = j.saturating_sub(bw).max(start);
                let li = &l[i * bwm..];
                let lj = &l[j * bwm..];
                for k in jstart..j {
                    s -= li[bw - (i - k)] * d[k] * lj[bw - (j - k)].conj();
                }
                let lij = s / d[j];
                l[i * bwm + bw - (i - j)] = lij;
                growth = growth.max(lij.norm());
            }
            let li = &l[i * bwm..];
            for k in start..i {
                diag -= li[bw - (i - k)].norm_sqr() * d[k];
            }
            d[i] = diag;
        }
        Self { n, bw, l, d, growth }
    }

    /// Largest multiplier magnitude; large values signal an unstable
    /// unpivoted elimination.
    pub fn growth(&self) -> T {
        self.growth
    }

    pub fn pivots(&self) -> &[T] {
        &self.d
    }

    fn lij(&self, i: usize, j: usize) -> Cplx<T> {
        self.l[i * self.bw.max(1) + self.bw - (i - j)]
    }
}

impl<T: Real> Factorization<T> for BandedLdl<T> {
    fn inertia(&self) -> Inertia {
        let mut s = Inertia::default();
        for &x in &self.d {
            if x < T::zero() {
                s.negative += 1;
            } else if x > T::zero() {
                s.positive += 1;
            } else {
                s.zero += 1;
            }
        }
        s
    }

    fn min_pivot(&self) -> T {
        self.d.iter().fold(T::infinity(), |a, x| a.min(x.abs()))
    }

    fn solve(&self, b: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            for j in i.saturating_sub(self.bw)..i {
                let t = self.lij(i, j) * x[j];
                x[i] -= t;
            }
        }
        for i in 0..n {
            x[i] = x[i] / self.d[i];
        }
        for i in (0..n).rev() {
            let hi = (i + self.bw + 1).min(n);
            for k in i + 1..hi {
                let t = self.lij(k, i).conj() * x[k];
                x[i] -= t;
            }
        }
        x
    }
}

#[derive(Clone, Copy, Debug)]
enum Block<T> {
    One(T),
    /// `[[d11, conj(d21)], [d21, d22]]`.
    Two(T, Cplx<T>, T),
}

/// Bunch–Kaufman `P A P^T = L D L^H` of a dense Hermitian matrix with
/// 1x1 and 2x2 pivots.
#[derive(Clone, Debug)]
pub struct BunchKaufman<T> {
    n: usize,
    /// Column-major lower triangle holding the multipliers.
    a: Vec<Cplx<T>>,
    /// `(start, block)` for each pivot.
    blocks: Vec<(usize, Block<T>)>,
    perm: Vec<usize>,
}

impl<T: Real> BunchKaufman<T> {
    /// Factorizes `a - shift * I`.
    pub fn factor(h: &SparseHermitian<T>, shift: T) -> Self {
        let n = h.dim();
        let mut a = vec![Complex::<T>::default(); n * n];
        for i in 0..n {
            for (j, v) in h.row(i) {
                if j <= i {
                    a[j * n + i] = v;
                }
            }
            a[i * n + i].re -= shift;
        }
        Self::factor_lower(n, a)
    }

    /// Factorizes a column-major array whose lower triangle holds the matrix.
    pub fn factor_lower(n: usize, mut a: Vec<Cplx<T>>) -> Self {
        let alpha = (T::one() + lit::<T>(17.0).sqrt()) / lit(8.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::new();
        let at = |i: usize, j: usize| i + j * n; // requires i >= j
        let mut k = 0;
        while k < n {
            let absakk = a[at(k, k)].re.abs();
            let (mut imax, mut colmax) = (k, T::zero());
            for i in k + 1..n {
                let v = a[at(i, k)].norm();
                if v > colmax {
                    colmax = v;
                    imax = i;
                }
            }
            let mut size = 1;
            let mut kp = k;
            if absakk.max(colmax) == T::zero() {
                // zero column: singular 1x1 pivot
            } else if absakk < alpha * colmax {
                let mut rowmax = T::zero();
                for j in k..n {
                    if j == imax {
                        continue;
                    }
                    let v = if j < imax { a[at(imax, j)] } else { a[at(j, imax)] };
                    rowmax = rowmax.max(v.norm());
                }
                if absakk * rowmax >= alpha * colmax * colmax {
                    // keep 1x1 at k
                } else if a[at(imax, imax)].re.abs() >= alpha * rowmax {
                    kp = imax;
                } else {
                    size = 2;
                    kp = imax;
                }
            }
            let kk = k + size - 1;
            if kp != kk {
                sym_swap(&mut a, n, k, kk, kp);
                perm.swap(kk, kp);
            }
            if size == 1 {
                let d = a[at(k, k)].re;
                if d != T::zero() {
                    let inv = T::one() / d;
                    for i in k + 1..n {
                        a[at(i, k)] = a[at(i, k)] * inv;
                    }
                    for j in k + 1..n {
                        let lj = a[at(j, k)].conj() * d;
                        if lj == Complex::default() {
                            continue;
                        }
                        let (head, tail) = a.split_at_mut(j * n);
                        let colk = &head[k * n..k * n + n];
                        let colj = &mut tail[..n];
                        for i in j..n {
                            colj[i] -= colk[i] * lj;
                        }
                    }
                }
                blocks.push((k, Block::One(d)));
            } else {
                let d11 = a[at(k, k)].re;
                let d22 = a[at(k + 1, k + 1)].re;
                let d21 = a[at(k + 1, k)];
                let det = d11 * d22 - d21.norm_sqr();
                // w -> l, keeping w for the update
                let mut w1 = vec![Complex::default(); n];
                let mut w2 = vec![Complex::default(); n];
                for i in k + 2..n {
                    w1[i] = a[at(i, k)];
                    w2[i] = a[at(i, k + 1)];
                    a[at(i, k)] = (w1[i] * d22 - w2[i] * d21) / det;
                    a[at(i, k + 1)] = (w2[i] * d11 - w1[i] * d21.conj()) / det;
                }
                for j in k + 2..n {
                    let l1 = a[at(j, k)].conj();
                    let l2 = a[at(j, k + 1)].conj();
                    for i in j..n {
                        let upd = w1[i] * l1 + w2[i] * l2;
                        a[at(i, j)] -= upd;
                    }
                }
                blocks.push((k, Block::Two(d11, d21, d22)));
            }
            k += size;
        }
        Self { n, a, blocks, perm }
    }
}

/// Symmetric interchange of rows/columns `p < q` (both `>= k`) in a
/// column-major lower-triangle Hermitian array, also swapping the already
/// computed multiplier rows in columns `< k`.
fn sym_swap<T: Real>(a: &mut [Cplx<T>], n: usize, k: usize, p: usize, q: usize) {
    let at = |i: usize, j: usize| i + j * n;
    let _ = k;
    for j in 0..p {
        a.swap(at(p, j), at(q, j));
    }
    a.swap(at(p, p), at(q, q));
    for i in p + 1..q {
        let t = a[at(i, p)];
        a[at(i, p)] = a[at(q, i)].conj();
        a[at(q, i)] = t.conj();
    }
    a[at(q, p)] = a[at(q, p)].conj();
    for i in q + 1..n {
        a.swap(at(i, p), at(i, q));
    }
}

impl<T: Real> Factorization<T> for BunchKaufman<T> {
    fn inertia(&self) -> Inertia {
        let mut s = Inertia::default();
        let mut add = |x: T| {
            if x < T::zero() {
                s.negative += 1;
            } else if x > T::zero() {
                s.positive += 1;
            } else {
                s.zero += 1;
            }
        };
        for (_, b) in &self.blocks {
            match *b {
                Block::One(d) => add(d),
                Block::Two(d11, d21, d22) => {
                    let det = d11 * d22 - d21.norm_sqr();
                    if det < T::zero() {
                        add(-T::one());
                        add(T::one());
                    } else if det > T::zero() {
                        add(d11 + d22);
                        add(d11 + d22);
                    } else {
                        add(T::zero());
                        add(d11 + d22);
                    }
                }
            }
        }
        s
    }

    fn min_pivot(&self) -> T {
        let mut m = T::infinity();
        for (_, b) in &self.blocks {
            match *b {
                Block::One(d) => m = m.min(d.abs()),
                Block::Two(d11, d21, d22) => {
                    let tr = (d11 + d22) * lit(0.5);
                    let r = (((d11 - d22) * lit(0.5)).powi(2) + d21.norm_sqr()).sqrt();
                    m = m.min((tr - r).abs()).min((tr + r).abs());
                }
            }
        }
        m
    }

    fn solve(&self, b: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let n = self.n;
        let at = |i: usize, j: usize| i + j * n;
        let mut x: Vec<Cplx<T>> = (0..n).map(|i| b[self.perm[i]]).collect();
        // L y = P b
        for &(k, blk) in &self.blocks {
            let cols = match blk {
                Block::One(_) => k..k + 1,
                Block::Two(..) => k..k + 2,
            };
            let first = cols.end;
            for c in cols {
                let xc = x[c];
                for i in first..n {
                    x[i] -= self.a[at(i, c)] * xc;
                }
            }
        }
        // D z = y
        for &(k, blk) in &self.blocks {
            match blk {
                Block::One(d) => x[k] = x[k] / d,
                Block::Two(d11, d21, d22) => {
                    let det = d11 * d22 - d21.norm_sqr();
                    let (y1, y2) = (x[k], x[k + 1]);
                    x[k] = (y1 * d22 - y2 * d21.conj()) / det;
                    x[k + 1] = (y2 * d11 - y1 * d21) / det;
                }
            }
        }
        // L^H w = z
        for &(k, blk) in self.blocks.iter().rev() {
            let cols = match blk {
                Block::One(_) => k..k + 1,
                Block::Two(..) => k..k + 2,
            };
            let first = cols.end;
            for c in cols {
                let mut s = x[c];
                for i in first..n {
                    s -= self.a[at(i, c)].conj() * x[i];
                }
                x[c] = s;
            }
        }
        let mut out = vec![Complex::default(); n];
        for i in 0..n {
            out[self.perm[i]] = x[i];
        }
        out
    }
}

/// All eigenvalues, ascending, from a dense Hermitian eigensolver in double
/// precision.
pub fn dense_eigenvalues<T: Real>(h: &SparseHermitian<T>) -> Vec<T> {
    let n = h.dim();
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for (j, v) in h.row(i) {
            m[(i, j)] = Complex::new(
                v.re.to_f64().unwrap_or(f64::NAN),
                v.im.to_f64().unwrap_or(f64::NAN),
            );
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev.into_iter().map(lit).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::HermitianBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, band: usize, seed: u64) -> SparseHermitian<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = HermitianBuilder::new(n);
        for i in 0..n {
            b.add_diag(i, rng.gen_range(-2.0..2.0));
            for j in i + 1..(i + band + 1).min(n) {
                b.add_pair(i, j, Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        b.build()
    }

    fn residual(h: &SparseHermitian<f64>, shift: f64, x: &[Cplx<f64>], b: &[Cplx<f64>]) -> f64 {
        let y = h.matvec(x);
        y.iter()
            .zip(x)
            .zip(b)
            .map(|((y, x), b)| (y - x * shift - b).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn bunch_kaufman_inertia_and_solve() {
        for seed in 0..5 {
            let h = random_hermitian(40, 40, seed);
            let ev = dense_eigenvalues(&h);
            for shift in [-1.0, 0.1, 0.7] {
                let f = BunchKaufman::factor(&h, shift);
                let want = ev.iter().filter(|&&e| e < shift).count();
                assert_eq!(f.inertia().negative, want);
                let b: Vec<Cplx<f64>> = (0..40).map(|i| Complex::new(i as f64, 1.0)).collect();
                let x = f.solve(&b);
                assert!(residual(&h, shift, &x, &b) < 1e-8);
            }
        }
    }

    #[test]
    fn banded_inertia_and_solve() {
        let h = random_hermitian(60, 3, 9);
        let ev = dense_eigenvalues(&h);
        let shift = 0.33;
        let f = BandedLdl::factor(&h, shift);
        assert_eq!(f.inertia().negative, ev.iter().filter(|&&e| e < shift).count());
        let b: Vec<Cplx<f64>> = (0..60).map(|i| Complex::new(1.0, i as f64 * 0.1)).collect();
        let x = f.solve(&b);
        assert!(residual(&h, shift, &x, &b) < 1e-7);
    }

    #[test]
    fn two_by_two_pivot_needed() {
        // zero diagonal forces a 2x2 block
        let mut b = HermitianBuilder::new(2);
        b.add_pair(0, 1, Complex::new(0.0, 2.0));
        let h = b.build();
        let f = BunchKaufman::factor(&h, 0.0);
        assert_eq!(f.inertia(), Inertia { negative: 1, zero: 0, positive: 1 });
    }
}
