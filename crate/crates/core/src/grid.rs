//! Axis-aligned grids and the scalar/vector samples that live on them.
//!
//! Nodes are stored x-fastest: `index = i + nx * (j + ny * k)`. An axis with a
//! single point is *inactive*: its node sits at the middle of the extent and
//! quadrature treats the extent as a slab thickness.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::FieldError;
use crate::num::{from_usize, lit, Real};

/// Computational box with a tensor grid of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridBox<T> {
    lower: [T; 3],
    upper: [T; 3],
    points: [usize; 3],
}

impl<T: Real> GridBox<T> {
    pub fn new(lower: [T; 3], upper: [T; 3], points: [usize; 3]) -> Result<Self, FieldError> {
        for d in 0..3 {
            if !(upper[d] > lower[d]) || !lower[d].is_finite() || !upper[d].is_finite() {
                return Err(FieldError::InvalidGrid(format!(
                    "axis {d}: upper must exceed lower"
                )));
            }
            if points[d] == 0 || points[d] == 2 {
                return Err(FieldError::InvalidGrid(format!(
                    "axis {d}: need 1 (inactive) or at least 3 points, got {}",
                    points[d]
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            points,
        })
    }

    /// Grid for a periodic cell `[0, T_d)` with `points[d]` nodes per axis and
    /// spacing `T_d / points[d]` (the node at `T_d` is identified with 0).
    pub fn periodic(periods: [T; 3], points: [usize; 3]) -> Result<Self, FieldError> {
        let mut upper = [T::zero(); 3];
        for d in 0..3 {
            if points[d] == 1 {
                upper[d] = periods[d];
            } else {
                upper[d] = periods[d] - periods[d] / from_usize(points[d]);
            }
        }
        Self::new([T::zero(); 3], upper, points)
    }

    pub fn lower(&self) -> [T; 3] {
        self.lower
    }

    pub fn upper(&self) -> [T; 3] {
        self.upper
    }

    pub fn points(&self) -> [usize; 3] {
        self.points
    }

    pub fn is_active(&self, axis: usize) -> bool {
        self.points[axis] > 1
    }

    pub fn active_axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(move |&d| self.is_active(d))
    }

    pub fn extent(&self, axis: usize) -> T {
        self.upper[axis] - self.lower[axis]
    }

    /// Node spacing; for an inactive axis this is the slab thickness.
    pub fn spacing(&self, axis: usize) -> T {
        if self.is_active(axis) {
            self.extent(axis) / from_usize(self.points[axis] - 1)
        } else {
            self.extent(axis)
        }
    }

    pub fn min_spacing(&self) -> T {
        self.active_axes()
            .map(|d| self.spacing(d))
            .fold(T::infinity(), T::min)
    }

    pub fn node_count(&self) -> usize {
        self.points.iter().product()
    }

    pub fn volume(&self) -> T {
        (0..3).map(|d| self.extent(d)).fold(T::one(), |a, b| a * b)
    }

    pub fn diameter(&self) -> T {
        (0..3)
            .filter(|&d| self.is_active(d))
            .map(|d| self.extent(d) * self.extent(d))
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.points[0] * (ijk[1] + self.points[1] * ijk[2])
    }

    #[inline]
    pub fn ijk(&self, index: usize) -> [usize; 3] {
        let nx = self.points[0];
        let ny = self.points[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Coordinate of node `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> T {
        if self.is_active(axis) {
            self.lower[axis] + self.spacing(axis) * from_usize(i)
        } else {
            (self.lower[axis] + self.upper[axis]) * lit(0.5)
        }
    }

    #[inline]
    pub fn position(&self, index: usize) -> [T; 3] {
        let ijk = self.ijk(index);
        [
            self.coord(0, ijk[0]),
            self.coord(1, ijk[1]),
            self.coord(2, ijk[2]),
        ]
    }

    /// True when the node lies on the boundary of an active axis.
    pub fn is_boundary(&self, index: usize) -> bool {
        let ijk = self.ijk(index);
        (0..3).any(|d| self.is_active(d) && (ijk[d] == 0 || ijk[d] + 1 == self.points[d]))
    }

    /// Length of the dual cell of node `i` along `axis` intersected with
    /// `[lo, hi]`.
    pub fn dual_overlap(&self, axis: usize, i: usize, lo: T, hi: T) -> T {
        let (a, b) = if self.is_active(axis) {
            let h = self.spacing(axis);
            let x = self.coord(axis, i);
            let half = h * lit(0.5);
            (
                (x - half).max(self.lower[axis]),
                (x + half).min(self.upper[axis]),
            )
        } else {
            (self.lower[axis], self.upper[axis])
        };
        let a = a.max(lo);
        let b = b.min(hi);
        if b > a {
            b - a
        } else {
            T::zero()
        }
    }

    /// Quadrature weight of a node: volume of its dual cell clipped to the box.
    pub fn node_weight(&self, index: usize) -> T {
        self.node_weight_in(index, self.lower, self.upper)
    }

    /// Dual-cell volume of a node clipped to the box `[lo, hi]`.
    pub fn node_weight_in(&self, index: usize, lo: [T; 3], hi: [T; 3]) -> T {
        let ijk = self.ijk(index);
        let mut w = T::one();
        for d in 0..3 {
            w *= self.dual_overlap(d, ijk[d], lo[d], hi[d]);
            if w == T::zero() {
                break;
            }
        }
        w
    }

    /// Whether `x` lies inside the closed box (inactive axes ignored).
    pub fn contains(&self, x: [T; 3]) -> bool {
        let tol = self.min_spacing() * lit(1e-9);
        (0..3).all(|d| {
            !self.is_active(d) || (x[d] >= self.lower[d] - tol && x[d] <= self.upper[d] + tol)
        })
    }

    /// Header line of the column text format.
    pub fn header(&self) -> String {
        let mut s = String::from("# grid");
        for n in self.points {
            let _ = write!(s, " {n}");
        }
        for v in self.lower.iter().chain(self.upper.iter()) {
            let _ = write!(s, " {}", fmt_real(*v));
        }
        s
    }

    pub fn parse_header(line: &str) -> Result<Self, FieldError> {
        let mut it = line.split_whitespace();
        if it.next() != Some("#") || it.next() != Some("grid") {
            return Err(FieldError::Format("expected '# grid' header".into()));
        }
        let toks: Vec<&str> = it.collect();
        if toks.len() != 9 {
            return Err(FieldError::Format(format!(
                "header needs 9 numbers, found {}",
                toks.len()
            )));
        }
        let mut points = [0usize; 3];
        for d in 0..3 {
            points[d] = toks[d]
                .parse()
                .map_err(|_| FieldError::Format(format!("bad point count '{}'", toks[d])))?;
        }
        let mut nums = [T::zero(); 6];
        for (k, t) in toks[3..].iter().enumerate() {
            nums[k] = parse_real(t)?;
        }
        Self::new(
            [nums[0], nums[1], nums[2]],
            [nums[3], nums[4], nums[5]],
            points,
        )
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}

fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.17e}", v.to_f64().unwrap_or(f64::NAN))
}

fn parse_real<T: Real>(s: &str) -> Result<T, FieldError> {
    let v: f64 = s
        .parse()
        .map_err(|_| FieldError::Format(format!("bad number '{s}'")))?;
    T::from_f64(v).ok_or_else(|| FieldError::Format(format!("unrepresentable '{s}'")))
}

/// Scalar samples (potentials, field magnitudes) on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: GridBox<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: GridBox<T>, values: Vec<T>) -> Result<Self, FieldError> {
        if values.len() != grid.node_count() {
            return Err(FieldError::LengthMismatch {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &GridBox<T>, f: impl Fn([T; 3]) -> T) -> Result<Self, FieldError> {
        let values = (0..grid.node_count()).map(|i| f(grid.position(i))).collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &GridBox<T>, c: T) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.node_count()],
        }
    }

    pub fn grid(&self) -> &GridBox<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, index: usize) -> T {
        self.values[index]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Multilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: [T; 3]) -> T {
        interpolate(&self.grid, &self.values, x)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.grid.header())?;
        for v in &self.values {
            writeln!(out, "{}", fmt_real(*v))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self, FieldError> {
        let (grid, rows) = read_columns::<T, R>(input, 1)?;
        Self::new(grid, rows.into_iter().map(|r| r[0]).collect())
    }
}

/// Three-component samples (magnetic fields, vector potentials).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    grid: GridBox<T>,
    comps: [Vec<T>; 3],
}

impl<T: Real> VectorField<T> {
    pub fn new(grid: GridBox<T>, comps: [Vec<T>; 3]) -> Result<Self, FieldError> {
        for c in &comps {
            if c.len() != grid.node_count() {
                return Err(FieldError::LengthMismatch {
                    expected: grid.node_count(),
                    found: c.len(),
                });
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(FieldError::NonFinite(i));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn from_fn(grid: &GridBox<T>, f: impl Fn([T; 3]) -> [T; 3]) -> Result<Self, FieldError> {
        let n = grid.node_count();
        let mut comps = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
        for i in 0..n {
            let v = f(grid.position(i));
            for d in 0..3 {
                comps[d][i] = v[d];
            }
        }
        Self::new(grid.clone(), comps)
    }

    pub fn zeros(grid: &GridBox<T>) -> Self {
        let n = grid.node_count();
        Self {
            grid: grid.clone(),
            comps: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]],
        }
    }

    pub fn constant(grid: &GridBox<T>, v: [T; 3]) -> Self {
        let n = grid.node_count();
        Self {
            grid: grid.clone(),
            comps: [vec![v[0]; n], vec![v[1]; n], vec![v[2]; n]],
        }
    }

    pub fn grid(&self) -> &GridBox<T> {
        &self.grid
    }

    pub fn component(&self, d: usize) -> &[T] {
        &self.comps[d]
    }

    pub fn at(&self, index: usize) -> [T; 3] {
        [
            self.comps[0][index],
            self.comps[1][index],
            self.comps[2][index],
        ]
    }

    pub fn norm_at(&self, index: usize) -> T {
        let v = self.at(index);
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    pub fn magnitude(&self) -> ScalarField<T> {
        ScalarField {
            grid: self.grid.clone(),
            values: (0..self.grid.node_count())
                .map(|i| self.norm_at(i))
                .collect(),
        }
    }

    pub fn interpolate(&self, x: [T; 3]) -> [T; 3] {
        [
            interpolate(&self.grid, &self.comps[0], x),
            interpolate(&self.grid, &self.comps[1], x),
            interpolate(&self.grid, &self.comps[2], x),
        ]
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.grid.header())?;
        for i in 0..self.grid.node_count() {
            let v = self.at(i);
            writeln!(
                out,
                "{} {} {}",
                fmt_real(v[0]),
                fmt_real(v[1]),
                fmt_real(v[2])
            )?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self, FieldError> {
        let (grid, rows) = read_columns::<T, R>(input, 3)?;
        let n = rows.len();
        let mut comps = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
        for (i, r) in rows.into_iter().enumerate() {
            for d in 0..3 {
                comps[d][i] = r[d];
            }
        }
        Self::new(grid, comps)
    }
}

fn read_columns<T: Real, R: BufRead>(
    input: R,
    width: usize,
) -> Result<(GridBox<T>, Vec<Vec<T>>), FieldError> {
    let mut lines = input.lines();
    let header = loop {
        match lines.next() {
            Some(l) => {
                let l = l.map_err(|e| FieldError::Format(e.to_string()))?;
                if !l.trim().is_empty() {
                    break l;
                }
            }
            None => return Err(FieldError::Format("empty input".into())),
        }
    };
    let grid = GridBox::<T>::parse_header(&header)?;
    let mut rows = Vec::with_capacity(grid.node_count());
    for l in lines {
        let l = l.map_err(|e| FieldError::Format(e.to_string()))?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split_whitespace()
            .map(parse_real::<T>)
            .collect::<Result<Vec<T>, _>>()?;
        if row.len() != width {
            return Err(FieldError::Format(format!(
                "expected {width} column(s), found {}",
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok((grid, rows))
}

/// Multilinear interpolation of node values; zero outside the closed box.
pub(crate) fn interpolate<T: Real>(grid: &GridBox<T>, values: &[T], x: [T; 3]) -> T {
    let mut base = [0usize; 3];
    let mut frac = [T::zero(); 3];
    for d in 0..3 {
        if !grid.is_active(d) {
            continue;
        }
        let h = grid.spacing(d);
        let s = (x[d] - grid.lower[d]) / h;
        let n = grid.points[d];
        let tol = lit::<T>(1e-9);
        if s < -tol || s > from_usize::<T>(n - 1) + tol {
            return T::zero();
        }
        let s = s.max(T::zero()).min(from_usize(n - 1));
        let mut i = s.floor().to_usize().unwrap_or(0);
        if i >= n - 1 {
            i = n - 2;
        }
        base[d] = i;
        frac[d] = s - from_usize(i);
    }
    let mut acc = T::zero();
    for corner in 0..8usize {
        let mut w = T::one();
        let mut ijk = base;
        let mut skip = false;
        for d in 0..3 {
            let bit = (corner >> d) & 1;
            if !grid.is_active(d) {
                if bit == 1 {
                    skip = true;
                    break;
                }
                continue;
            }
            if bit == 1 {
                ijk[d] += 1;
                w *= frac[d];
            } else {
                w *= T::one() - frac[d];
            }
        }
        if skip || w == T::zero() {
            continue;
        }
        acc += w * values[grid.index(ijk)];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> GridBox<f64> {
        GridBox::new([0.0; 3], [1.0; 3], [n, n, n]).unwrap()
    }

    #[test]
    fn spacing_and_indexing() {
        let g = GridBox::new([0.0, -1.0, 2.0], [1.0, 1.0, 3.0], [5, 3, 1]).unwrap();
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.spacing(1), 1.0);
        assert_eq!(g.spacing(2), 1.0);
        assert_eq!(g.node_count(), 15);
        let idx = g.index([3, 2, 0]);
        assert_eq!(g.ijk(idx), [3, 2, 0]);
        assert_eq!(g.position(idx), [0.75, 1.0, 2.5]);
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(GridBox::new([0.0; 3], [1.0, 0.0, 1.0], [3, 3, 3]).is_err());
        assert!(GridBox::new([0.0; 3], [1.0; 3], [2, 3, 3]).is_err());
    }

    #[test]
    fn weights_sum_to_volume() {
        let g = GridBox::new([0.0; 3], [2.0, 1.0, 0.5], [9, 5, 1]).unwrap();
        let total: f64 = (0..g.node_count()).map(|i| g.node_weight(i)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_is_exact_for_trilinear() {
        let g = unit(5);
        let f = ScalarField::from_fn(&g, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[2]).unwrap();
        let v = f.interpolate([0.33, 0.71, 0.2]);
        let exact = 1.0 + 2.0 * 0.33 - 0.71 + 0.5 * 0.33 * 0.2;
        assert!((v - exact).abs() < 1e-14);
        assert_eq!(f.interpolate([1.5, 0.5, 0.5]), 0.0);
    }

    #[test]
    fn text_format_round_trip() {
        let g = GridBox::new([0.0, 0.0, 0.0], [1.0, 2.0, 1.0], [3, 4, 1]).unwrap();
        let b = VectorField::from_fn(&g, |x| [x[0], -x[1], 0.1 * x[0] * x[1]]).unwrap();
        let mut buf = Vec::new();
        b.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# grid 3 4 1 "));
        let back = VectorField::<f64>::read_text(buf.as_slice()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn text_format_rejects_wrong_width() {
        let text = "# grid 3 1 1 0 0 0 1 1 1\n1 2\n3 4\n5 6\n";
        assert!(ScalarField::<f64>::read_text(text.as_bytes()).is_err());
    }
}
