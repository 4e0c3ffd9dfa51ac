//! Gauge-covariant lattice discretizations of the magnetic Schrödinger,
//! Pauli and Dirac operators on boxes (Dirichlet) and of the Pauli operator
//! on a torus with magnetic-translation boundary conditions.

use num_complex::Complex;

use crate::error::OperatorError;
use crate::fieldlab::gauge_from_field;
use crate::grid::{GridBox, ScalarField, VectorField};
use crate::num::{from_usize, lit, phase, Cplx, Real};
use crate::sparse::{HermitianBuilder, SparseHermitian};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Schrodinger,
    Pauli,
    Dirac,
    TorusPauli,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Schrodinger => "schrodinger",
            OperatorKind::Pauli => "pauli",
            OperatorKind::Dirac => "dirac",
            OperatorKind::TorusPauli => "torus-pauli",
        }
    }
}

/// Which spin components of a Pauli operator to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinBlock {
    Both,
    /// `sigma_3 = +1`: `H_0 - mu hbar B_3 + W`, the block carrying the zero
    /// modes when the flux is positive.
    Up,
    /// `sigma_3 = -1`: `H_0 + mu hbar B_3 + W`.
    Down,
}

/// Periodic cell of a torus. The flux quantum number is derived from the
/// field at assembly time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusSpec<T> {
    pub periods: [T; 3],
    /// Largest accepted `|mu Phi / hbar - N|` before rounding.
    pub flux_tol: T,
}

impl<T: Real> TorusSpec<T> {
    pub fn new(periods: [T; 3]) -> Self {
        Self {
            periods,
            flux_tol: lit(1e-6),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorSpec<T> {
    kind: OperatorKind,
    hbar: T,
    mu: T,
    grid: GridBox<T>,
    field: VectorField<T>,
    gauge: Option<VectorField<T>>,
    potential: ScalarField<T>,
    wilson: T,
    spin: SpinBlock,
    torus: Option<TorusSpec<T>>,
}

impl<T: Real> OperatorSpec<T> {
    /// Zero field, zero potential, `hbar = 1`, `mu = 0`, `wilson = 1`.
    pub fn new(kind: OperatorKind, grid: GridBox<T>) -> Self {
        Self {
            kind,
            hbar: T::one(),
            mu: T::zero(),
            field: VectorField::zeros(&grid),
            potential: ScalarField::constant(&grid, T::zero()),
            grid,
            gauge: None,
            wilson: T::one(),
            spin: SpinBlock::Both,
            torus: None,
        }
    }

    /// Pauli operator on a periodic cell sampled by `points` nodes per axis.
    pub fn torus(periods: [T; 3], points: [usize; 3]) -> Result<Self, OperatorError> {
        let grid = GridBox::periodic(periods, points)
            .map_err(|e| OperatorError::InvalidSpec(e.to_string()))?;
        let mut s = Self::new(OperatorKind::TorusPauli, grid);
        s.torus = Some(TorusSpec::new(periods));
        Ok(s)
    }

    pub fn with_hbar(mut self, hbar: T) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }

    /// Magnetic field `B`; the gauge is rebuilt from it unless one is given.
    pub fn with_field(mut self, b: VectorField<T>) -> Self {
        self.field = b;
        self
    }

    /// Explicit vector potential (box kinds only).
    pub fn with_gauge(mut self, a: VectorField<T>) -> Self {
        self.gauge = Some(a);
        self
    }

    /// `W` for Schrödinger/Pauli, `V` for Dirac.
    pub fn with_potential(mut self, w: ScalarField<T>) -> Self {
        self.potential = w;
        self
    }

    pub fn with_wilson(mut self, wilson: T) -> Self {
        self.wilson = wilson;
        self
    }

    pub fn with_spin(mut self, spin: SpinBlock) -> Self {
        self.spin = spin;
        self
    }

    pub fn with_kind(mut self, kind: OperatorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn grid(&self) -> &GridBox<T> {
        &self.grid
    }

    pub fn field(&self) -> &VectorField<T> {
        &self.field
    }

    pub fn potential(&self) -> &ScalarField<T> {
        &self.potential
    }

    pub fn wilson(&self) -> T {
        self.wilson
    }

    pub fn spin(&self) -> SpinBlock {
        self.spin
    }

    pub fn torus_spec(&self) -> Option<&TorusSpec<T>> {
        self.torus.as_ref()
    }

    fn validate(&self) -> Result<(), OperatorError> {
        if !(self.hbar > T::zero()) {
            return Err(OperatorError::InvalidSpec("hbar must be positive".into()));
        }
        if !(self.mu >= T::zero()) {
            return Err(OperatorError::InvalidSpec("mu must be nonnegative".into()));
        }
        if !(self.wilson >= T::zero()) {
            return Err(OperatorError::InvalidSpec("wilson must be nonnegative".into()));
        }
        if !self.field.grid().same_as(&self.grid) || !self.potential.grid().same_as(&self.grid) {
            return Err(OperatorError::GridMismatch);
        }
        if let Some(a) = &self.gauge {
            if !a.grid().same_as(&self.grid) {
                return Err(OperatorError::GridMismatch);
            }
        }
        if self.spin != SpinBlock::Both {
            let transverse = self.field.component(0).iter().chain(self.field.component(1));
            if transverse.into_iter().any(|v| *v != T::zero()) {
                return Err(OperatorError::InvalidSpec(
                    "single spin block needs B parallel to x3".into(),
                ));
            }
        }
        Ok(())
    }

    /// Vector potential used for the link phases.
    pub fn resolved_gauge(&self) -> Result<VectorField<T>, OperatorError> {
        if let Some(a) = &self.gauge {
            return Ok(a.clone());
        }
        let b = &self.field;
        if (0..3).all(|d| b.component(d).iter().all(|v| *v == T::zero())) {
            return Ok(VectorField::zeros(&self.grid));
        }
        let g = &self.grid;
        let center = [0, 1, 2].map(|d| (g.lower()[d] + g.upper()[d]) * lit(0.5));
        gauge_from_field(b, center, lit(1e-6)).map_err(|e| OperatorError::InvalidSpec(e.to_string()))
    }
}

/// An assembled operator and the map from matrix rows to grid nodes.
#[derive(Clone, Debug)]
pub struct Assembled<T> {
    matrix: SparseHermitian<T>,
    dof_nodes: Vec<usize>,
    components: usize,
    flux_quanta: Option<i64>,
}

impl<T: Real> Assembled<T> {
    pub fn matrix(&self) -> &SparseHermitian<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseHermitian<T> {
        self.matrix
    }

    /// Grid node of each block of `components` consecutive rows.
    pub fn dof_nodes(&self) -> &[usize] {
        &self.dof_nodes
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Integer flux `N` of a torus operator.
    pub fn flux_quanta(&self) -> Option<i64> {
        self.flux_quanta
    }
}

/// Node numbering of the unknowns: interior nodes for Dirichlet boxes,
/// every node on a torus.
struct Lattice<T> {
    grid: GridBox<T>,
    periodic: bool,
    slot: Vec<usize>,
    nodes: Vec<usize>,
}

impl<T: Real> Lattice<T> {
    fn new(grid: &GridBox<T>, periodic: bool) -> Result<Self, OperatorError> {
        let mut slot = vec![usize::MAX; grid.node_count()];
        let mut nodes = Vec::new();
        for i in 0..grid.node_count() {
            if periodic || !grid.is_boundary(i) {
                slot[i] = nodes.len();
                nodes.push(i);
            }
        }
        if nodes.is_empty() {
            return Err(OperatorError::GridTooSmall("no interior nodes".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            periodic,
            slot,
            nodes,
        })
    }

    /// Forward neighbour of `node` along `axis`, with a flag telling whether
    /// the link wraps around a periodic axis.
    fn forward(&self, node: usize, axis: usize) -> Option<(usize, bool)> {
        let g = &self.grid;
        if !g.is_active(axis) {
            return None;
        }
        let mut ijk = g.ijk(node);
        let n = g.points()[axis];
        let wrap = ijk[axis] + 1 == n;
        if wrap {
            if !self.periodic {
                return None;
            }
            ijk[axis] = 0;
        } else {
            ijk[axis] += 1;
        }
        let j = g.index(ijk);
        (self.slot[j] != usize::MAX).then_some((j, wrap))
    }

    /// Uniform spacing of the lattice along `axis` (periodic: `T / n`).
    fn spacing(&self, axis: usize) -> T {
        self.grid.spacing(axis)
    }
}

/// Phase `exp(-i (mu/hbar) * int a.dl)` on every forward link, trapezoid rule
/// for the line integral.
fn link_phases<T: Real>(
    lat: &Lattice<T>,
    a: &VectorField<T>,
    scale: T,
) -> Vec<[(usize, Cplx<T>); 3]> {
    let none = (usize::MAX, Complex::default());
    lat.nodes
        .iter()
        .map(|&x| {
            let mut out = [none; 3];
            for (d, o) in out.iter_mut().enumerate() {
                if let Some((y, _)) = lat.forward(x, d) {
                    let h = lat.spacing(d);
                    let theta = h * (a.component(d)[x] + a.component(d)[y]) * lit(0.5);
                    *o = (y, phase(-scale * theta));
                }
            }
            out
        })
        .collect()
}

/// Kinetic term `(-i hbar grad - mu a)^2` on one scalar component, written
/// into rows `comps * slot + c` for every `c` in `which`.
fn add_kinetic<T: Real>(
    b: &mut HermitianBuilder<T>,
    lat: &Lattice<T>,
    links: &[[(usize, Cplx<T>); 3]],
    hbar: T,
    comps: usize,
    which: &[usize],
    factor: &[T],
) {
    let h2 = hbar * hbar;
    for (s, _) in lat.nodes.iter().enumerate() {
        for d in 0..3 {
            if !lat.grid.is_active(d) {
                continue;
            }
            let hd = lat.spacing(d);
            let c = h2 / (hd * hd);
            for (&cmp, &f) in which.iter().zip(factor) {
                b.add_diag(comps * s + cmp, f * (c + c));
            }
            let (y, u) = links[s][d];
            if y == usize::MAX {
                continue;
            }
            let t = lat.slot[y];
            if t == s {
                // single-node periodic axis: hopping reduces to a diagonal phase
                for (&cmp, &f) in which.iter().zip(factor) {
                    b.add_diag(comps * s + cmp, -f * c * (u.re + u.re));
                }
                continue;
            }
            for (&cmp, &f) in which.iter().zip(factor) {
                b.add_pair(comps * s + cmp, comps * t + cmp, u * (-f * c));
            }
        }
    }
}

fn expect_kind<T: Real>(spec: &OperatorSpec<T>, kind: OperatorKind) -> Result<(), OperatorError> {
    if spec.kind != kind {
        return Err(OperatorError::KindMismatch {
            expected: kind.name(),
            found: spec.kind.name(),
        });
    }
    spec.validate()
}

/// `H_0(B) + W` with Dirichlet conditions.
pub fn assemble_schrodinger<T: Real>(spec: &OperatorSpec<T>) -> Result<Assembled<T>, OperatorError> {
    expect_kind(spec, OperatorKind::Schrodinger)?;
    let lat = Lattice::new(&spec.grid, false)?;
    let a = spec.resolved_gauge()?;
    let links = link_phases(&lat, &a, spec.mu / spec.hbar);
    let mut b = HermitianBuilder::new(lat.nodes.len());
    add_kinetic(&mut b, &lat, &links, spec.hbar, 1, &[0], &[T::one()]);
    for (s, &x) in lat.nodes.iter().enumerate() {
        b.add_diag(s, spec.potential.get(x));
    }
    Ok(Assembled {
        matrix: b.build(),
        dof_nodes: lat.nodes,
        components: 1,
        flux_quanta: None,
    })
}

fn pauli_on<T: Real>(
    spec: &OperatorSpec<T>,
    lat: Lattice<T>,
    links: &[[(usize, Cplx<T>); 3]],
    flux_quanta: Option<i64>,
) -> Assembled<T> {
    let mh = spec.mu * spec.hbar;
    let comps = if spec.spin == SpinBlock::Both { 2 } else { 1 };
    let mut b = HermitianBuilder::new(comps * lat.nodes.len());
    match spec.spin {
        SpinBlock::Both => add_kinetic(&mut b, &lat, links, spec.hbar, 2, &[0, 1], &[T::one(), T::one()]),
        _ => add_kinetic(&mut b, &lat, links, spec.hbar, 1, &[0], &[T::one()]),
    }
    let f = &spec.field;
    for (s, &x) in lat.nodes.iter().enumerate() {
        let w = spec.potential.get(x);
        let [b1, b2, b3] = f.at(x);
        match spec.spin {
            SpinBlock::Both => {
                b.add_diag(2 * s, w - mh * b3);
                b.add_diag(2 * s + 1, w + mh * b3);
                let off = Complex::new(-mh * b1, mh * b2);
                if off != Complex::default() {
                    b.add_pair(2 * s, 2 * s + 1, off);
                }
            }
            SpinBlock::Up => b.add_diag(s, w - mh * b3),
            SpinBlock::Down => b.add_diag(s, w + mh * b3),
        }
    }
    Assembled {
        matrix: b.build(),
        dof_nodes: lat.nodes,
        components: comps,
        flux_quanta,
    }
}

/// `H_0(B) - mu hbar sigma.B + W` with Dirichlet conditions; spin components
/// interleaved per node (or a single block when requested).
pub fn assemble_pauli<T: Real>(spec: &OperatorSpec<T>) -> Result<Assembled<T>, OperatorError> {
    expect_kind(spec, OperatorKind::Pauli)?;
    let lat = Lattice::new(&spec.grid, false)?;
    let a = spec.resolved_gauge()?;
    let links = link_phases(&lat, &a, spec.mu / spec.hbar);
    Ok(pauli_on(spec, lat, &links, None))
}

/// `sigma_k` as rows of complex entries.
fn sigma<T: Real>(k: usize) -> [[Cplx<T>; 2]; 2] {
    let (o, z, i) = (
        Complex::new(T::one(), T::zero()),
        Complex::default(),
        Complex::new(T::zero(), T::one()),
    );
    match k {
        0 => [[z, o], [o, z]],
        1 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

/// `alpha.(-i hbar grad - mu a) + beta + V` with central differences and an
/// optional Wilson term `wilson * (hbar h / 2) * beta * L_a`.
pub fn assemble_dirac<T: Real>(spec: &OperatorSpec<T>) -> Result<Assembled<T>, OperatorError> {
    expect_kind(spec, OperatorKind::Dirac)?;
    let lat = Lattice::new(&spec.grid, false)?;
    let a = spec.resolved_gauge()?;
    let links = link_phases(&lat, &a, spec.mu / spec.hbar);
    let n = lat.nodes.len();
    let mut b = HermitianBuilder::new(4 * n);
    let hbar = spec.hbar;
    let beta = [T::one(), T::one(), -T::one(), -T::one()];
    for (s, &x) in lat.nodes.iter().enumerate() {
        let v = spec.potential.get(x);
        for c in 0..4 {
            b.add_diag(4 * s + c, beta[c] + v);
        }
        for d in 0..3 {
            if !lat.grid.is_active(d) {
                continue;
            }
            let hd = lat.spacing(d);
            if spec.wilson > T::zero() {
                // positive Laplacian scaled by hbar h / 2
                let w = spec.wilson * hbar * hd * lit(0.5) / (hd * hd);
                for c in 0..4 {
                    b.add_diag(4 * s + c, beta[c] * (w + w));
                }
            }
            let (y, u) = links[s][d];
            if y == usize::MAX {
                continue;
            }
            let t = lat.slot[y];
            // -i hbar / (2h) alpha_d U on the (x, x+e) block
            let pref = Complex::new(T::zero(), -hbar / (hd + hd)) * u;
            let sg = sigma::<T>(d);
            for r in 0..2 {
                for c in 0..2 {
                    let e = sg[r][c];
                    if e == Complex::default() {
                        continue;
                    }
                    b.add_pair(4 * s + r, 4 * t + 2 + c, pref * e);
                    b.add_pair(4 * s + 2 + r, 4 * t + c, pref * e);
                }
            }
            if spec.wilson > T::zero() {
                let w = spec.wilson * hbar * hd * lit(0.5) / (hd * hd);
                for c in 0..4 {
                    b.add_pair(4 * s + c, 4 * t + c, u * (-beta[c] * w));
                }
            }
        }
    }
    Ok(Assembled {
        matrix: b.build(),
        dof_nodes: lat.nodes,
        components: 4,
        flux_quanta: None,
    })
}

/// Flux through the `(x1, x2)` cell: `Phi = (1/2 pi) int B_3`, the nearest
/// integer to `mu Phi / hbar` and the distance to it.
pub fn cell_flux<T: Real>(b3: &ScalarField<T>, periods: [T; 3], mu: T, hbar: T) -> (T, i64, T) {
    let g = b3.grid();
    let pts = g.points();
    let plane = pts[0] * pts[1];
    let cell = periods[0] * periods[1] / from_usize(plane);
    // average over x3 layers
    let layers = from_usize::<T>(pts[2]);
    let total: T = b3.values().iter().copied().sum::<T>() / layers;
    let phi = total * cell / (T::PI() + T::PI());
    let q = mu * phi / hbar;
    let n = q.round();
    (phi, n.to_i64().unwrap_or(0), (q - n).abs())
}

/// Periodic solution of the 5-point Poisson problem `Lap phi = f` on an
/// `n1 x n2` lattice by separable discrete Fourier transform; `f` must have
/// zero mean.
fn periodic_poisson<T: Real>(f: &[T], n1: usize, n2: usize, h1: T, h2: T) -> Vec<T> {
    let two_pi = T::PI() + T::PI();
    let dft = |data: &mut [Cplx<T>], stride: usize, len: usize, count: usize, step: usize, sign: T| {
        let mut tmp = vec![Complex::default(); len];
        for c in 0..count {
            let base = c * step;
            for (k, t) in tmp.iter_mut().enumerate() {
                let mut acc = Complex::default();
                for j in 0..len {
                    let ang = sign * two_pi * from_usize::<T>((j * k) % len) / from_usize(len);
                    acc += data[base + j * stride] * phase(ang);
                }
                *t = acc;
            }
            for (j, t) in tmp.iter().enumerate() {
                data[base + j * stride] = *t;
            }
        }
    };
    let mut z: Vec<Cplx<T>> = f.iter().map(|&v| Complex::new(v, T::zero())).collect();
    dft(&mut z, 1, n1, n2, n1, -T::one());
    dft(&mut z, n1, n2, n1, 1, -T::one());
    for k2 in 0..n2 {
        for k1 in 0..n1 {
            let s1 = (T::PI() * from_usize(k1) / from_usize(n1)).sin();
            let s2 = (T::PI() * from_usize(k2) / from_usize(n2)).sin();
            let lam = -(lit::<T>(4.0) * s1 * s1 / (h1 * h1) + lit::<T>(4.0) * s2 * s2 / (h2 * h2));
            let idx = k1 + n1 * k2;
            z[idx] = if k1 == 0 && k2 == 0 { Complex::default() } else { z[idx] / lam };
        }
    }
    dft(&mut z, 1, n1, n2, n1, T::one());
    dft(&mut z, n1, n2, n1, 1, T::one());
    let norm = from_usize::<T>(n1 * n2);
    z.iter().map(|c| c.re / norm).collect()
}

/// Pauli operator on the torus `R^d / Gamma` for `B = (0, 0, B_3(x1, x2))`
/// with integer flux. The gauge is `a0 = (-B0 x2 / 2, B0 x1 / 2, 0)` for the
/// mean field plus a periodic part from a plaquette Poisson solve; links that
/// wrap around carry the magnetic-translation twist.
pub fn assemble_torus_pauli<T: Real>(spec: &OperatorSpec<T>) -> Result<Assembled<T>, OperatorError> {
    expect_kind(spec, OperatorKind::TorusPauli)?;
    let torus = spec
        .torus
        .ok_or_else(|| OperatorError::InvalidSpec("torus periods missing".into()))?;
    let g = &spec.grid;
    if !g.is_active(0) || !g.is_active(1) {
        return Err(OperatorError::GridTooSmall("torus needs x1 and x2 active".into()));
    }
    let f = &spec.field;
    if f.component(0).iter().chain(f.component(1)).any(|v| *v != T::zero()) {
        return Err(OperatorError::InvalidSpec("torus field must be parallel to x3".into()));
    }
    let pts = g.points();
    if pts[2] > 1 {
        // field must not vary along x3
        let plane = pts[0] * pts[1];
        let b3 = f.component(2);
        if (plane..b3.len()).any(|i| b3[i] != b3[i % plane]) {
            return Err(OperatorError::InvalidSpec("torus field must not depend on x3".into()));
        }
    }
    let b3 = ScalarField::new(g.clone(), f.component(2).to_vec()).expect("same grid");
    let (_, n, defect) = cell_flux(&b3, torus.periods, spec.mu, spec.hbar);
    if defect > torus.flux_tol {
        let q = spec.mu * cell_flux(&b3, torus.periods, T::one(), T::one()).0 / spec.hbar;
        return Err(OperatorError::NonIntegerFlux(q.to_f64().unwrap_or(f64::NAN)));
    }
    let (t1, t2) = (torus.periods[0], torus.periods[1]);
    let (n1, n2) = (pts[0], pts[1]);
    let (h1, h2) = (t1 / from_usize(n1), t2 / from_usize(n2));
    let plane = n1 * n2;
    let mean: T = f.component(2)[..plane].iter().copied().sum::<T>() / from_usize(plane);
    // B0 adjusted so that the flux is exactly N
    let b0 = if spec.mu > T::zero() {
        (T::PI() + T::PI()) * spec.hbar * from_i64::<T>(n) / (spec.mu * t1 * t2)
    } else {
        mean
    };
    // fluctuation sampled at plaquette centres
    let node = |i: usize, j: usize| f.component(2)[(i % n1) + n1 * (j % n2)];
    let fluct: Vec<T> = (0..plane)
        .map(|p| {
            let (i, j) = (p % n1, p / n1);
            (node(i, j) + node(i + 1, j) + node(i, j + 1) + node(i + 1, j + 1)) * lit(0.25) - mean
        })
        .collect();
    let phi = if fluct.iter().any(|v| *v != T::zero()) {
        periodic_poisson(&fluct, n1, n2, h1, h2)
    } else {
        vec![T::zero(); plane]
    };
    let pidx = |i: isize, j: isize| {
        let i = i.rem_euclid(n1 as isize) as usize;
        let j = j.rem_euclid(n2 as isize) as usize;
        i + n1 * j
    };

    let lat = Lattice::new(g, true)?;
    let scale = spec.mu / spec.hbar;
    let half = lit::<T>(0.5);
    let links: Vec<[(usize, Cplx<T>); 3]> = lat
        .nodes
        .iter()
        .map(|&x| {
            let [i, j, _] = g.ijk(x);
            let pos = g.position(x);
            let mut out = [(usize::MAX, Complex::default()); 3];
            for (d, o) in out.iter_mut().enumerate() {
                let Some((y, wrap)) = lat.forward(x, d) else { continue };
                let (ii, jj) = (i as isize, j as isize);
                let theta = match d {
                    0 => {
                        // a1 = -B0 x2 / 2 - d2 phi
                        let lin = -b0 * pos[1] * half * h1;
                        let per = -(phi[pidx(ii, jj)] - phi[pidx(ii, jj - 1)]) * h1 / h2;
                        let twist = if wrap { -b0 * t1 * pos[1] * half } else { T::zero() };
                        lin + per + twist
                    }
                    1 => {
                        let lin = b0 * pos[0] * half * h2;
                        let per = (phi[pidx(ii, jj)] - phi[pidx(ii - 1, jj)]) * h2 / h1;
                        let twist = if wrap { b0 * t2 * pos[0] * half } else { T::zero() };
                        lin + per + twist
                    }
                    _ => T::zero(),
                };
                *o = (y, phase(-scale * theta));
            }
            out
        })
        .collect();
    Ok(pauli_on(spec, lat, &links, Some(n)))
}

fn from_i64<T: Real>(n: i64) -> T {
    T::from_i64(n).expect("integer representable")
}

/// Dispatches on the operator kind.
pub fn assemble<T: Real>(spec: &OperatorSpec<T>) -> Result<Assembled<T>, OperatorError> {
    match spec.kind {
        OperatorKind::Schrodinger => assemble_schrodinger(spec),
        OperatorKind::Pauli => assemble_pauli(spec),
        OperatorKind::Dirac => assemble_dirac(spec),
        OperatorKind::TorusPauli => assemble_torus_pauli(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_eigenvalues;

    #[test]
    fn free_1d_is_tridiagonal() {
        let g = GridBox::<f64>::new([0.0; 3], [1.0; 3], [6, 1, 1]).unwrap();
        let op = assemble(&OperatorSpec::new(OperatorKind::Schrodinger, g)).unwrap();
        let m = op.matrix();
        assert_eq!(m.dim(), 4);
        let c = 1.0 / 0.2f64.powi(2);
        assert!((m.get(0, 0).re - 2.0 * c).abs() < 1e-9);
        assert!((m.get(0, 1).re + c).abs() < 1e-9);
        assert_eq!(m.get(0, 2), Complex::default());
    }

    #[test]
    fn pauli_decouples_for_axial_field() {
        let g = GridBox::<f64>::new([0.0; 3], [1.0; 3], [6, 6, 1]).unwrap();
        let b = VectorField::constant(&g, [0.0, 0.0, 2.0]);
        let spec = OperatorSpec::new(OperatorKind::Pauli, g).with_mu(1.0).with_field(b);
        let op = assemble(&spec).unwrap();
        let m = op.matrix();
        for i in 0..m.dim() {
            for (j, v) in m.row(i) {
                if i % 2 != j % 2 {
                    assert_eq!(v, Complex::default());
                }
            }
        }
        assert_eq!(m.hermiticity_defect(), 0.0);
    }

    #[test]
    fn torus_plaquette_flux_is_uniform() {
        // every plaquette, including the wrapped ones, carries mu B0 h1 h2 / hbar
        let n = 6;
        let mut spec = OperatorSpec::torus([1.0, 1.0, 1.0], [n, n, 1]).unwrap();
        let g = spec.grid().clone();
        let b0 = 2.0 * std::f64::consts::PI * 2.0;
        let b = VectorField::from_fn(&g, |x| {
            [0.0, 0.0, b0 + 3.0 * (2.0 * std::f64::consts::PI * x[0]).cos()]
        })
        .unwrap();
        spec = spec.with_mu(1.0).with_field(b).with_spin(SpinBlock::Up);
        let op = assemble(&spec).unwrap();
        assert_eq!(op.flux_quanta(), Some(2));
        let m = op.matrix();
        let at = |i: usize, j: usize| (i % n) + n * (j % n);
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..n {
                let u = m.get(at(i, j), at(i + 1, j))
                    * m.get(at(i + 1, j), at(i + 1, j + 1))
                    * m.get(at(i + 1, j + 1), at(i, j + 1))
                    * m.get(at(i, j + 1), at(i, j));
                // hoppings carry exp(-i theta); loop product is exp(-i flux)
                let flux = -u.arg();
                total += flux.rem_euclid(2.0 * std::f64::consts::PI);
            }
        }
        let expect = 2.0 * std::f64::consts::PI * 2.0;
        assert!((total - expect).abs() < 1e-9, "{total} vs {expect}");
    }

    #[test]
    fn gauge_shift_preserves_spectrum() {
        let g = GridBox::<f64>::new([0.0; 3], [1.0; 3], [7, 7, 1]).unwrap();
        let b = VectorField::constant(&g, [0.0, 0.0, 3.0]);
        let spec = OperatorSpec::new(OperatorKind::Pauli, g.clone()).with_mu(1.0).with_field(b);
        let a = spec.resolved_gauge().unwrap();
        let shifted = VectorField::from_fn(&g, |x| {
            let i = g.index([
                ((x[0] / g.spacing(0)).round()) as usize,
                ((x[1] / g.spacing(1)).round()) as usize,
                0,
            ]);
            let base = a.at(i);
            // grad of chi = x1^2 x2 + 0.3 x2^2
            [base[0] + 2.0 * x[0] * x[1], base[1] + x[0] * x[0] + 0.6 * x[1], base[2]]
        })
        .unwrap();
        let e1 = dense_eigenvalues(assemble(&spec).unwrap().matrix());
        let e2 = dense_eigenvalues(assemble(&spec.clone().with_gauge(shifted)).unwrap().matrix());
        for (x, y) in e1.iter().zip(&e2) {
            assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
    }
}
