//! Fourier–Galerkin solver for `Δ₀u = λ f u` on flat tori and Klein bottles.
//!
//! The trial space is spanned by real trigonometric functions
//! `cos 2π(ms + nt)`, `sin 2π(ms + nt)` in lattice coordinates `(s, t)`,
//! `max(|m|, |n|) ≤ B`, orthonormal for the flat measure. The stiffness is
//! diagonal, `4π²|ξ_{mn}|²`; the mass is assembled from the FFT of `f` on an
//! offset midpoint grid. The Klein bottle uses the τ-invariant subspace of
//! its double cover `ℂ/⟨2π, ib⟩`, where `τ(s, t) = (s + ½, −t)`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moduli::{dual_lattice, KleinModulus, Lattice, Modulus, Spectrum, Topology, TorusModulus};

type DensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Density values, in lattice coordinates `(s, t) ∈ [0, 1)²` of the torus
/// (or of the double cover for a Klein bottle).
#[derive(Clone)]
pub enum Density {
    Constant(f64),
    Analytic(DensityFn),
    /// Periodic bilinear interpolation of values at `(i/ns, j/nt)`,
    /// stored row-major in `i`.
    Sampled { ns: usize, nt: usize, values: Vec<f64> },
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Constant(c) => write!(f, "Constant({c})"),
            Density::Analytic(_) => write!(f, "Analytic(..)"),
            Density::Sampled { ns, nt, .. } => write!(f, "Sampled({ns}×{nt})"),
        }
    }
}

/// Conical point of order `β > −1`: `f ~ |z − p|^{2β}` nearby.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cone {
    pub point: (f64, f64),
    pub order: f64,
}

/// Nonnegative density `f` defining the metric `f · g_flat`.
#[derive(Debug, Clone)]
pub struct ConformalFactor {
    base: Modulus,
    density: Density,
    cones: Vec<Cone>,
}

impl ConformalFactor {
    pub fn flat(base: Modulus) -> Self {
        Self { base, density: Density::Constant(1.0), cones: Vec::new() }
    }

    pub fn constant(base: Modulus, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("constant density {c} must be positive")));
        }
        Ok(Self { base, density: Density::Constant(c), cones: Vec::new() })
    }

    pub fn new(base: Modulus, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { base, density: Density::Analytic(Arc::new(f)), cones: Vec::new() }
    }

    pub fn torus_fn(m: TorusModulus, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Ok(Self::new(Modulus::Torus(m), f))
    }

    /// `f` must satisfy `f(s + ½, −t) = f(s, t)` on the double cover.
    pub fn klein_fn(m: KleinModulus, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Ok(Self::new(Modulus::Klein(m), f))
    }

    pub fn sampled(base: Modulus, ns: usize, nt: usize, values: Vec<f64>) -> Result<Self> {
        if ns == 0 || nt == 0 || values.len() != ns * nt {
            return Err(Error::InvalidInput(format!("expected {ns}×{nt} samples, got {}", values.len())));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("sampled density must be finite and nonnegative".into()));
        }
        Ok(Self { base, density: Density::Sampled { ns, nt, values }, cones: Vec::new() })
    }

    /// Product of cone profiles `(min(d, r)/r)^{2β}` with `d` the periodic
    /// flat distance to each cone point and `r` a quarter of the shortest
    /// period, times `smooth(s, t)`.
    pub fn conical(base: Modulus, cones: Vec<Cone>, smooth: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if let Some(c) = cones.iter().find(|c| !(c.order > -1.0)) {
            return Err(Error::InvalidInput(format!("cone order {} must exceed −1", c.order)));
        }
        let lat = base_lattice(&base);
        let r = 0.25 * shortest_period(&lat);
        let cs = cones.clone();
        let f = move |s: f64, t: f64| {
            let mut v = smooth(s, t);
            for c in &cs {
                let d = periodic_distance(&lat, (s, t), c.point).min(r) / r;
                v *= d.powf(2.0 * c.order);
            }
            v
        };
        Ok(Self { base, density: Density::Analytic(Arc::new(f)), cones })
    }

    pub fn base(&self) -> &Modulus {
        &self.base
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    /// Flat lattice carrying the trial space.
    pub fn lattice(&self) -> Lattice {
        base_lattice(&self.base)
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match &self.density {
            Density::Constant(c) => *c,
            Density::Analytic(f) => f(s, t),
            Density::Sampled { ns, nt, values } => {
                let (x, y) = (s.rem_euclid(1.0) * *ns as f64, t.rem_euclid(1.0) * *nt as f64);
                let (i, j) = (x.floor() as usize % ns, y.floor() as usize % nt);
                let (fx, fy) = (x - x.floor(), y - y.floor());
                let (i1, j1) = ((i + 1) % ns, (j + 1) % nt);
                let v = |i: usize, j: usize| values[i * nt + j];
                (1.0 - fx) * ((1.0 - fy) * v(i, j) + fy * v(i, j1)) + fx * ((1.0 - fy) * v(i1, j) + fy * v(i1, j1))
            }
        }
    }

    /// Same base and cones, density `c · f`.
    pub fn scaled(&self, c: f64) -> Self {
        let density = match &self.density {
            Density::Constant(v) => Density::Constant(c * v),
            Density::Analytic(f) => {
                let f = f.clone();
                Density::Analytic(Arc::new(move |s, t| c * f(s, t)))
            }
            Density::Sampled { ns, nt, values } => Density::Sampled {
                ns: *ns,
                nt: *nt,
                values: values.iter().map(|v| c * v).collect(),
            },
        };
        Self { base: self.base, density, cones: self.cones.clone() }
    }

    /// `f + ε`.
    pub fn regularized(&self, eps: f64) -> Self {
        let me = self.clone();
        Self { base: self.base, density: Density::Analytic(Arc::new(move |s, t| me.eval(s, t) + eps)), cones: Vec::new() }
    }

    /// Samples on the `n×n` grid `(i/n, j/n)` as CSV `x,y,f` with `x, y`
    /// lattice coordinates.
    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("x,y,f\n");
        for i in 0..n {
            for j in 0..n {
                let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
                out.push_str(&format!("{s},{t},{}\n", self.eval(s, t)));
            }
        }
        out
    }

    /// Inverse of [`ConformalFactor::to_csv`]; the grid shape is inferred from
    /// the distinct coordinates.
    pub fn from_csv(base: Modulus, text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with('x')) {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::InvalidInput(format!("line {}: expected x,y,f", k + 1)));
            }
            let mut v = [0.0; 3];
            for (slot, p) in v.iter_mut().zip(&parts) {
                *slot = p.trim().parse().map_err(|_| Error::InvalidInput(format!("line {}: bad number {p:?}", k + 1)))?;
            }
            rows.push(v);
        }
        let distinct = |c: usize| {
            let mut xs: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            xs.len()
        };
        let (ns, nt) = (distinct(0), distinct(1));
        if ns * nt != rows.len() {
            return Err(Error::InvalidInput(format!("{} samples do not form a {ns}×{nt} grid", rows.len())));
        }
        let mut values = vec![f64::NAN; ns * nt];
        for r in &rows {
            let i = (r[0] * ns as f64).round() as usize % ns;
            let j = (r[1] * nt as f64).round() as usize % nt;
            values[i * nt + j] = r[2];
        }
        Self::sampled(base, ns, nt, values)
    }
}

fn base_lattice(base: &Modulus) -> Lattice {
    match base {
        Modulus::Torus(m) => m.lattice(),
        Modulus::Klein(k) => k.double_cover(),
    }
}

fn shortest_period(lat: &Lattice) -> f64 {
    let mut best = f64::INFINITY;
    for m in -2..=2i64 {
        for n in -2..=2i64 {
            if (m, n) != (0, 0) {
                let p = lat.point(m, n);
                best = best.min(p[0].hypot(p[1]));
            }
        }
    }
    best
}

/// Flat distance between lattice-coordinate points on `ℂ/Γ`.
pub fn periodic_distance(lat: &Lattice, p: (f64, f64), q: (f64, f64)) -> f64 {
    let ds = (p.0 - q.0).rem_euclid(1.0);
    let dt = (p.1 - q.1).rem_euclid(1.0);
    let mut best = f64::INFINITY;
    for i in -1..=0i64 {
        for j in -1..=0i64 {
            let (s, t) = (ds + i as f64, dt + j as f64);
            let x = s * lat.e1[0] + t * lat.e2[0];
            let y = s * lat.e1[1] + t * lat.e2[1];
            best = best.min(x.hypot(y));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Const,
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BasisFn {
    m: i64,
    n: i64,
    kind: Kind,
}

fn torus_basis(b: i64) -> Vec<BasisFn> {
    let mut out = vec![BasisFn { m: 0, n: 0, kind: Kind::Const }];
    for m in 0..=b {
        for n in -b..=b {
            if m > 0 || n > 0 {
                out.push(BasisFn { m, n, kind: Kind::Cos });
                out.push(BasisFn { m, n, kind: Kind::Sin });
            }
        }
    }
    out
}

/// Quadrature resolution used by [`assemble`].
pub fn default_resolution(bandwidth: usize) -> usize {
    (8 * bandwidth).max(64)
}

/// Discretized `(K, M)` pencil.
#[derive(Debug, Clone)]
pub struct GalerkinProblem {
    pub bandwidth: usize,
    pub resolution: usize,
    /// Diagonal stiffness; entry 0 is the constant mode.
    pub stiffness: DVector<f64>,
    pub mass: DMatrix<f64>,
    /// `∫ f dV_flat` over the surface (half the cover integral for Klein).
    pub total_mass: f64,
    pub modulus: Modulus,
    basis: Vec<BasisFn>,
    /// Columns of the invariant-subspace embedding: sparse `(index, coeff)`.
    embed: Vec<Vec<(usize, f64)>>,
    dual: Lattice,
    flat_area: f64,
}

impl GalerkinProblem {
    pub fn dim(&self) -> usize {
        self.stiffness.len()
    }

    pub fn topology(&self) -> Topology {
        self.modulus.topology()
    }

    /// Multiplies the stiffness by `scale`. Used to corrupt the solver in
    /// negative tests.
    #[doc(hidden)]
    pub fn with_stiffness_scale(mut self, scale: f64) -> Self {
        self.stiffness *= scale;
        self
    }

    /// Mass matrix of a signed density `g` in this problem's trial space.
    pub fn mass_of(&self, g: &(dyn Fn(f64, f64) -> f64 + Sync)) -> DMatrix<f64> {
        let coeffs = fourier_table(g, self.resolution, 2 * self.bandwidth as i64);
        let full = torus_mass(&self.basis, &coeffs, 2 * self.bandwidth as i64);
        project(&full, &self.embed)
    }

    /// Value of the trial function with coefficients `x` at `(s, t)`.
    pub fn eval_function(&self, x: &DVector<f64>, s: f64, t: f64) -> f64 {
        let norm = (2.0 / self.flat_area).sqrt();
        let mut v = 0.0;
        for (col, &xc) in self.embed.iter().zip(x.iter()) {
            for &(i, c) in col {
                let b = self.basis[i];
                let ph = 2.0 * PI * (b.m as f64 * s + b.n as f64 * t);
                v += xc
                    * c
                    * match b.kind {
                        Kind::Const => 1.0 / self.flat_area.sqrt(),
                        Kind::Cos => norm * ph.cos(),
                        Kind::Sin => norm * ph.sin(),
                    };
            }
        }
        v
    }

    /// `|ξ|` for the trial function index `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        let b = self.basis[self.embed[k][0].0];
        let p = self.dual.point(b.m, b.n);
        p[0].hypot(p[1])
    }
}

/// Offset-midpoint FFT coefficients `F(k) = ∫ g e^{−2πi k·(s,t)} ds dt` for
/// `|k₁|, |k₂| ≤ kmax`, indexed `[(k₁ + kmax)(2kmax + 1) + k₂ + kmax]`.
fn fourier_table(g: &(dyn Fn(f64, f64) -> f64 + Sync), res: usize, kmax: i64) -> Vec<Complex64> {
    use rayon::prelude::*;
    let h = 1.0 / res as f64;
    let mut grid: Vec<Complex64> = (0..res * res)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / res, idx % res);
            Complex64::new(g((i as f64 + 0.5) * h, (j as f64 + 0.5) * h), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(res);
    for row in grid.chunks_mut(res) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); res];
    for j in 0..res {
        for i in 0..res {
            col[i] = grid[i * res + j];
        }
        fft.process(&mut col);
        for i in 0..res {
            grid[i * res + j] = col[i];
        }
    }
    let w = (2 * kmax + 1) as usize;
    let scale = h * h;
    let mut out = vec![Complex64::new(0.0, 0.0); w * w];
    let r = res as i64;
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            let (i, j) = (k1.rem_euclid(r) as usize, k2.rem_euclid(r) as usize);
            let phase = Complex64::from_polar(1.0, -PI * (k1 + k2) as f64 / res as f64);
            out[((k1 + kmax) as usize) * w + (k2 + kmax) as usize] = grid[i * res + j] * phase * scale;
        }
    }
    out
}

fn torus_mass(basis: &[BasisFn], coeffs: &[Complex64], kmax: i64) -> DMatrix<f64> {
    let w = (2 * kmax + 1) as usize;
    let f = |m: i64, n: i64| coeffs[((m + kmax) as usize) * w + (n + kmax) as usize];
    let n = basis.len();
    let mut mass = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (a, b) = (basis[i], basis[j]);
            let dif = f(a.m - b.m, a.n - b.n);
            let sum = f(a.m + b.m, a.n + b.n);
            let v = match (a.kind, b.kind) {
                (Kind::Const, Kind::Const) => dif.re,
                (Kind::Const, Kind::Cos) => SQRT_2 * f(b.m, b.n).re,
                (Kind::Const, Kind::Sin) => -SQRT_2 * f(b.m, b.n).im,
                (Kind::Cos, Kind::Cos) => dif.re + sum.re,
                (Kind::Sin, Kind::Sin) => dif.re - sum.re,
                (Kind::Cos, Kind::Sin) => -sum.im + dif.im,
                (Kind::Sin, Kind::Cos) => -sum.im - dif.im,
                (_, Kind::Const) => unreachable!("constant is first"),
            };
            mass[(i, j)] = v;
            mass[(j, i)] = v;
        }
    }
    mass
}

fn project(full: &DMatrix<f64>, embed: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let n = embed.len();
    let mut out = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let mut v = 0.0;
            for &(i, a) in &embed[p] {
                for &(j, b) in &embed[q] {
                    v += a * b * full[(i, j)];
                }
            }
            out[(p, q)] = v;
            out[(q, p)] = v;
        }
    }
    out
}

/// τ-invariant combinations of the cover basis. `τ` maps the mode `(m, n)`
/// to `(−1)^m (m, −n)`; in the half-set the image of `cos/sin (m, −n)` is
/// either itself or `cos/±sin (−m, n)`.
fn klein_embedding(basis: &[BasisFn]) -> Vec<Vec<(usize, f64)>> {
    let index = |b: BasisFn| basis.iter().position(|c| *c == b);
    let mut seen = vec![false; basis.len()];
    let mut out = Vec::new();
    for (i, &b) in basis.iter().enumerate() {
        if seen[i] {
            continue;
        }
        let sign_m = if b.m % 2 == 0 { 1.0 } else { -1.0 };
        let (img, sign) = match b.kind {
            Kind::Const => (b, 1.0),
            _ => {
                let (m, n) = (b.m, -b.n);
                if m > 0 || (m == 0 && n > 0) {
                    (BasisFn { m, n, kind: b.kind }, sign_m)
                } else {
                    let flip = if b.kind == Kind::Sin { -1.0 } else { 1.0 };
                    (BasisFn { m: -m, n: -n, kind: b.kind }, sign_m * flip)
                }
            }
        };
        let j = index(img).expect("image stays in the truncated basis");
        seen[i] = true;
        seen[j] = true;
        if j == i {
            if sign > 0.0 {
                out.push(vec![(i, 1.0)]);
            }
        } else {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            out.push(vec![(i, r), (j, sign * r)]);
        }
    }
    out
}

fn check_density(g: &(dyn Fn(f64, f64) -> f64 + Sync), res: usize) -> Result<()> {
    let h = 1.0 / res as f64;
    for i in 0..res {
        for j in 0..res {
            let v = g((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("density {v} at sample ({i}, {j}) is not finite and nonnegative")));
            }
        }
    }
    Ok(())
}

/// Assembles the pencil at the default resolution `max(8B, 64)`.
pub fn assemble(f: &ConformalFactor, bandwidth: usize) -> Result<GalerkinProblem> {
    assemble_with(f, bandwidth, default_resolution(bandwidth))
}

pub fn assemble_with(f: &ConformalFactor, bandwidth: usize, resolution: usize) -> Result<GalerkinProblem> {
    if bandwidth < 1 {
        return Err(Error::InvalidInput("bandwidth must be ≥ 1".into()));
    }
    if resolution < 4 * bandwidth {
        return Err(Error::InvalidInput(format!("resolution {resolution} below 4 × bandwidth {bandwidth}")));
    }
    let lat = f.lattice();
    let dual = dual_lattice(&lat)?;
    let flat_area = lat.area();
    let b = bandwidth as i64;
    let basis = torus_basis(b);
    let g = |s: f64, t: f64| f.eval(s, t);
    check_density(&g, resolution)?;
    let coeffs = fourier_table(&g, resolution, 2 * b);
    let full = torus_mass(&basis, &coeffs, 2 * b);
    let embed: Vec<Vec<(usize, f64)>> = match f.base {
        Modulus::Torus(_) => (0..basis.len()).map(|i| vec![(i, 1.0)]).collect(),
        Modulus::Klein(_) => klein_embedding(&basis),
    };
    let mass = project(&full, &embed);
    let cover_mass = coeffs[((2 * b) * (4 * b + 1) + 2 * b) as usize].re * flat_area;
    let total_mass = match f.base {
        Modulus::Torus(_) => cover_mass,
        Modulus::Klein(_) => 0.5 * cover_mass,
    };
    if !(total_mass > 0.0) {
        return Err(Error::InvalidInput(format!("density has total mass {total_mass}")));
    }
    let stiffness = DVector::from_iterator(
        embed.len(),
        embed.iter().map(|col| {
            let bf = basis[col[0].0];
            let p = dual.point(bf.m, bf.n);
            4.0 * PI * PI * (p[0] * p[0] + p[1] * p[1])
        }),
    );
    Ok(GalerkinProblem {
        bandwidth,
        resolution,
        stiffness,
        mass,
        total_mass,
        modulus: f.base,
        basis,
        embed,
        dual,
        flat_area,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverPath {
    /// Cholesky when the mass is numerically definite, else deflated.
    Auto,
    /// `L⁻¹KL⁻ᵀ` with `M = LLᵀ`.
    Cholesky,
    /// Constant mode eliminated through the Schur complement of `M`; solves
    /// the inverse problem `D^{-1/2} S D^{-1/2} y = λ⁻¹ y` with `D` the
    /// nonconstant stiffness, so no factorization of `M` is needed.
    Deflated,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub spectrum: Spectrum,
    /// Columns `x_k` with `x_kᵀ M x_k = 1`, for `λ₀ … λ_count`.
    pub vectors: DMatrix<f64>,
    pub path: SolverPath,
}

/// Relative threshold on the smallest mass eigenvalue below which the mass
/// is treated as indefinite.
pub const MASS_PSD_TOL: f64 = 1e-10;

/// `λ₀ … λ_count` of the pencil.
pub fn solve(p: &GalerkinProblem, count: usize) -> Result<Solution> {
    solve_with(p, count, SolverPath::Auto)
}

pub fn solve_with(p: &GalerkinProblem, count: usize, path: SolverPath) -> Result<Solution> {
    if count < 1 {
        return Err(Error::InvalidInput("count must be ≥ 1".into()));
    }
    let n = p.dim();
    let count = count.min(n - 1);
    let chol = match path {
        SolverPath::Deflated => None,
        _ => p.mass.clone().cholesky(),
    };
    if chol.is_none() {
        let ev = p.mass.symmetric_eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        if lo < -MASS_PSD_TOL * hi.abs().max(1.0) || path == SolverPath::Cholesky {
            return Err(Error::IndefiniteMass { min_eig: lo / hi.abs().max(1e-300) });
        }
    }
    let (eig, vecs, used) = match chol {
        Some(c) => {
            let (e, v) = cholesky_path(p, &c, count);
            (e, v, SolverPath::Cholesky)
        }
        None => {
            let (e, v) = deflated_path(p, count)?;
            (e, v, SolverPath::Deflated)
        }
    };
    let spectrum = Spectrum::new(eig, p.total_mass, p.topology())?;
    Ok(Solution { spectrum, vectors: vecs, path: used })
}

fn normalize_columns(m: &DMatrix<f64>, mut v: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in v.column_iter_mut() {
        let q = c.dot(&(m * &c));
        c /= q.sqrt();
    }
    v
}

fn cholesky_path(p: &GalerkinProblem, c: &nalgebra::Cholesky<f64, nalgebra::Dyn>, count: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = p.dim();
    let l = c.l();
    let dh = DMatrix::from_diagonal(&p.stiffness.map(f64::sqrt));
    let x = l.solve_lower_triangular(&dh).expect("nonsingular factor");
    let a = &x * x.transpose();
    let se = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let keep = &order[..=count];
    let eig: Vec<f64> = keep.iter().map(|&i| se.eigenvalues[i].max(0.0)).collect();
    let z = DMatrix::from_columns(&keep.iter().map(|&i| se.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    let lt = l.transpose();
    let v = lt.solve_upper_triangular(&z).expect("nonsingular factor");
    (eig, normalize_columns(&p.mass, v))
}

fn deflated_path(p: &GalerkinProblem, count: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = p.dim();
    let r = n - 1;
    let m = &p.mass;
    let m00 = m[(0, 0)];
    if !(m00 > 0.0) {
        return Err(Error::IndefiniteMass { min_eig: m00 });
    }
    let m0r: DVector<f64> = m.view((1, 0), (r, 1)).into_owned().column(0).into_owned();
    let mut s = m.view((1, 1), (r, r)).into_owned() - &m0r * m0r.transpose() / m00;
    let dinv: Vec<f64> = (1..n).map(|i| 1.0 / p.stiffness[i].sqrt()).collect();
    for i in 0..r {
        for j in 0..r {
            s[(i, j)] *= dinv[i] * dinv[j];
        }
    }
    let se = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let mut eig = vec![0.0];
    let mut cols = vec![{
        let mut e0 = DVector::zeros(n);
        e0[0] = 1.0;
        e0
    }];
    for &k in &order[..count] {
        let mu = se.eigenvalues[k];
        if !(mu > 0.0) {
            return Err(Error::IndefiniteMass { min_eig: mu });
        }
        eig.push(1.0 / mu);
        let y = se.eigenvectors.column(k);
        let mut x = DVector::zeros(n);
        for i in 0..r {
            x[i + 1] = dinv[i] * y[i];
        }
        x[0] = -m0r.dot(&x.rows(1, r)) / m00;
        cols.push(x);
    }
    Ok((eig, normalize_columns(m, DMatrix::from_columns(&cols))))
}

/// JSON record for a computed spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRecord {
    pub modulus: Modulus,
    pub bandwidth: usize,
    pub area: f64,
    pub eigenvalues: Vec<f64>,
    pub lambda1bar: f64,
}

impl SpectrumRecord {
    pub fn new(p: &GalerkinProblem, s: &Spectrum) -> Self {
        Self {
            modulus: p.modulus,
            bandwidth: p.bandwidth,
            area: s.area(),
            eigenvalues: s.eigenvalues().to_vec(),
            lambda1bar: s.lambda1bar(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub eps: f64,
    pub lambda1: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityTable {
    pub reference_lambda1: f64,
    pub rows: Vec<StabilityRow>,
    /// Gaps strictly decrease as `ε` decreases.
    pub monotone: bool,
    /// Relative gap at the smallest `ε`.
    pub final_rel_gap: f64,
}

/// `|λ₁(f_ε) − λ₁(f)|` along a family, at a common bandwidth and resolution.
pub fn density_stability_test(
    reference: &ConformalFactor,
    family: &[(f64, ConformalFactor)],
    bandwidth: usize,
    resolution: usize,
) -> Result<StabilityTable> {
    use rayon::prelude::*;
    let l1 = |f: &ConformalFactor| -> Result<f64> {
        let p = assemble_with(f, bandwidth, resolution)?;
        Ok(solve(&p, 1)?.spectrum.lambda1())
    };
    let reference_lambda1 = l1(reference)?;
    let mut rows: Vec<StabilityRow> = family
        .par_iter()
        .map(|(eps, f)| {
            let lambda1 = l1(f)?;
            Ok(StabilityRow { eps: *eps, lambda1, gap: (lambda1 - reference_lambda1).abs() })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let monotone = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let final_rel_gap = rows.last().map_or(f64::NAN, |r| r.gap / reference_lambda1);
    Ok(StabilityTable { reference_lambda1, rows, monotone, final_rel_gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylDiagnostic {
    pub slope: f64,
    pub expected: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Least-squares slope of `N(λ_k) = k` against `λ_k` through the origin,
/// compared with `area/4π`.
pub fn weyl_sanity(s: &Spectrum) -> Result<WeylDiagnostic> {
    let ev = s.eigenvalues();
    if ev.len() < 51 {
        return Err(Error::InvalidInput(format!("Weyl check needs ≥ 50 nonzero eigenvalues, got {}", ev.len() - 1)));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &l) in ev.iter().enumerate().skip(1) {
        num += k as f64 * l;
        den += l * l;
    }
    let slope = num / den;
    let expected = s.area() / (4.0 * PI);
    let rel_err = (slope - expected).abs() / expected;
    Ok(WeylDiagnostic { slope, expected, rel_err, pass: rel_err <= 0.15 })
}
