//! Conformal group of Sⁿ, Hersch centering, conformal area and capacity.
//!
//! A Möbius map of Sⁿ is stored as a matrix in `O⁺(n+1, 1)` acting on the
//! null cone: `p ↦ L(p, 1)` followed by projectivization. The dilation
//! `γ_t^a` is the boost of rapidity `t` along `a`,
//!
//! `γ_t^a(p) = ((sinh t + x cosh t) a + (p − x a)) / (cosh t + x sinh t)`,
//! `x = ⟨p, a⟩`,
//!
//! with conformal factor `1/(cosh t + x sinh t)`. In the stereographic
//! chart of S² it is `z ↦ (z + is)/(1 − isz)` for `a = (0, 1, 0)` and
//! `s = tanh(t/2)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::elliptic::{sphere_pullback_factor, sphere_point, MeromorphicMap, WeierstrassData, WeierstrassMap};
use crate::error::{Error, Result};
use crate::moduli::TorusModulus;
use crate::specsolve::{self, ConformalFactor};

/// `z ↦ (az + b)/(cz + d)` on the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl ComplexMobius {
    pub fn identity() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Self { a: o, b: z, c: z, d: o }
    }

    /// `(z + it)/(1 − itz)`.
    pub fn chart_dilation(t: f64) -> Self {
        let it = Complex64::new(0.0, t);
        Self {
            a: Complex64::new(1.0, 0.0),
            b: it,
            c: -it,
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Self) -> Self {
        Self {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Acts linearly on `(N, D)`; the Wronskian scales by the determinant.
    pub fn act_homogeneous(&self, n: Complex64, d: Complex64, w: Complex64) -> (Complex64, Complex64, Complex64) {
        (self.a * n + self.b * d, self.c * n + self.d * d, self.det() * w)
    }

    /// Unit-determinant map with entries of modulus at most `spread`.
    pub fn random(rng: &mut impl Rng, spread: f64) -> Self {
        loop {
            let mut g = || Complex64::new(rng.gen_range(-spread..spread), rng.gen_range(-spread..spread));
            let m = Self { a: g() + 1.0, b: g(), c: g(), d: g() + 1.0 };
            let det = m.det();
            if det.norm() > 0.2 {
                let s = det.sqrt();
                return Self { a: m.a / s, b: m.b / s, c: m.c / s, d: m.d / s };
            }
        }
    }
}

/// Möbius map of Sⁿ as a Lorentz matrix of size `n + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusMap {
    lorentz: DMatrix<f64>,
}

/// `γ = r ∘ γ_t^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub rotation: DMatrix<f64>,
    pub axis: DVector<f64>,
    pub t: f64,
}

impl MobiusMap {
    pub fn identity(n: usize) -> Self {
        Self { lorentz: DMatrix::identity(n + 2, n + 2) }
    }

    /// Sphere dimension `n`.
    pub fn dim(&self) -> usize {
        self.lorentz.nrows() - 2
    }

    pub fn lorentz(&self) -> &DMatrix<f64> {
        &self.lorentz
    }

    /// Boost of rapidity `t` toward the unit vector `a`.
    pub fn dilation(a: &[f64], t: f64) -> Result<Self> {
        let n1 = a.len();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n1 < 2 || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("dilation axis must be a unit vector".into()));
        }
        let (ch, sh) = (t.cosh(), t.sinh());
        let mut l = DMatrix::identity(n1 + 1, n1 + 1);
        for i in 0..n1 {
            for j in 0..n1 {
                l[(i, j)] += (ch - 1.0) * a[i] * a[j];
            }
            l[(i, n1)] = sh * a[i];
            l[(n1, i)] = sh * a[i];
        }
        l[(n1, n1)] = ch;
        Ok(Self { lorentz: l })
    }

    /// Orthogonal `(n+1)×(n+1)` matrix acting on the sphere.
    pub fn rotation(r: &DMatrix<f64>) -> Result<Self> {
        let n1 = r.nrows();
        if r.ncols() != n1 || (r.transpose() * r - DMatrix::identity(n1, n1)).norm() > 1e-9 {
            return Err(Error::InvalidInput("rotation must be orthogonal".into()));
        }
        let mut l = DMatrix::identity(n1 + 1, n1 + 1);
        l.view_mut((0, 0), (n1, n1)).copy_from(r);
        Ok(Self { lorentz: l })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { lorentz: &self.lorentz * &other.lorentz }
    }

    pub fn inverse(&self) -> Self {
        // η Lᵀ η with η = diag(1, …, 1, −1).
        let n = self.lorentz.nrows();
        let mut inv = self.lorentz.transpose();
        for i in 0..n - 1 {
            inv[(i, n - 1)] = -inv[(i, n - 1)];
            inv[(n - 1, i)] = -inv[(n - 1, i)];
        }
        Self { lorentz: inv }
    }

    /// Image point and conformal factor `|dγ_p|`.
    pub fn apply_with_factor(&self, p: &[f64], out: &mut [f64]) -> f64 {
        let n1 = p.len();
        let l = &self.lorentz;
        let mut last = l[(n1, n1)];
        for j in 0..n1 {
            last += l[(n1, j)] * p[j];
        }
        for i in 0..n1 {
            let mut v = l[(i, n1)];
            for j in 0..n1 {
                v += l[(i, j)] * p[j];
            }
            out[i] = v / last;
        }
        1.0 / last
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        self.apply_with_factor(p, &mut out);
        out
    }

    pub fn decompose(&self) -> Decomposition {
        let n1 = self.lorentz.nrows() - 1;
        let ch = self.lorentz[(n1, n1)].max(1.0);
        let t = ch.acosh();
        let col = DVector::from_iterator(n1, (0..n1).map(|i| self.lorentz[(i, n1)]));
        if t < 1e-12 {
            let mut axis = DVector::zeros(n1);
            axis[0] = 1.0;
            return Decomposition {
                rotation: self.lorentz.view((0, 0), (n1, n1)).into_owned(),
                axis,
                t: 0.0,
            };
        }
        let ra = &col / t.sinh();
        let ra = &ra / ra.norm();
        let undo = MobiusMap::dilation(ra.as_slice(), -t).expect("unit axis");
        let r = (&undo.lorentz * &self.lorentz).view((0, 0), (n1, n1)).into_owned();
        let axis = r.transpose() * ra;
        Decomposition { rotation: r, axis, t }
    }

    /// `rotation ∘ γ_t^a` with a random orthogonal part and random axis.
    pub fn random(rng: &mut impl Rng, n: usize, tmax: f64) -> Self {
        let n1 = n + 1;
        let g = DMatrix::from_fn(n1, n1, |_, _| rng.gen_range(-1.0..1.0));
        let q = g.qr().q();
        let a = random_unit(rng, n1);
        let t = rng.gen_range(0.0..tmax);
        Self::rotation(&q).unwrap().compose(&Self::dilation(&a, t).unwrap())
    }
}

pub fn random_unit(rng: &mut impl Rng, n1: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// A map from the unit square (a fundamental domain in lattice
/// coordinates) to `S^{n}` ⊂ `ℝ^{n+1}`.
pub trait SphereMap: Sync {
    /// `n + 1`.
    fn ambient_dim(&self) -> usize;

    /// Writes `Φ(s, t)` into `out` and returns the pullback area density
    /// with respect to `ds dt`.
    fn eval(&self, s: f64, t: f64, out: &mut [f64]) -> f64;
}

/// `(cos x, sin x, cos y, sin y)/√2` on `[0, 2π)²`; minimal in S³, area 2π².
#[derive(Debug, Clone, Copy, Default)]
pub struct CliffordTorus;

impl SphereMap for CliffordTorus {
    fn ambient_dim(&self) -> usize {
        4
    }

    fn eval(&self, s: f64, t: f64, out: &mut [f64]) -> f64 {
        let (x, y) = (2.0 * PI * s, 2.0 * PI * t);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        out[0] = r * x.cos();
        out[1] = r * x.sin();
        out[2] = r * y.cos();
        out[3] = r * y.sin();
        2.0 * PI * PI
    }
}

/// `γ ∘ ℘ : ℂ/⟨1, a+ib⟩ → S²` for a complex Möbius `γ`.
#[derive(Debug, Clone)]
pub struct EllipticSphereMap {
    pub modulus: TorusModulus,
    pub map: WeierstrassMap,
}

impl EllipticSphereMap {
    pub fn new(modulus: TorusModulus) -> Result<Self> {
        Ok(Self {
            modulus,
            map: WeierstrassMap::new(WeierstrassData::for_modulus(&modulus)?),
        })
    }

    pub fn composed(&self, g: &ComplexMobius) -> Self {
        Self { modulus: self.modulus, map: self.map.composed(g) }
    }

    pub fn z(&self, s: f64, t: f64) -> Complex64 {
        Complex64::new(s + t * self.modulus.a, t * self.modulus.b)
    }

    /// Pullback factor with respect to the flat metric `|dz|²`.
    pub fn factor(&self, s: f64, t: f64) -> f64 {
        sphere_pullback_factor(&self.map as &dyn MeromorphicMap, self.z(s, t))
    }
}

impl SphereMap for EllipticSphereMap {
    fn ambient_dim(&self) -> usize {
        3
    }

    fn eval(&self, s: f64, t: f64, out: &mut [f64]) -> f64 {
        let z = self.z(s, t);
        let p = sphere_point(&self.map, z);
        out.copy_from_slice(&p);
        sphere_pullback_factor(&self.map, z) * self.modulus.b
    }
}

/// Finite measure supported on points of Sⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PointMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidInput("points and weights must be nonempty and paired".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput("weights must be nonnegative with positive total".into()));
        }
        Ok(Self { points, weights })
    }

    /// Push-forward of `weight(s, t, J) ds dt` on an `n×n` midpoint grid
    /// through `map`, where `J` is the pullback area density.
    pub fn from_map(map: &dyn SphereMap, n: usize, weight: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let d = map.ambient_dim();
        let h = 1.0 / n as f64;
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        let mut buf = vec![0.0; d];
        for i in 0..n {
            for j in 0..n {
                let (s, t) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                let jac = map.eval(s, t, &mut buf);
                points.push(buf.clone());
                weights.push(weight(s, t, jac) * h * h);
            }
        }
        Self::new(points, weights)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn pushed(&self, g: &MobiusMap) -> Self {
        Self {
            points: self.points.iter().map(|p| g.apply(p)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Mean of the points under the normalized measure.
pub fn center_of_mass(mu: &PointMeasure) -> Vec<f64> {
    let d = mu.dim();
    let total: f64 = mu.weights.iter().sum();
    let mut m = vec![0.0; d];
    for (p, w) in mu.points.iter().zip(&mu.weights) {
        for k in 0..d {
            m[k] += w * p[k];
        }
    }
    m.iter().map(|x| x / total).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centering {
    pub map: MobiusMap,
    pub residual: f64,
    pub iterations: usize,
}

pub const CENTERING_TOL: f64 = 1e-8;

/// Möbius map `γ` with `|center_of_mass(γ_* μ)| < 1e-8`.
///
/// Newton iteration on the residual: at the current push-forward with
/// points `q`, an infinitesimal boost `δ` moves the centre by `Hδ` with
/// `H = ∫(I − qqᵀ)dμ`, so the step is the boost along `−H⁻¹m`, with
/// backtracking on `|m|`.
pub fn hersch_center(mu: &PointMeasure) -> Result<Centering> {
    let total: f64 = mu.weights.iter().sum();
    let heaviest = mu.weights.iter().cloned().fold(0.0, f64::max) / total;
    if heaviest >= 0.5 {
        return Err(Error::SingleAtom { fraction: heaviest });
    }
    let d = mu.dim();
    let mut g = MobiusMap::identity(d - 1);
    let mut cur = mu.clone();
    let mut m = center_of_mass(&cur);
    let max_iter = 100;
    for it in 0..max_iter {
        let r = norm(&m);
        if r < CENTERING_TOL {
            return Ok(Centering { map: g, residual: r, iterations: it });
        }
        let mut h = DMatrix::<f64>::identity(d, d);
        for (p, w) in cur.points.iter().zip(&cur.weights) {
            let w = w / total;
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] -= w * p[i] * p[j];
                }
            }
        }
        let step = h
            .cholesky()
            .map(|c| c.solve(&DVector::from_column_slice(&m)))
            .ok_or(Error::NotConverged { what: "centering Jacobian", iterations: it, residual: r })?;
        let step = -step;
        let len = step.norm();
        let dir: Vec<f64> = (&step / len).iter().copied().collect();
        let mut s = len.min(3.0);
        let mut accepted = false;
        for _ in 0..40 {
            let b = MobiusMap::dilation(&dir, s)?;
            let trial = cur.pushed(&b);
            let mt = center_of_mass(&trial);
            if norm(&mt) < r {
                // Re-push from μ so the residual is that of the returned map.
                g = b.compose(&g);
                cur = mu.pushed(&g);
                m = center_of_mass(&cur);
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            return Err(Error::NotConverged { what: "centering line search", iterations: it, residual: r });
        }
    }
    Err(Error::NotConverged { what: "Hersch centering", iterations: max_iter, residual: norm(&m) })
}

/// Area estimate with a resolution check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaEstimate {
    pub value: f64,
    pub resolution: usize,
    pub rel_diff: f64,
}

fn area_at(map: &dyn SphereMap, g: &MobiusMap, n: usize) -> f64 {
    let d = map.ambient_dim();
    let h = 1.0 / n as f64;
    let mut p = vec![0.0; d];
    let mut q = vec![0.0; d];
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let jac = map.eval((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, &mut p);
            let f = g.apply_with_factor(&p, &mut q);
            s += jac * f * f;
        }
    }
    s * h * h
}

/// Area of `(γ ∘ Φ)* g_can`, refining the midpoint grid until two
/// successive resolutions agree to `1e-4`.
pub fn conformal_area(map: &dyn SphereMap, g: &MobiusMap) -> Result<AreaEstimate> {
    let mut n = 64;
    let mut prev = area_at(map, g, n);
    while n <= 2048 {
        n *= 2;
        let cur = area_at(map, g, n);
        let rel = ((cur - prev) / cur).abs();
        if rel < 1e-4 {
            return Ok(AreaEstimate { value: cur, resolution: n, rel_diff: rel });
        }
        prev = cur;
    }
    let cur = area_at(map, g, n);
    let rel = ((cur - prev) / cur).abs();
    if rel < 1e-3 {
        Ok(AreaEstimate { value: cur, resolution: n, rel_diff: rel })
    } else {
        Err(Error::NotConverged { what: "conformal area quadrature", iterations: n, residual: rel })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityTrace {
    pub rows: Vec<(f64, f64)>,
    /// Indices `i` where `area[i+1] > area[i] + tol`.
    pub violations: Vec<usize>,
    pub strictly_decreasing: bool,
}

/// `area(γ_t^a ∘ Φ)` along `t_grid`.
pub fn area_monotonicity_trace(map: &dyn SphereMap, axis: &[f64], t_grid: &[f64]) -> Result<MonotonicityTrace> {
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut tol = 0.0f64;
    for &t in t_grid {
        let a = conformal_area(map, &MobiusMap::dilation(axis, t)?)?;
        tol = tol.max(a.rel_diff * a.value);
        rows.push((t, a.value));
    }
    let violations = rows
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].1 > w[0].1 + tol)
        .map(|(i, _)| i)
        .collect();
    let strictly_decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1 - tol);
    Ok(MonotonicityTrace { rows, violations, strictly_decreasing })
}

/// Radial log-cutoff: 1 on `B_ρ`, `ln r / ln ρ` on the annulus, 0 outside `B_1`.
pub fn capacity_profile(rho: f64, r: f64) -> f64 {
    if r <= rho {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        r.ln() / rho.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub rho: f64,
    pub energy: f64,
    pub exact: f64,
    pub rel_err: f64,
    pub spacing: f64,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("inner radius {rho} outside (0, 1)")));
    }
    Ok(())
}

/// Dirichlet energy of the P1 interpolant of the log-cutoff on a uniform
/// triangulation of `[−1, 1]²` with spacing `h`.
pub fn capacity_test_functions(rho: f64, h: f64) -> Result<CapacityResult> {
    check_rho(rho)?;
    let n = (2.0 / h).round() as usize;
    let h = 2.0 / n as f64;
    let u: Vec<f64> = (0..=n)
        .flat_map(|i| {
            (0..=n).map(move |j| {
                let (x, y) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
                capacity_profile(rho, x.hypot(y))
            })
        })
        .collect();
    let at = |i: usize, j: usize| u[i * (n + 1) + j];
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (u00, u10, u01, u11) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
            e += (u10 - u00).powi(2) + (u01 - u00).powi(2);
            e += (u11 - u01).powi(2) + (u11 - u10).powi(2);
        }
    }
    // |∇u|² · (h²/2) per triangle, with ∇u = Δu/h.
    let energy = 0.5 * e;
    let exact = 2.0 * PI / rho.ln().abs();
    Ok(CapacityResult { rho, energy, exact, rel_err: (energy - exact).abs() / exact, spacing: h })
}

/// Energy of the same profile transported to S² by inverse stereographic
/// projection, `r = tan(θ/2)`, using `n` midpoint cells in `θ` and
/// centred differences of the transported profile.
pub fn capacity_energy_spherical(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    let u = |th: f64| capacity_profile(rho, (0.5 * th).tan());
    let h = PI / n as f64;
    let mut e = 0.0;
    for k in 0..n {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let du = (u(b) - u(a)) / h;
        e += 2.0 * PI * (0.5 * (a + b)).sin() * du * du * h;
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerationRow {
    pub t: f64,
    pub area: f64,
    pub lambda1: f64,
    pub lambda1bar: f64,
}

/// λ₁ of `(γ_t ∘ ℘)* g_can` with `γ_t = (z + it)/(1 − itz)`, solved by the
/// Galerkin solver on the pullback factor.
pub fn mobius_degeneration_study(m: &TorusModulus, t_grid: &[f64], bandwidth: usize) -> Result<Vec<DegenerationRow>> {
    use rayon::prelude::*;
    let base = EllipticSphereMap::new(*m)?;
    t_grid
        .par_iter()
        .map(|&t| {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::InvalidInput(format!("chart parameter t = {t} outside [0, 1)")));
            }
            let map = base.composed(&ComplexMobius::chart_dilation(t));
            // Degenerating factors concentrate, so the quadrature grid grows with t.
            let res = specsolve::default_resolution(bandwidth).max((64.0 / (1.0 - t)).ceil() as usize);
            let f = ConformalFactor::torus_fn(*m, move |s, u| map.factor(s, u))?;
            let problem = specsolve::assemble_with(&f, bandwidth, res.next_power_of_two())?;
            let sol = specsolve::solve(&problem, 2)?;
            Ok(DegenerationRow {
                t,
                area: sol.spectrum.area(),
                lambda1: sol.spectrum.lambda1(),
                lambda1bar: sol.spectrum.lambda1bar(),
            })
        })
        .collect()
}

/// `t,area,lambda1,lambda1bar` rows.
pub fn degeneration_csv(rows: &[DegenerationRow]) -> String {
    let mut s = String::from("t,area,lambda1,lambda1bar\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.t, r.area, r.lambda1, r.lambda1bar));
    }
    s
}
