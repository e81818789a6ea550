//! Dilatation, Teichmüller distance on flat tori and Klein bottles, and the
//! eigenvalue continuity certificate `|log λ̄₁(m₂)/λ̄₁(m₁)| ≤ 2 d_T`.
//!
//! Between flat tori the extremal maps are affine, so
//! `d_T = ½ min_A log K(L_A)` over re-markings `A ∈ SL₂(ℤ)`, where `L_A` is
//! the real-linear map `1 ↦ 1`, `τ₁ ↦ A·τ₂`. Mirror tori are identified, so
//! `−τ̄₂` is searched as well.

use std::collections::HashSet;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moduli::{flat_klein_spectrum, flat_torus_spectrum, KleinModulus, Modulus, TorusModulus};

/// `x ↦ linear·x + translation` on `ℝ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMapPlane {
    pub linear: Matrix2<f64>,
    pub translation: [f64; 2],
}

impl AffineMapPlane {
    pub fn linear(linear: Matrix2<f64>) -> Self {
        Self { linear, translation: [0.0, 0.0] }
    }
}

/// `log K` of a linear map, computed without cancellation near `K = 1`:
/// `K + 1/K − 2 = ((a − d)² + (b + c)²)/det`.
fn log_dilatation(m: &Matrix2<f64>) -> Result<f64> {
    let det = m.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::InvalidInput(format!("affine map is singular (det = {det:e})")));
    }
    // An orientation-reversing map is conjugated by (x, y) ↦ (x, −y).
    let m = if det < 0.0 { Matrix2::new(m[(0, 0)], -m[(0, 1)], m[(1, 0)], -m[(1, 1)]) } else { *m };
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let delta = ((a - d).powi(2) + (b + c).powi(2)) / det.abs();
    Ok((0.5 * delta + 0.5 * (delta * (4.0 + delta)).sqrt()).ln_1p())
}

/// `K = σ_max/σ_min ≥ 1`.
pub fn dilatation(f: &AffineMapPlane) -> Result<f64> {
    Ok(log_dilatation(&f.linear)?.exp())
}

/// Upper-half-plane point `a + ib` of a modulus.
pub fn tau(m: &TorusModulus) -> Complex64 {
    Complex64::new(m.a, m.b)
}

/// `L` with `L(1) = 1`, `L(τ₁) = τ′` as a real 2×2 matrix.
pub fn marking_map(tau1: Complex64, tau_p: Complex64) -> Matrix2<f64> {
    Matrix2::new(1.0, (tau_p.re - tau1.re) / tau1.im, 0.0, tau_p.im / tau1.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeichCertificate {
    #[serde(rename = "dT")]
    pub d_t: f64,
    /// Re-marking `[[a, b], [c, d]]` of the second lattice.
    pub remarking: [[i64; 2]; 2],
    pub mirrored: bool,
    /// Extremal affine map, row-major.
    pub extremal: [[f64; 2]; 2],
    /// `e^{2 d_T}`.
    pub ratio_bound: f64,
}

pub const SEARCH_RADIUS: i64 = 10;
const MAX_SEARCH_RADIUS: i64 = 40;

type Sl2 = [[i64; 2]; 2];

fn mul(x: Sl2, y: Sl2) -> Sl2 {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

fn act(g: Sl2, z: Complex64) -> Complex64 {
    (z * g[0][0] as f64 + g[0][1] as f64) / (z * g[1][0] as f64 + g[1][1] as f64)
}

/// `(g·z, g)` with `g·z` in the closed standard fundamental domain.
fn reduce(mut z: Complex64) -> (Complex64, Sl2) {
    let mut g: Sl2 = [[1, 0], [0, 1]];
    for _ in 0..10_000 {
        let n = (z.re + 0.5).floor() as i64;
        if n != 0 {
            g = mul([[1, -n], [0, 1]], g);
            z = act([[1, -n], [0, 1]], z);
        }
        if z.norm_sqr() >= 1.0 {
            break;
        }
        g = mul([[0, -1], [1, 0]], g);
        z = -1.0 / z;
    }
    (z, g)
}

/// Both points are pre-reduced, so a small search box contains the minimizer;
/// the returned re-marking acts on the original (possibly mirrored) `τ₂`.
fn search(t1: Complex64, t2: Complex64, r: i64) -> (f64, Sl2, bool, Matrix2<f64>, bool) {
    let (r1, g1) = reduce(t1);
    let g1_inv = [[g1[1][1], -g1[0][1]], [-g1[1][0], g1[0][0]]];
    let mut best = (f64::INFINITY, [[1, 0], [0, 1]], false, Matrix2::identity(), false);
    for (mirrored, target) in [(false, t2), (true, Complex64::new(-t2.re, t2.im))] {
        let (r2, g2) = reduce(target);
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    for d in -r..=r {
                        if a * d - b * c != 1 {
                            continue;
                        }
                        let tp = act([[a, b], [c, d]], r2);
                        let lk = log_dilatation(&marking_map(r1, tp)).expect("SL2Z image stays in the upper half plane");
                        if lk < best.0 {
                            let edge = [a, b, c, d].iter().any(|x| x.abs() == r);
                            best = (lk, [[a, b], [c, d]], mirrored, Matrix2::identity(), edge);
                        }
                    }
                }
            }
        }
        if best.2 == mirrored {
            best.1 = mul(g1_inv, mul(best.1, g2));
        }
    }
    // The extremal map and its dilatation for the original pair.
    let l = marking_map(t1, act(best.1, if best.2 { Complex64::new(-t2.re, t2.im) } else { t2 }));
    best.0 = log_dilatation(&l).expect("upper half plane");
    best.3 = l;
    best
}

/// Teichmüller distance between `ℂ/⟨1, τ₁⟩` and `ℂ/⟨1, τ₂⟩` for any `τ` in
/// the upper half plane, by matrix search with entries up to 10, doubled
/// while the minimizer touches the search boundary.
pub fn teich_distance_tau(t1: Complex64, t2: Complex64) -> Result<TeichCertificate> {
    if !(t1.im > 0.0 && t2.im > 0.0) {
        return Err(Error::InvalidModulus("τ must lie in the upper half plane".into()));
    }
    let mut r = SEARCH_RADIUS;
    loop {
        let (lk, a, mirrored, l, edge) = search(t1, t2, r);
        if !edge {
            let d_t = 0.5 * lk;
            return Ok(TeichCertificate {
                d_t,
                remarking: a,
                mirrored,
                extremal: [[l[(0, 0)], l[(0, 1)]], [l[(1, 0)], l[(1, 1)]]],
                ratio_bound: (2.0 * d_t).exp(),
            });
        }
        if r >= MAX_SEARCH_RADIUS {
            return Err(Error::SearchUnstable { radius: r });
        }
        r *= 2;
    }
}

pub fn teich_distance_tori(m1: &TorusModulus, m2: &TorusModulus) -> Result<TeichCertificate> {
    teich_distance_tau(tau(m1), tau(m2))
}

/// Hyperbolic distance in the upper half plane (curvature −1).
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    let x = (z - w).norm_sqr() / (2.0 * z.im * w.im);
    // acosh(1 + x) without cancellation.
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

/// `½ min d_hyp(τ₁, γτ₂)` over words in `S, T, T⁻¹` up to length `depth`,
/// for `τ₂` and its mirror.
pub fn hyperbolic_orbit_distance(t1: Complex64, t2: Complex64, depth: usize) -> f64 {
    let key = |z: Complex64| ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64);
    let mut best = f64::INFINITY;
    for start in [t2, Complex64::new(-t2.re, t2.im)] {
        let mut seen = HashSet::new();
        let mut frontier = vec![start];
        seen.insert(key(start));
        for _ in 0..=depth {
            let mut next = Vec::new();
            for z in frontier {
                best = best.min(hyperbolic_distance(t1, z));
                for w in [-1.0 / z, z + 1.0, z - 1.0] {
                    // Orbit points far below the real line or far out cannot improve the minimum.
                    if w.im > 1e-3 && w.re.abs() < 8.0 && seen.insert(key(w)) {
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
    }
    0.5 * best
}

/// `½|log(b₂/b₁)|` from the stretch `(x, y) ↦ (x, (b₂/b₁) y)` of the double
/// covers, which commutes with `τ(x, y) = (x + π, −y)`.
pub fn teich_distance_klein(k1: &KleinModulus, k2: &KleinModulus) -> TeichCertificate {
    let s = k2.b / k1.b;
    let d_t = 0.5 * s.ln().abs();
    TeichCertificate {
        d_t,
        remarking: [[1, 0], [0, 1]],
        mirrored: false,
        extremal: [[1.0, 0.0], [0.0, s]],
        ratio_bound: (2.0 * d_t).exp(),
    }
}

/// Deviation from equivariance `|Lτ(p) − τL(p)|` of the Klein stretch.
pub fn klein_stretch_equivariance_defect(k1: &KleinModulus, k2: &KleinModulus, p: [f64; 2]) -> f64 {
    let s = k2.b / k1.b;
    let l = |q: [f64; 2]| [q[0], s * q[1]];
    let t = |q: [f64; 2]| [q[0] + std::f64::consts::PI, -q[1]];
    let (x, y) = (l(t(p)), t(l(p)));
    (x[0] - y[0]).hypot(x[1] - y[1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub m1: Modulus,
    pub m2: Modulus,
    #[serde(rename = "dT")]
    pub d_t: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub lambda1bar_1: f64,
    pub lambda1bar_2: f64,
    /// `2 d_T`.
    pub bound: f64,
    /// `bound + ε − |log(λ̄₁(m₂)/λ̄₁(m₁))|`.
    pub slack: f64,
    pub eps: f64,
    pub pass: bool,
}

pub const EPS_CLOSED_FORM: f64 = 1e-9;
pub const EPS_OPTIMIZER: f64 = 1e-2;

pub fn teich_distance(m1: &Modulus, m2: &Modulus) -> Result<TeichCertificate> {
    match (m1, m2) {
        (Modulus::Torus(a), Modulus::Torus(b)) => teich_distance_tori(a, b),
        (Modulus::Klein(a), Modulus::Klein(b)) => Ok(teich_distance_klein(a, b)),
        _ => Err(Error::InvalidInput("moduli of different topologies".into())),
    }
}

/// Checks `|log(l2/l1)| ≤ 2 d_T(m1, m2) + eps`.
pub fn continuity_certificate(m1: &Modulus, m2: &Modulus, l1: f64, l2: f64, eps: f64) -> Result<ContinuityReport> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::InvalidInput("eigenvalues must be positive".into()));
    }
    let c = teich_distance(m1, m2)?;
    let bound = 2.0 * c.d_t;
    let slack = bound + eps - (l2 / l1).ln().abs();
    Ok(ContinuityReport {
        m1: *m1,
        m2: *m2,
        d_t: c.d_t,
        k: c.ratio_bound,
        lambda1bar_1: l1,
        lambda1bar_2: l2,
        bound,
        slack,
        eps,
        pass: slack >= 0.0,
    })
}

/// Certificate with closed-form flat λ̄₁ values.
pub fn flat_continuity_certificate(m1: &Modulus, m2: &Modulus) -> Result<ContinuityReport> {
    let l = |m: &Modulus| -> Result<f64> {
        Ok(match m {
            Modulus::Torus(t) => flat_torus_spectrum(t, 1)?.lambda1bar(),
            Modulus::Klein(k) => flat_klein_spectrum(k, 1)?.lambda1bar(),
        })
    };
    continuity_certificate(m1, m2, l(m1)?, l(m2)?, EPS_CLOSED_FORM)
}

/// Uniform sample of `𝓜` truncated at `b ≤ bmax`.
pub fn random_modulus(rng: &mut impl rand::Rng, bmax: f64) -> TorusModulus {
    let a: f64 = rng.gen_range(0.0..=0.5);
    let b = rng.gen_range((1.0 - a * a).sqrt()..bmax);
    TorusModulus::new(a, b).expect("sample lies in the fundamental domain")
}
