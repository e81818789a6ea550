//! Complete elliptic integrals, the Weierstrass ℘-function and spherical
//! pullback factors of meromorphic maps.
//!
//! ℘ is evaluated on the normalized lattice `⟨1, τ⟩` obtained by
//! Lagrange–Gauss reduction and rotation, then rescaled. On rounded lattices
//! the Laurent series about the nearest lattice point converges on the
//! whole Voronoi cell; on elongated lattices the q-expansion in `csc²` is
//! used instead.
//!
//! Meromorphic maps are handled in homogeneous form `F = N/D` together with
//! the Wronskian `W = N′D − ND′`, so the round pullback factor
//! `4|W|²/(|N|² + |D|²)²` is finite at poles of `F`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mobius::ComplexMobius;
use crate::moduli::{Lattice, TorusModulus};

/// Distance below which an evaluation point counts as a pole.
pub const POLE_RADIUS: f64 = 1e-3;

fn check_k(k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidInput(format!("elliptic modulus k = {k} outside [0, 1]")));
    }
    Ok(())
}

/// `K(k)` by the arithmetic–geometric mean; infinite at `k = 1`.
pub fn complete_k(k: f64) -> Result<f64> {
    check_k(k)?;
    if k == 1.0 {
        return Ok(f64::INFINITY);
    }
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    Ok(PI / (2.0 * a))
}

/// `E(k) = ∫₀^{π/2} √(1 − k² sin²θ) dθ` by the arithmetic–geometric mean.
///
/// With `a₀ = 1`, `b₀ = √(1−k²)`, `c₀ = k` and `cₙ = (aₙ₋₁ − bₙ₋₁)/2`,
/// `E = K · (1 − Σₙ 2^{n−1} cₙ²)`.
pub fn complete_e(k: f64) -> Result<f64> {
    check_k(k)?;
    if k == 1.0 {
        return Ok(1.0);
    }
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    let mut sum = 0.5 * k * k;
    let mut pow = 0.5;
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let c = 0.5 * (a - b);
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
        pow *= 2.0;
        sum += pow * c * c;
    }
    Ok(PI / (2.0 * a) * (1.0 - sum))
}

/// `E(k)` by the trapezoid rule on the full period of the integrand,
/// doubled until successive values agree to `1e-15`.
///
/// Independent of the AGM path; used to cross-check it.
pub fn complete_e_quadrature(k: f64) -> Result<f64> {
    check_k(k)?;
    let f = |t: f64| (1.0 - k * k * t.sin().powi(2)).max(0.0).sqrt();
    // The integrand is even and π-periodic: E = (1/2) ∫₀^π.
    let rule = |n: usize| {
        let h = PI / n as f64;
        0.5 * h * (0..n).map(|j| f(j as f64 * h)).sum::<f64>()
    };
    let mut n = 32;
    let mut prev = rule(n);
    while n < 1 << 22 {
        n *= 2;
        let cur = rule(n);
        if (cur - prev).abs() < 1e-15 {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Result of a ℘ evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WpEval {
    Value { p: Complex64, dp: Complex64 },
    /// `z` lies within [`POLE_RADIUS`] of a lattice point; `offset` is
    /// `z − ω` and `leading` the dominant term `offset⁻²`.
    NearPole { offset: Complex64, leading: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpMethod {
    Laurent,
    Trigonometric,
}

/// Weierstrass data of a lattice, immutable once built.
#[derive(Debug, Clone)]
pub struct WeierstrassData {
    lattice: Lattice,
    /// Shortest period after reduction; `z = ω₁ ζ` maps `⟨1, τ⟩` onto the lattice.
    omega1: Complex64,
    tau: Complex64,
    g2: Complex64,
    g3: Complex64,
    /// Invariants of `⟨1, τ⟩`.
    g2n: Complex64,
    g3n: Complex64,
    /// `c_k` for `k = 2..` on `⟨1, τ⟩`, stored from index 0.
    coeffs: Vec<Complex64>,
    e2: Complex64,
    method: WpMethod,
}

fn cis(x: f64) -> Complex64 {
    Complex64::new(x.cos(), x.sin())
}

fn sigma(n: u64, p: i32) -> f64 {
    (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(p)).sum()
}

impl WeierstrassData {
    pub fn new(lattice: &Lattice) -> Result<Self> {
        let l = Lattice::new(lattice.e1, lattice.e2)?;
        let mut u = Complex64::new(l.e1[0], l.e1[1]);
        let mut v = Complex64::new(l.e2[0], l.e2[1]);
        loop {
            if v.norm_sqr() < u.norm_sqr() {
                std::mem::swap(&mut u, &mut v);
            }
            let ratio = (v * u.conj()).re / u.norm_sqr();
            if ratio.abs() <= 0.5 {
                break;
            }
            v -= u * ratio.round();
        }
        let mut tau = v / u;
        if tau.im < 0.0 {
            tau = -tau;
        }
        let q = cis(2.0 * PI * tau.re) * (-2.0 * PI * tau.im).exp();
        let (mut s4, mut s6, mut s2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut qn = Complex64::new(1.0, 0.0);
        for n in 1..200u64 {
            qn *= q;
            let nf = n as f64;
            if qn.norm() * nf.powi(6) < 1e-20 {
                break;
            }
            s2 += qn * sigma(n, 1);
            s4 += qn * sigma(n, 3);
            s6 += qn * sigma(n, 5);
        }
        let g4n = (PI.powi(4) / 45.0) * (Complex64::new(1.0, 0.0) + s4 * 240.0);
        let g6n = (2.0 * PI.powi(6) / 945.0) * (Complex64::new(1.0, 0.0) - s6 * 504.0);
        let g2n = g4n * 60.0;
        let g3n = g6n * 140.0;
        let e2 = Complex64::new(1.0, 0.0) - s2 * 24.0;

        let tm = if tau.re >= 0.0 { tau - 1.0 } else { tau + 1.0 };
        let cover = tau.norm() * tm.norm() / (2.0 * tau.im);
        let method = if cover < 0.9 { WpMethod::Laurent } else { WpMethod::Trigonometric };
        let coeffs = if method == WpMethod::Laurent {
            let mut terms = 8usize;
            while terms < 400 && 8.0 * terms as f64 * cover.powi(2 * terms as i32) > 1e-18 {
                terms += 1;
            }
            laurent_coefficients(g2n, g3n, terms)
        } else {
            Vec::new()
        };

        Ok(Self {
            lattice: l,
            omega1: u,
            tau,
            g2: g2n / u.powi(4),
            g3: g3n / u.powi(6),
            g2n,
            g3n,
            coeffs,
            e2,
            method,
        })
    }

    pub fn for_modulus(m: &TorusModulus) -> Result<Self> {
        Self::new(&m.lattice())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn g2(&self) -> Complex64 {
        self.g2
    }

    pub fn g3(&self) -> Complex64 {
        self.g3
    }

    pub fn method(&self) -> WpMethod {
        self.method
    }

    /// Number of Laurent terms kept (0 on the trigonometric path).
    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    /// Nearest lattice point to `ζ` in `⟨1, τ⟩` coordinates; returns `ζ − ω`.
    fn reduce(&self, zeta: Complex64) -> Complex64 {
        let tau = self.tau;
        let n2 = (zeta.im / tau.im).round();
        let n1 = (zeta - tau * n2).re.round();
        let mut best = zeta - tau * n2 - n1;
        for d2 in -1..=1 {
            for d1 in -1..=1 {
                let w = zeta - tau * (n2 + d2 as f64) - (n1 + d1 as f64);
                if w.norm_sqr() < best.norm_sqr() {
                    best = w;
                }
            }
        }
        best
    }

    /// `(N, D, W)` of ℘ on `⟨1, τ⟩` at the reduced offset `w`:
    /// `N = 1 + w²h(w)`, `D = w²`, `W = ℘′·w⁴`.
    fn homogeneous_normalized(&self, w: Complex64) -> (Complex64, Complex64, Complex64) {
        match self.method {
            WpMethod::Laurent => {
                let w2 = w * w;
                // h(w) = Σ c_k w^{2k−2}; N = 1 + Σ c_k w^{2k}; W = −2w + Σ (2k−2) c_k w^{2k+1}.
                let mut n = Complex64::new(0.0, 0.0);
                let mut dw = Complex64::new(0.0, 0.0);
                for (i, c) in self.coeffs.iter().enumerate().rev() {
                    let k = (i + 2) as f64;
                    n = n * w2 + c;
                    dw = dw * w2 + c * (2.0 * k - 2.0);
                }
                let w4 = w2 * w2;
                (1.0 + n * w4, w2, -2.0 * w + dw * w4 * w)
            }
            WpMethod::Trigonometric => {
                if w.norm() < 1e-12 {
                    return (Complex64::new(1.0, 0.0), w * w, -2.0 * w);
                }
                let (p, dp) = self.trig_eval(w);
                let w2 = w * w;
                (p * w2, w2, dp * w2 * w2)
            }
        }
    }

    fn trig_eval(&self, w: Complex64) -> (Complex64, Complex64) {
        let tau = self.tau;
        let nmax = (45.0 / (2.0 * PI * tau.im)).ceil() as i64 + 1;
        let mut s = Complex64::new(0.0, 0.0);
        let mut ds = Complex64::new(0.0, 0.0);
        for n in -nmax..=nmax {
            let u = (w + tau * n as f64) * PI;
            let sn = u.sin();
            let csc2 = 1.0 / (sn * sn);
            s += csc2;
            ds += csc2 * (u.cos() / sn);
        }
        let p = -(PI * PI / 3.0) * self.e2 + s * (PI * PI);
        (p, ds * (-2.0 * PI.powi(3)))
    }

    /// ℘ and ℘′ at `z`, or the pole flag.
    pub fn eval(&self, z: Complex64) -> WpEval {
        let w = self.reduce(z / self.omega1);
        let offset = w * self.omega1;
        if offset.norm() < POLE_RADIUS {
            return WpEval::NearPole {
                offset,
                leading: 1.0 / (offset * offset),
            };
        }
        let (n, d, wr) = self.homogeneous_normalized(w);
        let s2 = self.omega1 * self.omega1;
        let p = n / d / s2;
        let dp = wr / (d * d) / (s2 * self.omega1);
        WpEval::Value { p, dp }
    }

    /// `(N, D, W)` of ℘ at `z` on the actual lattice; regular everywhere.
    pub fn homogeneous(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let w = self.reduce(z / self.omega1);
        let (n, d, wr) = self.homogeneous_normalized(w);
        // ℘(z) = ω₁⁻²℘ₙ(w): scale N by 1 and D by ω₁²; W = N′D − ND′ in z picks up ω₁.
        let s2 = self.omega1 * self.omega1;
        (n, d * s2, wr * self.omega1)
    }

    /// Relative residual of `(℘′)² = 4℘³ − g₂℘ − g₃` at `z`.
    pub fn residual(&self, z: Complex64) -> Option<f64> {
        match self.eval(z) {
            WpEval::Value { p, dp } => {
                let r = dp * dp - 4.0 * p * p * p + self.g2 * p + self.g3;
                let scale = dp.norm_sqr() + 4.0 * p.norm().powi(3) + (self.g2 * p).norm() + self.g3.norm();
                Some(r.norm() / scale)
            }
            WpEval::NearPole { .. } => None,
        }
    }

    /// Invariants of the normalized lattice `⟨1, τ⟩`.
    pub fn normalized_invariants(&self) -> (Complex64, Complex64, Complex64) {
        (self.tau, self.g2n, self.g3n)
    }
}

/// `c₂ = g₂/20`, `c₃ = g₃/28`,
/// `c_k = 3/((2k+1)(k−3)) · Σ_{m=2}^{k−2} c_m c_{k−m}`.
fn laurent_coefficients(g2: Complex64, g3: Complex64, terms: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); terms.max(2)];
    c[0] = g2 / 20.0;
    c[1] = g3 / 28.0;
    for k in 4..terms + 2 {
        let mut s = Complex64::new(0.0, 0.0);
        for m in 2..=k - 2 {
            s += c[m - 2] * c[k - m - 2];
        }
        c[k - 2] = s * (3.0 / ((2 * k + 1) as f64 * (k - 3) as f64));
    }
    c
}

/// A meromorphic map `F = N/D` in homogeneous form with `W = N′D − ND′`.
pub trait MeromorphicMap: Sync {
    fn homogeneous(&self, z: Complex64) -> (Complex64, Complex64, Complex64);
}

/// `F(z) = z`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap;

impl MeromorphicMap for IdentityMap {
    fn homogeneous(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        (z, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }
}

/// `γ ∘ ℘` for a complex Möbius map `γ`.
#[derive(Debug, Clone)]
pub struct WeierstrassMap {
    pub data: WeierstrassData,
    pub post: ComplexMobius,
}

impl WeierstrassMap {
    pub fn new(data: WeierstrassData) -> Self {
        Self {
            data,
            post: ComplexMobius::identity(),
        }
    }

    pub fn composed(&self, g: &ComplexMobius) -> Self {
        Self {
            data: self.data.clone(),
            post: g.compose(&self.post),
        }
    }

    /// Branch points in one cell: the three half periods (℘′ = 0) and the
    /// lattice point (a double pole, where `1/℘` is branched).
    pub fn branch_points(&self) -> [Complex64; 4] {
        let l = self.data.lattice();
        let w1 = Complex64::new(l.e1[0], l.e1[1]);
        let w2 = Complex64::new(l.e2[0], l.e2[1]);
        [Complex64::new(0.0, 0.0), w1 / 2.0, w2 / 2.0, (w1 + w2) / 2.0]
    }

    /// Degree of ℘: one double pole per cell.
    pub fn degree(&self) -> u32 {
        2
    }
}

impl MeromorphicMap for WeierstrassMap {
    fn homogeneous(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let (n, d, w) = self.data.homogeneous(z);
        self.post.act_homogeneous(n, d, w)
    }
}

/// Round-metric pullback factor `4|W|²/(|N|² + |D|²)²`.
pub fn sphere_pullback_factor(f: &dyn MeromorphicMap, z: Complex64) -> f64 {
    let (n, d, w) = f.homogeneous(z);
    let s = n.norm_sqr() + d.norm_sqr();
    4.0 * w.norm_sqr() / (s * s)
}

/// Point of S² ⊂ ℝ³ under inverse stereographic projection of `N/D`.
pub fn sphere_point(f: &dyn MeromorphicMap, z: Complex64) -> [f64; 3] {
    let (n, d, _) = f.homogeneous(z);
    let s = n.norm_sqr() + d.norm_sqr();
    let nd = n * d.conj();
    [2.0 * nd.re / s, 2.0 * nd.im / s, (n.norm_sqr() - d.norm_sqr()) / s]
}

/// Midpoint rule at `n²` and `(2n)²` nodes over a lattice cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellIntegral {
    pub value: f64,
    pub coarse: f64,
    pub rel_diff: f64,
}

/// `∫_cell g(z) dA` by tensor midpoint rules on the cell spanned by the
/// lattice basis. Midpoints never hit lattice points or half periods.
pub fn integrate_cell(lattice: &Lattice, n: usize, g: impl Fn(Complex64) -> f64 + Sync) -> CellIntegral {
    let rule = |n: usize| {
        let e1 = Complex64::new(lattice.e1[0], lattice.e1[1]);
        let e2 = Complex64::new(lattice.e2[0], lattice.e2[1]);
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let z = e1 * ((i as f64 + 0.5) * h) + e2 * ((j as f64 + 0.5) * h);
                s += g(z);
            }
        }
        s * h * h * lattice.area()
    };
    let coarse = rule(n);
    let value = rule(2 * n);
    CellIntegral {
        value,
        coarse,
        rel_diff: ((value - coarse) / value).abs(),
    }
}

/// Area of `F*g_can` over a cell; `4π·deg F` for a holomorphic `F`.
pub fn pullback_area(f: &dyn MeromorphicMap, lattice: &Lattice, n: usize) -> CellIntegral {
    integrate_cell(lattice, n, |z| sphere_pullback_factor(f, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn e_endpoints() {
        assert!((complete_e(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(complete_e(1.0).unwrap(), 1.0);
        assert!(complete_e(1.5).is_err());
        assert!(complete_e(-0.1).is_err());
    }

    #[test]
    fn e_at_two_root_two_thirds() {
        let k = 2.0 * 2f64.sqrt() / 3.0;
        let e = complete_e(k).unwrap();
        let q = complete_e_quadrature(k).unwrap();
        assert!((e - q).abs() < 1e-12);
        // Frozen from a 30-digit mpmath evaluation.
        assert!((e - 1.113_741_101_712_938_2).abs() < 1e-13, "{e}");
        assert!((12.0 * e - 13.365).abs() < 1e-3);
    }

    #[test]
    fn k_matches_quadrature() {
        // K(k) = ∫ dθ/√(1 − k² sin²θ), trapezoid on the π-period.
        for k in [0.1, 0.5, 0.9] {
            let n = 4096;
            let h = PI / n as f64;
            let q: f64 = 0.5 * h * (0..n).map(|j| 1.0 / (1.0 - k * k * (j as f64 * h).sin().powi(2)).sqrt()).sum::<f64>();
            assert!((complete_k(k).unwrap() - q).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn agm_matches_quadrature(k in 0.0..0.999f64) {
            let e = complete_e(k).unwrap();
            let q = complete_e_quadrature(k).unwrap();
            prop_assert!((e - q).abs() < 1e-10);
        }
    }

    /// Symmetric-box lattice sum for ℘ with Richardson on the box size:
    /// the truncation error of the box sum is O(R⁻²).
    fn lattice_sum_oracle(l: &Lattice, z: Complex64) -> Complex64 {
        let sum = |r: i64| {
            let mut s = 1.0 / (z * z);
            for m in -r..=r {
                for n in -r..=r {
                    if m == 0 && n == 0 {
                        continue;
                    }
                    let p = l.point(m, n);
                    let w = Complex64::new(p[0], p[1]);
                    s += 1.0 / ((z - w) * (z - w)) - 1.0 / (w * w);
                }
            }
            s
        };
        (sum(200) * 4.0 - sum(100)) / 3.0
    }

    #[test]
    fn p_matches_lattice_sum() {
        let sq = TorusModulus::square().lattice();
        let d = WeierstrassData::new(&sq).unwrap();
        assert_eq!(d.method(), WpMethod::Laurent);
        for z in [Complex64::new(0.21, 0.13), Complex64::new(0.4, 0.35), Complex64::new(0.05, 0.47)] {
            let WpEval::Value { p, .. } = d.eval(z) else { panic!() };
            let o = lattice_sum_oracle(&sq, z);
            assert!((p - o).norm() < 1e-6 * o.norm().max(1.0), "{p} vs {o}");
        }
    }

    #[test]
    fn square_invariants() {
        // Square lattice: g₃ = 0 and g₂ = Γ(1/4)⁸/(16π²) for unit side.
        let d = WeierstrassData::new(&TorusModulus::square().lattice()).unwrap();
        let gamma_quarter: f64 = 3.625_609_908_221_908;
        assert!(d.g3().norm() < 1e-10);
        assert!((d.g2().re - gamma_quarter.powi(8) / (16.0 * PI * PI)).abs() < 1e-9);
    }

    #[test]
    fn residual_on_grid() {
        let sq = TorusModulus::square().lattice();
        let d = WeierstrassData::new(&sq).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let z = Complex64::new((i as f64 + 0.5) / 20.0, (j as f64 + 0.5) / 20.0);
                let r = d.residual(z).unwrap();
                assert!(r < 1e-9, "residual {r} at {z}");
            }
        }
    }

    #[test]
    fn laurent_and_trigonometric_agree() {
        let d = WeierstrassData::new(&TorusModulus::square().lattice()).unwrap();
        for z in [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.45), Complex64::new(0.5, 0.5)] {
            let w = d.reduce(z / d.omega1);
            let WpEval::Value { p, dp } = d.eval(z) else { panic!() };
            let (pt, dpt) = d.trig_eval(w);
            assert!((p - pt).norm() < 1e-10 * p.norm().max(1.0));
            assert!((dp - dpt).norm() < 1e-9 * dp.norm().max(1.0));
        }
    }

    #[test]
    fn elongated_lattice_uses_fallback() {
        let l = TorusModulus::new(0.2, 3.0).unwrap().lattice();
        let d = WeierstrassData::new(&l).unwrap();
        assert_eq!(d.method(), WpMethod::Trigonometric);
        let z = Complex64::new(0.3, 1.1);
        let WpEval::Value { p, .. } = d.eval(z) else { panic!() };
        let o = lattice_sum_oracle(&l, z);
        assert!((p - o).norm() < 1e-6 * o.norm().max(1.0), "{p} vs {o}");
        assert!(d.residual(z).unwrap() < 1e-9);
    }

    #[test]
    fn pole_flag() {
        let d = WeierstrassData::new(&TorusModulus::equilateral().lattice()).unwrap();
        let om = Complex64::new(0.5, 3f64.sqrt() / 2.0);
        match d.eval(om + Complex64::new(1e-4, 0.0)) {
            WpEval::NearPole { offset, leading } => {
                assert!((offset - Complex64::new(1e-4, 0.0)).norm() < 1e-12);
                assert!((leading.re - 1e8).abs() < 1e-2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn evenness_and_periodicity() {
        let l = TorusModulus::new(0.3, 1.2).unwrap().lattice();
        let d = WeierstrassData::new(&l).unwrap();
        let z = Complex64::new(0.37, 0.29);
        let get = |z| match d.eval(z) {
            WpEval::Value { p, .. } => p,
            _ => panic!(),
        };
        assert!((get(z) - get(-z)).norm() < 1e-10 * get(z).norm());
        for (m, n) in [(1, 0), (0, 1), (-2, 3)] {
            let w = l.point(m, n);
            let zz = z + Complex64::new(w[0], w[1]);
            assert!((get(z) - get(zz)).norm() < 1e-9 * get(z).norm());
        }
    }

    #[test]
    fn identity_factor() {
        assert_eq!(sphere_pullback_factor(&IdentityMap, Complex64::new(0.0, 0.0)), 4.0);
    }

    #[test]
    fn wp_area_is_eight_pi() {
        let m = TorusModulus::square();
        let f = WeierstrassMap::new(WeierstrassData::for_modulus(&m).unwrap());
        let a = pullback_area(&f, &m.lattice(), 96);
        assert!((a.value - 8.0 * PI).abs() < 1e-6, "{a:?}");
        for t in [0.5, 0.9] {
            let g = f.composed(&ComplexMobius::chart_dilation(t));
            let a = pullback_area(&g, &m.lattice(), 192);
            assert!((a.value / (8.0 * PI) - 1.0).abs() < 1e-3, "t={t}: {a:?}");
        }
    }

    #[test]
    fn factor_vanishes_quadratically_at_branch_points() {
        let m = TorusModulus::new(0.1, 1.1).unwrap();
        let f = WeierstrassMap::new(WeierstrassData::for_modulus(&m).unwrap());
        for bp in f.branch_points() {
            let h = 1e-3;
            let f1 = sphere_pullback_factor(&f, bp + Complex64::new(h, 0.0));
            let f2 = sphere_pullback_factor(&f, bp + Complex64::new(2.0 * h, 0.0));
            assert!(sphere_pullback_factor(&f, bp) < 1e-20);
            let order = (f2 / f1).log2();
            assert!((order - 2.0).abs() < 0.01, "order {order} at {bp}");
        }
        // Away from branch points the factor is positive.
        assert!(sphere_pullback_factor(&f, Complex64::new(0.2, 0.3)) > 1e-3);
    }

    #[test]
    fn sphere_point_is_unit() {
        let f = WeierstrassMap::new(WeierstrassData::new(&TorusModulus::square().lattice()).unwrap());
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.7), Complex64::new(0.5, 0.5)] {
            let p = sphere_point(&f, z);
            assert!((p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 1.0).abs() < 1e-12);
        }
    }
}
