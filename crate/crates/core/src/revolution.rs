//! Klein-bottle metric of revolution `g₀ = φ(v)(du² + dv²/ψ(v))` with
//! `ψ = 1 + 8cos²v` and `φ = (9 + ψ²)/ψ`.
//!
//! For `u`-frequency `ω` the Laplacian separates into
//! `−(√ψ w′)′ + (ω²/√ψ) w = λ (φ/√ψ) w` on the `v`-circle of length `π`.
//! The periodic central-difference operator commutes with `v ↦ −v`, so it
//! splits exactly into an even pencil on `[0, π/2]` (Neumann, half weights
//! at both ends) and an odd pencil (Dirichlet). Both are symmetric
//! tridiagonal and are solved by Sturm-sequence bisection.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::complete_e;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

/// `φ(v)(du² + dv²/ψ(v))`, `π`-periodic in `v`.
#[derive(Debug, Clone, Copy)]
pub struct RevolutionMetric {
    psi: fn(f64) -> f64,
    phi: fn(f64) -> f64,
    /// Length of the `u`-circle.
    pub u_period: f64,
}

fn psi_g0(v: f64) -> f64 {
    1.0 + 8.0 * v.cos().powi(2)
}

fn phi_g0(v: f64) -> f64 {
    let p = psi_g0(v);
    (9.0 + p * p) / p
}

impl RevolutionMetric {
    pub fn g0() -> Self {
        Self { psi: psi_g0, phi: phi_g0, u_period: PI / 2.0 }
    }

    pub fn psi(&self, v: f64) -> f64 {
        (self.psi)(v)
    }

    pub fn phi(&self, v: f64) -> f64 {
        (self.phi)(v)
    }

    /// `√det g = φ/√ψ`.
    pub fn area_density(&self, v: f64) -> f64 {
        self.phi(v) / self.psi(v).sqrt()
    }

    /// Area of `[0, u_period) × [0, π)` by the periodic trapezoid rule.
    pub fn area(&self, n: usize) -> f64 {
        let h = PI / n as f64;
        self.u_period * h * (0..n).map(|i| self.area_density(i as f64 * h)).sum::<f64>()
    }

    /// Reduced problem at `u`-frequency `omega` on `n` periodic nodes.
    pub fn separate(&self, omega: f64, n: usize) -> Result<SturmLiouvilleProblem> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!("resolution {n} must be even and ≥ 8")));
        }
        let h = PI / n as f64;
        let v = |i: usize| i as f64 * h;
        Ok(SturmLiouvilleProblem {
            omega,
            n,
            p_half: (0..n).map(|i| self.psi(v(i) + 0.5 * h).sqrt()).collect(),
            q: (0..n).map(|i| omega * omega / self.psi(v(i)).sqrt()).collect(),
            rho: (0..n).map(|i| self.area_density(v(i))).collect(),
        })
    }
}

/// Periodic `−(p w′)′ + q w = λ ρ w` on `n` nodes `v_i = iπ/n`, with `p`
/// sampled at the midpoints `v_{i+½}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmLiouvilleProblem {
    pub omega: f64,
    pub n: usize,
    pub p_half: Vec<f64>,
    pub q: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Standard-form symmetric tridiagonal matrix `W^{-1/2} T W^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    /// `W^{1/2}`, to map eigenvectors back.
    pub weight_sqrt: Vec<f64>,
}

impl SturmLiouvilleProblem {
    fn h(&self) -> f64 {
        PI / self.n as f64
    }

    /// Dense periodic pencil `(A, diag ρ)`; for tests at small `n`.
    pub fn dense(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.n;
        let h2 = self.h().powi(2);
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            a[i][i] += (self.p_half[i] + self.p_half[im]) / h2 + self.q[i];
            a[i][ip] -= self.p_half[i] / h2;
            a[i][im] -= self.p_half[im] / h2;
        }
        (a, self.rho.clone())
    }

    /// Restriction to grid functions of the given parity under `v ↦ −v`.
    pub fn restricted(&self, parity: Parity) -> Tridiagonal {
        let half = self.n / 2;
        let h2 = self.h().powi(2);
        let p = &self.p_half;
        // Even unknowns w_0 … w_half with weights ½, 1, …, 1, ½; odd
        // unknowns w_1 … w_{half−1}. Both come from the symmetric basis
        // (e_i ± e_{−i})/2 of the periodic grid.
        let (lo, hi) = match parity {
            Parity::Even => (0, half),
            Parity::Odd => (1, half - 1),
        };
        let mut diag = Vec::with_capacity(hi - lo + 1);
        let mut off = Vec::with_capacity(hi - lo);
        let mut w = Vec::with_capacity(hi - lo + 1);
        for i in lo..=hi {
            let end = parity == Parity::Even && (i == 0 || i == half);
            let c = if end { 0.5 } else { 1.0 };
            let pm = if i == 0 { p[self.n - 1] } else { p[i - 1] };
            diag.push(c * ((p[i] + pm) / h2 + self.q[i]));
            w.push(c * self.rho[i]);
            if i < hi {
                off.push(-p[i] / h2);
            }
        }
        let ws: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        for i in 0..diag.len() {
            diag[i] /= ws[i] * ws[i];
        }
        for i in 0..off.len() {
            off[i] /= ws[i] * ws[i + 1];
        }
        Tridiagonal { diag, off, weight_sqrt: ws }
    }

    /// Lowest `count` eigenvalues of the given parity.
    pub fn eigenvalues(&self, parity: Parity, count: usize) -> Vec<f64> {
        let t = self.restricted(parity);
        (0..count.min(t.diag.len())).map(|k| t.eigenvalue(k)).collect()
    }

    /// The `k`-th eigenvector of the given parity as grid values on the
    /// half-circle nodes (`v_0 … v_{n/2}` for even, `v_1 … v_{n/2−1}` for odd).
    pub fn eigenvector(&self, parity: Parity, k: usize) -> Vec<f64> {
        let t = self.restricted(parity);
        let y = t.eigenvector(k);
        y.iter().zip(&t.weight_sqrt).map(|(a, w)| a / w).collect()
    }
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x` (Sturm count of the LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1].powi(2) };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * scale {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration at the bisected eigenvalue, unit 2-norm.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let n = self.diag.len();
        let lam = self.eigenvalue(k);
        let shift = lam + 1e-10 * lam.abs().max(1.0);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            x = self.solve_shifted(shift, &x);
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        x
    }

    /// `(T − σI)⁻¹ r` by the Thomas algorithm.
    fn solve_shifted(&self, sigma: f64, r: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0] - sigma;
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = r[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - sigma - self.off[i - 1] * c[i - 1];
            if denom == 0.0 {
                denom = f64::EPSILON;
            }
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            d[i] = (r[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }
}

/// Sign changes of a grid function, ignoring exact zeros.
pub fn sign_changes(w: &[f64]) -> usize {
    let tol = 1e-12 * w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let signs: Vec<bool> = w.iter().filter(|x| x.abs() > tol).map(|x| *x > 0.0).collect();
    signs.windows(2).filter(|s| s[0] != s[1]).count()
}

/// Which `(u-frequency, parity)` modes descend to a quotient of the
/// `(u, v)` plane, and its area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Identification {
    /// Torus `u mod π/2`, `v mod π`: all frequencies `4k`, both parities.
    Rectangle,
    /// `(u, v) ~ (u + π/4, −v)` on the rectangle: frequency `4k` with parity
    /// `(−1)^k`. Half the rectangle's area.
    QuarterGlide,
    /// `(u, v) ~ (u + π/2, −v)` on `u mod π`: frequency `2j` with parity `(−1)^j`.
    HalfGlide,
}

impl Identification {
    pub const ALL: [Identification; 3] = [Self::Rectangle, Self::QuarterGlide, Self::HalfGlide];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rectangle => "rectangle",
            Self::QuarterGlide => "quarter-glide",
            Self::HalfGlide => "half-glide",
        }
    }

    /// `(ω, parity)` pairs with `ω ≤ max_omega`.
    pub fn modes(self, max_omega: u32) -> Vec<(u32, Parity)> {
        let mut out = Vec::new();
        match self {
            Self::Rectangle => {
                for w in (0..=max_omega).step_by(4) {
                    out.push((w, Parity::Even));
                    out.push((w, Parity::Odd));
                }
            }
            Self::QuarterGlide => {
                for (k, w) in (0..=max_omega).step_by(4).enumerate() {
                    out.push((w, if k % 2 == 0 { Parity::Even } else { Parity::Odd }));
                }
            }
            Self::HalfGlide => {
                for (j, w) in (0..=max_omega).step_by(2).enumerate() {
                    out.push((w, if j % 2 == 0 { Parity::Even } else { Parity::Odd }));
                }
            }
        }
        out
    }

    /// Area in units of the rectangle's area.
    pub fn area_factor(self) -> f64 {
        match self {
            Self::Rectangle | Self::HalfGlide => 1.0,
            Self::QuarterGlide => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub identification: Identification,
    pub name: &'static str,
    pub area: f64,
    pub lambda1: f64,
    pub frequency_of_min: u32,
    pub parity_of_min: Parity,
    pub lambda1bar: f64,
    pub ratio_to_target: f64,
    /// Nonzero eigenvalues below 2 among the descending modes.
    pub eigenvalues_below_two: usize,
}

/// `12πE(2√2/3)`.
pub fn target_lambda1bar() -> f64 {
    12.0 * PI * complete_e(2.0 * 2f64.sqrt() / 3.0).expect("modulus below one")
}

/// Largest fiber index scanned: frequencies `4k` with `k ≤ 8`.
pub const MAX_FIBER_INDEX: u32 = 8;

/// Agreement with the target value required to adopt a quotient.
pub const MATCH_REL_TOL: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KleinG0Report {
    #[serde(rename = "N")]
    pub n: usize,
    pub frequency_of_min: u32,
    pub lambda1: f64,
    pub area: f64,
    pub lambda1bar: f64,
    /// `λ̄₁/(12πE(2√2/3))`; the JSON name is part of the output format.
    #[serde(rename = "ratio_to_paper")]
    pub ratio_to_target: f64,
    pub target_lambda1bar: f64,
    /// Name of the reported quotient: the first matching candidate, else the rectangle.
    pub adopted: &'static str,
    pub matched: bool,
    pub candidates: Vec<Candidate>,
    /// Lowest first eigenvalue at the largest scanned frequency; must exceed `lambda1`.
    pub scan_bound_lambda: f64,
}

fn first_nonzero(problem: &SturmLiouvilleProblem, parity: Parity, omega: u32) -> (f64, Vec<f64>) {
    // At ω = 0 the even pencil carries the constant as its lowest mode.
    let skip = usize::from(omega == 0 && parity == Parity::Even);
    let ev = problem.eigenvalues(parity, skip + 8);
    (ev[skip], ev[skip..].to_vec())
}

/// λ̄₁ of `g₀` on each candidate quotient at resolution `n`.
pub fn klein_g0_lambda1bar(n: usize) -> Result<KleinG0Report> {
    if n < 128 {
        return Err(Error::InvalidInput(format!("resolution {n} below 128")));
    }
    let metric = RevolutionMetric::g0();
    let max_omega = 4 * MAX_FIBER_INDEX;
    let omegas: Vec<u32> = (0..=max_omega).step_by(2).collect();
    let table: Vec<(u32, Parity, f64, Vec<f64>)> = omegas
        .par_iter()
        .flat_map_iter(|&w| {
            let p = metric.separate(w as f64, n).expect("validated resolution");
            [Parity::Even, Parity::Odd].into_iter().map(move |par| {
                let (l, all) = first_nonzero(&p, par, w);
                (w, par, l, all)
            })
        })
        .collect();
    let area_rect = metric.area(n);
    let target = target_lambda1bar();
    let candidates: Vec<Candidate> = Identification::ALL
        .iter()
        .map(|&id| {
            let modes = id.modes(max_omega);
            let rows: Vec<&(u32, Parity, f64, Vec<f64>)> =
                table.iter().filter(|r| modes.contains(&(r.0, r.1))).collect();
            let best = rows.iter().min_by(|a, b| a.2.total_cmp(&b.2)).expect("nonempty mode set");
            let below: usize = rows.iter().map(|r| r.3.iter().filter(|&&x| x < 2.0).count()).sum();
            let area = area_rect * id.area_factor();
            let lambda1bar = best.2 * area;
            Candidate {
                identification: id,
                name: id.name(),
                area,
                lambda1: best.2,
                frequency_of_min: best.0,
                parity_of_min: best.1,
                lambda1bar,
                ratio_to_target: lambda1bar / target,
                eigenvalues_below_two: below,
            }
        })
        .collect();
    let matched_idx = candidates.iter().position(|c| (c.ratio_to_target - 1.0).abs() <= MATCH_REL_TOL);
    let primary = &candidates[matched_idx.unwrap_or(0)];
    let scan_bound_lambda = table
        .iter()
        .filter(|r| r.0 == max_omega)
        .map(|r| r.2)
        .fold(f64::INFINITY, f64::min);
    Ok(KleinG0Report {
        n,
        frequency_of_min: primary.frequency_of_min,
        lambda1: primary.lambda1,
        area: primary.area,
        lambda1bar: primary.lambda1bar,
        ratio_to_target: primary.ratio_to_target,
        target_lambda1bar: target,
        adopted: primary.name,
        matched: matched_idx.is_some(),
        candidates,
        scan_bound_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn coefficients_at_equator() {
        let m = RevolutionMetric::g0();
        let v = PI / 2.0;
        assert!((m.psi(v) - 1.0).abs() < 1e-15);
        assert!((m.phi(v) - 10.0).abs() < 1e-14);
        assert!((m.psi(v).sqrt() - 1.0).abs() < 1e-15);
        assert!((m.area_density(v) - 10.0).abs() < 1e-14);
        let p = m.separate(0.0, 64).unwrap();
        assert!(p.q.iter().all(|&q| q == 0.0));
        assert!(p.eigenvalues(Parity::Even, 1)[0].abs() < 1e-9);
    }

    #[test]
    fn area_is_half_the_target_value() {
        let m = RevolutionMetric::g0();
        let want = 0.5 * target_lambda1bar();
        assert!((m.area(1024) - want).abs() < 1e-11, "{} vs {want}", m.area(1024));
        assert!((target_lambda1bar() - 41.987_050_357_708_43).abs() < 1e-11);
    }

    #[test]
    fn parity_split_matches_dense_oracle() {
        let m = RevolutionMetric::g0();
        for omega in [0.0, 4.0, 6.0] {
            let p = m.separate(omega, 48).unwrap();
            let (a, rho) = p.dense();
            let n = p.n;
            let c = DMatrix::from_fn(n, n, |i, j| a[i][j] / (rho[i] * rho[j]).sqrt());
            let mut dense: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
            dense.sort_by(f64::total_cmp);
            let mut split = p.eigenvalues(Parity::Even, n);
            split.extend(p.eigenvalues(Parity::Odd, n));
            split.sort_by(f64::total_cmp);
            assert_eq!(split.len(), n);
            for (x, y) in dense.iter().zip(&split) {
                assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "ω={omega}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn even_mode_against_cosine_galerkin() {
        // Independent oracle: Galerkin in cos(2jv), j ≤ 40, with high-order
        // trapezoid quadrature, for the lowest nonconstant even ω = 0 mode.
        let m = RevolutionMetric::g0();
        let jn = 40;
        let nq = 4096;
        let h = PI / nq as f64;
        let mut k = DMatrix::<f64>::zeros(jn + 1, jn + 1);
        let mut mm = DMatrix::<f64>::zeros(jn + 1, jn + 1);
        for q in 0..nq {
            let v = q as f64 * h;
            let (p, rho) = (m.psi(v).sqrt(), m.area_density(v));
            for i in 0..=jn {
                let (ci, di) = ((2.0 * i as f64 * v).cos(), -2.0 * i as f64 * (2.0 * i as f64 * v).sin());
                for j in 0..=jn {
                    let (cj, dj) = ((2.0 * j as f64 * v).cos(), -2.0 * j as f64 * (2.0 * j as f64 * v).sin());
                    k[(i, j)] += h * p * di * dj;
                    mm[(i, j)] += h * rho * ci * cj;
                }
            }
        }
        let l = mm.cholesky().unwrap().l();
        let li = l.clone().try_inverse().unwrap();
        let c: DMatrix<f64> = &li * k * li.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let fd = m.separate(0.0, 1024).unwrap().eigenvalues(Parity::Even, 2)[1];
        assert!((ev[1] - fd).abs() < 1e-5, "{} vs {fd}", ev[1]);
        assert!((fd - 1.5536).abs() < 1e-4);
    }

    #[test]
    fn second_order_convergence() {
        let m = RevolutionMetric::g0();
        let l = |n: usize| m.separate(4.0, n).unwrap().eigenvalues(Parity::Even, 1)[0];
        let (a, b, c) = (l(128), l(256), l(512));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        let (d, e) = (l(512), l(1024));
        assert!((d - e).abs() < 1e-4 * e);
    }

    #[test]
    fn extrapolated_self_convergence() {
        // (4λ_{2N} − λ_N)/3 removes the h² term; N = 512 and N = 1024 pairs agree to 1e-6.
        let m = RevolutionMetric::g0();
        for (omega, parity) in [(0.0, Parity::Odd), (4.0, Parity::Even), (4.0, Parity::Odd), (8.0, Parity::Even)] {
            let ev = |n: usize| m.separate(omega, n).unwrap().eigenvalues(parity, 4);
            let (a, b, c) = (ev(512), ev(1024), ev(2048));
            for k in 0..4 {
                let lo = (4.0 * b[k] - a[k]) / 3.0;
                let hi = (4.0 * c[k] - b[k]) / 3.0;
                assert!((lo - hi).abs() < 1e-6 * hi, "ω={omega} {parity:?} k={k}: {lo} vs {hi}");
            }
        }
    }

    #[test]
    fn oscillation_counts() {
        let m = RevolutionMetric::g0();
        for omega in [0.0, 4.0] {
            let p = m.separate(omega, 256).unwrap();
            for k in 0..5 {
                assert_eq!(sign_changes(&p.eigenvector(Parity::Even, k)), k, "even ω={omega} k={k}");
                assert_eq!(sign_changes(&p.eigenvector(Parity::Odd, k)), k, "odd ω={omega} k={k}");
            }
        }
    }

    #[test]
    fn eigenvector_satisfies_pencil() {
        let m = RevolutionMetric::g0();
        let p = m.separate(8.0, 64).unwrap();
        let t = p.restricted(Parity::Odd);
        let y = DVector::from_vec(t.eigenvector(2));
        let n = t.diag.len();
        let a = DMatrix::from_fn(n, n, |i, j| match i as i64 - j as i64 {
            0 => t.diag[i],
            1 => t.off[j],
            -1 => t.off[i],
            _ => 0.0,
        });
        let lam = t.eigenvalue(2);
        assert!((&a * &y - &y * lam).norm() < 1e-8 * lam);
    }

    #[test]
    fn first_eigenvalue_increases_with_frequency() {
        let m = RevolutionMetric::g0();
        for parity in [Parity::Even, Parity::Odd] {
            let firsts: Vec<f64> = (1..=8).map(|k| m.separate(4.0 * k as f64, 256).unwrap().eigenvalues(parity, 1)[0]).collect();
            assert!(firsts.windows(2).all(|w| w[1] > w[0]), "{firsts:?}");
        }
    }

    #[test]
    fn candidate_mode_sets() {
        assert_eq!(Identification::QuarterGlide.modes(12), vec![(0, Parity::Even), (4, Parity::Odd), (8, Parity::Even), (12, Parity::Odd)]);
        assert_eq!(Identification::HalfGlide.modes(4), vec![(0, Parity::Even), (2, Parity::Odd), (4, Parity::Even)]);
        assert_eq!(Identification::Rectangle.modes(4).len(), 4);
    }

    #[test]
    fn report_structure() {
        let r = klein_g0_lambda1bar(256).unwrap();
        assert_eq!(r.candidates.len(), 3);
        assert!(r.scan_bound_lambda > r.lambda1);
        for c in &r.candidates {
            assert!(c.lambda1bar < 32.0 * PI);
            assert!((c.ratio_to_target - c.lambda1bar / r.target_lambda1bar).abs() < 1e-15);
        }
        assert!(klein_g0_lambda1bar(64).is_err());
    }
}
