//! Lattices, the fundamental domain 𝓜 and closed-form flat spectra.
//!
//! A flat torus is `ℂ/Γ` for a lattice `Γ`; up to homothety, rotation and
//! reflection it is `ℂ/⟨1, a+ib⟩` with `(a, b)` in
//! `𝓜 = {0 ≤ a ≤ 1/2, a² + b² ≥ 1, b > 0}`. Its Laplace eigenvalues are
//! `4π²|ξ|²` for `ξ` in the dual lattice.
//!
//! The flat Klein bottle `K_b` is the quotient of `ℂ` by
//! `t_b(z) = z + ib` and `τ(x+iy) = x + π − iy`. Its spectrum is the
//! τ-invariant part of the spectrum of the double cover `ℂ/⟨2π, ib⟩`.
//!
//! [`Spectrum::new`] is the single constructor for every spectrum in the
//! crate, and it rejects any normalized eigenvalue above the topological
//! ceiling (16π for the torus, 32π for the Klein bottle).

use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};

/// Slack on the boundary inequalities of 𝓜.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// Absolute slack allowed above a ceiling.
pub const CEILING_TOL: f64 = 1e-9;

/// Eigenvalues within this fraction of `λ₁` form one cluster.
pub const CLUSTER_REL_TOL: f64 = 1e-6;

static SPECTRA_CHECKED: AtomicU64 = AtomicU64::new(0);
static SPECTRA_REJECTED: AtomicU64 = AtomicU64::new(0);

/// Number of spectra that passed through the ceiling check, and how many
/// were rejected, since process start.
pub fn ceiling_check_counts() -> (u64, u64) {
    (
        SPECTRA_CHECKED.load(Ordering::Relaxed),
        SPECTRA_REJECTED.load(Ordering::Relaxed),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Klein,
}

impl Topology {
    /// Orientable genus of the surface or of its orientable double cover.
    pub fn genus(self) -> u32 {
        1
    }

    /// `8π⌊(γ+3)/2⌋` for the torus, `16π⌊(γ+3)/2⌋` for the Klein bottle.
    pub fn ceiling(self) -> f64 {
        let floor = ((self.genus() + 3) / 2) as f64;
        match self {
            Topology::Torus => 8.0 * PI * floor,
            Topology::Klein => 16.0 * PI * floor,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::Torus => "torus",
            Topology::Klein => "klein",
        }
    }
}

/// A point `(a, b)` of 𝓜, standing for `ℂ/⟨1, a+ib⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusModulus {
    pub a: f64,
    pub b: f64,
}

impl TorusModulus {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidModulus(format!("non-finite ({a}, {b})")));
        }
        let ok = b > 0.0
            && (-MEMBERSHIP_TOL..=0.5 + MEMBERSHIP_TOL).contains(&a)
            && a * a + b * b >= 1.0 - MEMBERSHIP_TOL;
        if !ok {
            return Err(Error::InvalidModulus(format!(
                "({a}, {b}) is not in the fundamental domain"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn square() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    pub fn equilateral() -> Self {
        Self {
            a: 0.5,
            b: 3f64.sqrt() / 2.0,
        }
    }

    /// Flat area of `ℂ/⟨1, a+ib⟩`.
    pub fn area(&self) -> f64 {
        self.b
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            e1: [1.0, 0.0],
            e2: [self.a, self.b],
        }
    }
}

impl fmt::Display for TorusModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

/// Translation length `b` of `t_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KleinModulus {
    pub b: f64,
}

impl KleinModulus {
    pub fn new(b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidModulus(format!("Klein modulus b = {b} must be > 0")));
        }
        Ok(Self { b })
    }

    /// Area of the flat fundamental domain `[0,π]×[0,b]`.
    pub fn area(&self) -> f64 {
        PI * self.b
    }

    /// The orientable double cover `ℂ/⟨2π, ib⟩`.
    pub fn double_cover(&self) -> Lattice {
        Lattice {
            e1: [2.0 * PI, 0.0],
            e2: [0.0, self.b],
        }
    }
}

impl fmt::Display for KleinModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Modulus {
    Torus(TorusModulus),
    Klein(KleinModulus),
}

impl Modulus {
    pub fn topology(&self) -> Topology {
        match self {
            Modulus::Torus(_) => Topology::Torus,
            Modulus::Klein(_) => Topology::Klein,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Modulus::Torus(m) => m.area(),
            Modulus::Klein(m) => m.area(),
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Torus(m) => write!(f, "torus:{m}"),
            Modulus::Klein(m) => write!(f, "klein:{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice {
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

impl Lattice {
    pub fn new(e1: [f64; 2], e2: [f64; 2]) -> Result<Self> {
        let l = Self { e1, e2 };
        l.check()?;
        Ok(l)
    }

    pub fn det(&self) -> f64 {
        self.e1[0] * self.e2[1] - self.e1[1] * self.e2[0]
    }

    /// Sign of `det[e1 e2]`.
    pub fn orientation(&self) -> i8 {
        if self.det() >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn area(&self) -> f64 {
        self.det().abs()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            e1: [c * self.e1[0], c * self.e1[1]],
            e2: [c * self.e2[0], c * self.e2[1]],
        }
    }

    pub fn point(&self, m: i64, n: i64) -> [f64; 2] {
        let (m, n) = (m as f64, n as f64);
        [
            m * self.e1[0] + n * self.e2[0],
            m * self.e1[1] + n * self.e2[1],
        ]
    }

    fn basis(&self) -> Matrix2<f64> {
        Matrix2::new(self.e1[0], self.e2[0], self.e1[1], self.e2[1])
    }

    fn check(&self) -> Result<()> {
        let scale = norm(self.e1) * norm(self.e2);
        let det = self.det();
        if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-12 * scale {
            return Err(Error::DegenerateLattice { det });
        }
        Ok(())
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

/// Lagrange–Gauss reduction followed by reflection into 𝓜.
pub fn reduce_to_fundamental_domain(lattice: &Lattice) -> Result<TorusModulus> {
    lattice.check()?;
    let (mut u, mut v) = (lattice.e1, lattice.e2);
    loop {
        if dot(v, v) < dot(u, u) {
            std::mem::swap(&mut u, &mut v);
        }
        let ratio = dot(u, v) / dot(u, u);
        if ratio.abs() <= 0.5 {
            break;
        }
        let mu = ratio.round();
        v = [v[0] - mu * u[0], v[1] - mu * u[1]];
    }
    // τ = v / u as complex numbers.
    let uu = dot(u, u);
    let re = dot(u, v) / uu;
    let im = (u[0] * v[1] - u[1] * v[0]) / uu;
    let a = re.abs().min(0.5);
    let b = im.abs();
    // |τ| ≥ 1 holds exactly after reduction; rounding can dip below by an ulp.
    let b = if a * a + b * b < 1.0 { (1.0 - a * a).sqrt() } else { b };
    TorusModulus::new(a, b)
}

/// Reciprocal lattice `B^{-T}`: `⟨ξᵢ, eⱼ⟩ = δᵢⱼ`.
pub fn dual_lattice(lattice: &Lattice) -> Result<Lattice> {
    lattice.check()?;
    let inv_t = lattice
        .basis()
        .try_inverse()
        .ok_or(Error::DegenerateLattice { det: lattice.det() })?
        .transpose();
    Ok(Lattice {
        e1: [inv_t[(0, 0)], inv_t[(1, 0)]],
        e2: [inv_t[(0, 1)], inv_t[(1, 1)]],
    })
}

/// Ordered eigenvalues with cluster structure and area.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    multiplicities: Vec<(f64, usize)>,
    area: f64,
    topology: Topology,
}

impl Spectrum {
    /// Sorts, clusters and checks `λ̄₁` against the ceiling of `topology`.
    ///
    /// `eigenvalues` must contain `λ₀ = 0` and at least one positive value.
    /// Values within `1e-9·max` of zero from round-off are clamped to zero.
    pub fn new(mut eigenvalues: Vec<f64>, area: f64, topology: Topology) -> Result<Self> {
        if eigenvalues.len() < 2 {
            return Err(Error::InvalidInput("spectrum needs λ₀ and λ₁".into()));
        }
        if !(area.is_finite() && area > 0.0) {
            return Err(Error::InvalidInput(format!("area {area} must be positive")));
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(|x, y| x.total_cmp(y));
        let top = eigenvalues.last().copied().unwrap_or(0.0).abs();
        if eigenvalues[0] < -1e-9 * top.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "negative eigenvalue {}",
                eigenvalues[0]
            )));
        }
        for x in eigenvalues.iter_mut() {
            if x.abs() <= 1e-9 * top.max(1.0) {
                *x = 0.0;
            }
        }
        if eigenvalues[1] <= 0.0 {
            return Err(Error::InvalidInput(
                "λ₀ must be simple (connected surface)".into(),
            ));
        }
        SPECTRA_CHECKED.fetch_add(1, Ordering::Relaxed);
        let ceiling = topology.ceiling();
        let l1bar = eigenvalues[1] * area;
        if l1bar > ceiling + CEILING_TOL {
            SPECTRA_REJECTED.fetch_add(1, Ordering::Relaxed);
            return Err(Error::CeilingViolation {
                value: l1bar,
                ceiling,
                topology: topology.name(),
            });
        }
        let multiplicities = cluster(&eigenvalues, CLUSTER_REL_TOL * eigenvalues[1]);
        Ok(Self {
            eigenvalues,
            multiplicities,
            area,
            topology,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Distinct values with multiplicities, λ₀ first.
    pub fn multiplicities(&self) -> &[(f64, usize)] {
        &self.multiplicities
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn lambda(&self, k: usize) -> Option<f64> {
        self.eigenvalues.get(k).copied()
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn lambda1bar(&self) -> f64 {
        self.eigenvalues[1] * self.area
    }

    /// Multiplicity of the λ₁ cluster.
    pub fn lambda1_multiplicity(&self) -> usize {
        self.multiplicities.get(1).map_or(0, |c| c.1)
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|x| x * self.area).collect()
    }
}

fn cluster(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut start = 0.0;
    for &x in sorted {
        match out.last_mut() {
            Some(last) if (x - start).abs() <= tol => last.1 += 1,
            _ => {
                out.push((x, 1));
                start = x;
            }
        }
    }
    out
}

/// Smallest singular value of the basis matrix.
fn sigma_min(lattice: &Lattice) -> f64 {
    let sv = lattice.basis().singular_values();
    sv[0].min(sv[1])
}

/// Box enumeration of `|ξ|²` over `ξ = m d₁ + n d₂`, `|m|,|n| ≤ R`, grown
/// until at least `need` accepted points lie inside the certified radius
/// `σ_min·R` (no point outside the box is shorter than that radius).
/// `weight(m, n)` returns how many eigenfunctions the index contributes.
fn enumerate_dual(
    dual: &Lattice,
    need: usize,
    weight: impl Fn(i64, i64) -> usize,
) -> Vec<(f64, usize)> {
    let smin = sigma_min(dual);
    let mut r: i64 = 2;
    loop {
        let certified = smin * r as f64;
        let cert2 = certified * certified;
        let mut pts: Vec<(f64, usize)> = Vec::new();
        for m in -r..=r {
            for n in -r..=r {
                let w = weight(m, n);
                if w == 0 {
                    continue;
                }
                let p = dual.point(m, n);
                pts.push((dot(p, p), w));
            }
        }
        let inside: usize = pts.iter().filter(|p| p.0 <= cert2).map(|p| p.1).sum();
        if inside >= need {
            pts.retain(|p| p.0 <= cert2);
            pts.sort_by(|x, y| x.0.total_cmp(&y.0));
            return pts;
        }
        r *= 2;
    }
}

/// First `count + 1` eigenvalues (λ₀ … λ_count) of a flat torus `ℂ/Γ`.
pub fn flat_lattice_spectrum(lattice: &Lattice, count: usize) -> Result<Spectrum> {
    if count < 1 {
        return Err(Error::InvalidInput("count must be ≥ 1".into()));
    }
    let dual = dual_lattice(lattice)?;
    let pts = enumerate_dual(&dual, 2 * (count + 1), |_, _| 1);
    let eig: Vec<f64> = pts
        .iter()
        .take(count + 1)
        .map(|p| 4.0 * PI * PI * p.0)
        .collect();
    Spectrum::new(eig, lattice.area(), Topology::Torus)
}

/// First `count + 1` eigenvalues of `ℂ/⟨1, a+ib⟩` with the flat metric.
pub fn flat_torus_spectrum(m: &TorusModulus, count: usize) -> Result<Spectrum> {
    flat_lattice_spectrum(&m.lattice(), count)
}

/// Number of τ-invariant eigenfunctions carried by the double-cover modes
/// `e^{i(mx + 2πny/b)}` and `e^{i(mx − 2πny/b)}`.
///
/// τ sends the mode `(m, n)` to `(−1)^m (m, −n)`. A pair `n ≠ 0` spans one
/// invariant function; a fixed mode `n = 0` is invariant iff `m` is even.
/// Each unordered pair is attributed to its `n > 0` member.
pub fn klein_invariant_weight(m: i64, n: i64) -> usize {
    match n.signum() {
        1 => 1,
        0 => usize::from(m % 2 == 0),
        _ => 0,
    }
}

/// First `count + 1` eigenvalues of the flat Klein bottle `K_b`.
pub fn flat_klein_spectrum(m: &KleinModulus, count: usize) -> Result<Spectrum> {
    if count < 1 {
        return Err(Error::InvalidInput("count must be ≥ 1".into()));
    }
    let dual = dual_lattice(&m.double_cover())?;
    let pts = enumerate_dual(&dual, 2 * (count + 1), klein_invariant_weight);
    let mut eig = Vec::with_capacity(count + 1);
    for (q, w) in pts {
        for _ in 0..w {
            if eig.len() <= count {
                eig.push(4.0 * PI * PI * q);
            }
        }
    }
    Spectrum::new(eig, m.area(), Topology::Klein)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub modulus: Modulus,
    pub area: f64,
    pub lambda1: f64,
    pub lambda1bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `decay[i]` is true when row `i+1` does not exceed row `i`.
    pub decay: Vec<bool>,
}

impl SweepTable {
    fn from_rows(rows: Vec<SweepRow>) -> Self {
        let decay = rows
            .windows(2)
            .map(|w| w[1].lambda1bar <= w[0].lambda1bar)
            .collect();
        Self { rows, decay }
    }

    /// True when the last `k` steps are all non-increasing.
    pub fn decaying_tail(&self, k: usize) -> bool {
        let n = self.decay.len();
        self.decay[n.saturating_sub(k)..].iter().all(|&d| d)
    }

    /// Index of the row with the largest λ̄₁.
    pub fn argmax(&self) -> Option<usize> {
        (0..self.rows.len()).max_by(|&i, &j| {
            self.rows[i]
                .lambda1bar
                .total_cmp(&self.rows[j].lambda1bar)
        })
    }

    /// `a,b,area,lambda1,lambda1bar` for tori, `b,area,lambda1,lambda1bar`
    /// for Klein bottles.
    pub fn to_csv(&self) -> String {
        let klein = matches!(self.rows.first().map(|r| r.modulus), Some(Modulus::Klein(_)));
        let mut s = String::from(if klein {
            "b,area,lambda1,lambda1bar\n"
        } else {
            "a,b,area,lambda1,lambda1bar\n"
        });
        for r in &self.rows {
            match r.modulus {
                Modulus::Torus(m) => s.push_str(&format!("{},{},", m.a, m.b)),
                Modulus::Klein(m) => s.push_str(&format!("{},", m.b)),
            }
            s.push_str(&format!("{},{},{}\n", r.area, r.lambda1, r.lambda1bar));
        }
        s
    }
}

fn row(modulus: Modulus, s: &Spectrum) -> SweepRow {
    SweepRow {
        modulus,
        area: s.area(),
        lambda1: s.lambda1(),
        lambda1bar: s.lambda1bar(),
    }
}

/// λ̄₁ of the flat representative at each torus modulus.
pub fn torus_sweep(grid: &[TorusModulus]) -> Result<SweepTable> {
    let rows = grid
        .iter()
        .map(|m| flat_torus_spectrum(m, 1).map(|s| row(Modulus::Torus(*m), &s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::from_rows(rows))
}

/// λ̄₁ of the flat Klein bottle at each modulus.
pub fn klein_sweep(grid: &[KleinModulus]) -> Result<SweepTable> {
    let rows = grid
        .iter()
        .map(|m| flat_klein_spectrum(m, 1).map(|s| row(Modulus::Klein(*m), &s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI2: f64 = PI * PI;

    /// Exhaustive search over SL(2,ℤ) with entries ≤ `r` for the image of
    /// τ with the smallest |Re| inside |τ| ≥ 1, folding the mirror.
    fn brute_force_reduce(l: &Lattice, r: i64) -> (f64, f64) {
        let uu = dot(l.e1, l.e1);
        let re = dot(l.e1, l.e2) / uu;
        let im = (l.e1[0] * l.e2[1] - l.e1[1] * l.e2[0]) / uu;
        let (re, im) = if im < 0.0 { (re, -im) } else { (re, im) };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for p in -r..=r {
            for q in -r..=r {
                for rr in -r..=r {
                    for s in -r..=r {
                        if p * s - q * rr != 1 {
                            continue;
                        }
                        // (pτ+q)/(rτ+s)
                        let (nr, ni) = (p as f64 * re + q as f64, p as f64 * im);
                        let (dr, di) = (rr as f64 * re + s as f64, rr as f64 * im);
                        let d2 = dr * dr + di * di;
                        let (x, y) = ((nr * dr + ni * di) / d2, (ni * dr - nr * di) / d2);
                        if x.abs() <= 0.5 + 1e-12 && x * x + y * y >= 1.0 - 1e-12 {
                            // Prefer the largest Im τ as a tie-break, which is unique in 𝓜.
                            let key = -y;
                            if key < best.0 {
                                best = (key, x.abs(), y);
                            }
                        }
                    }
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn square_is_reduced() {
        let m = reduce_to_fundamental_domain(&Lattice::new([1.0, 0.0], [0.0, 1.0]).unwrap()).unwrap();
        assert_eq!((m.a, m.b), (0.0, 1.0));
    }

    #[test]
    fn hexagonal_reduces_to_equilateral() {
        let l = Lattice::new([1.0, 0.0], [1.5, 3f64.sqrt() / 2.0]).unwrap();
        let m = reduce_to_fundamental_domain(&l).unwrap();
        let (a, b) = brute_force_reduce(&l, 5);
        assert!((m.a - 0.5).abs() < 1e-12 && (m.b - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((m.a - a).abs() < 1e-12 && (m.b - b).abs() < 1e-12);
    }

    #[test]
    fn rectangle_rescales() {
        let l = Lattice::new([2.0, 0.0], [0.0, 6.0]).unwrap();
        let m = reduce_to_fundamental_domain(&l).unwrap();
        assert_eq!((m.a, m.b), (0.0, 3.0));
        assert_eq!(brute_force_reduce(&l, 5), (0.0, 3.0));
    }

    #[test]
    fn collinear_rejected() {
        assert!(matches!(
            Lattice::new([1.0, 2.0], [2.0, 4.0]),
            Err(Error::DegenerateLattice { .. })
        ));
        let bad = Lattice { e1: [1.0, 0.0], e2: [3.0, 0.0] };
        assert!(reduce_to_fundamental_domain(&bad).is_err());
        assert!(dual_lattice(&bad).is_err());
    }

    #[test]
    fn dual_examples() {
        let sq = Lattice::new([1.0, 0.0], [0.0, 1.0]).unwrap();
        assert_eq!(dual_lattice(&sq).unwrap(), sq);
        let (a, b) = (0.3, 1.7);
        let d = dual_lattice(&Lattice::new([1.0, 0.0], [a, b]).unwrap()).unwrap();
        let expect = [[1.0, -a / b], [0.0, 1.0 / b]];
        for (got, want) in [d.e1, d.e2].iter().zip(expect) {
            assert!((got[0] - want[0]).abs() < 1e-14 && (got[1] - want[1]).abs() < 1e-14);
        }
        let d2 = dual_lattice(&Lattice::new([2.0, 0.0], [0.0, 2.0]).unwrap()).unwrap();
        assert_eq!(d2.e1, [0.5, 0.0]);
        assert_eq!(d2.e2, [0.0, 0.5]);
    }

    #[test]
    fn flat_torus_examples() {
        let eq = flat_torus_spectrum(&TorusModulus::equilateral(), 6).unwrap();
        assert!((eq.lambda1bar() - 8.0 * PI2 / 3f64.sqrt()).abs() < 1e-10);
        assert_eq!(eq.lambda1_multiplicity(), 6);
        let sq = flat_torus_spectrum(&TorusModulus::square(), 4).unwrap();
        assert!((sq.lambda1() - 4.0 * PI2).abs() < 1e-10);
        assert_eq!(sq.area(), 1.0);
        let r2 = flat_torus_spectrum(&TorusModulus::new(0.0, 2.0).unwrap(), 2).unwrap();
        assert!((r2.lambda1() - PI2).abs() < 1e-10 && (r2.lambda1bar() - 2.0 * PI2).abs() < 1e-10);
    }

    /// Oracle: plain enumeration of the dual lattice over |m|,|n| ≤ 10.
    fn enumeration_oracle(m: &TorusModulus, count: usize) -> Vec<f64> {
        let (a, b) = (m.a, m.b);
        let mut v = Vec::new();
        for i in -10i64..=10 {
            for j in -10i64..=10 {
                let (x, y) = (i as f64, (j as f64 - i as f64 * a) / b);
                v.push(4.0 * PI2 * (x * x + y * y));
            }
        }
        v.sort_by(|x, y| x.total_cmp(y));
        v.truncate(count + 1);
        v
    }

    #[test]
    fn flat_torus_matches_enumeration() {
        for m in [
            TorusModulus::square(),
            TorusModulus::new(0.0, 2.0).unwrap(),
            TorusModulus::new(0.31, 1.4).unwrap(),
            TorusModulus::equilateral(),
        ] {
            let s = flat_torus_spectrum(&m, 20).unwrap();
            for (x, y) in s.eigenvalues().iter().zip(enumeration_oracle(&m, 20)) {
                assert!((x - y).abs() < 1e-9 * y.max(1.0), "{m}: {x} vs {y}");
            }
        }
    }

    /// Oracle: 5-point Laplacian on the double-cover grid, restricted to
    /// τ-invariant grid functions, solved densely.
    fn klein_fd_oracle(b: f64, nx: usize, ny: usize, k: usize) -> Vec<f64> {
        use nalgebra::DMatrix;
        let (hx, hy) = (2.0 * PI / nx as f64, b / ny as f64);
        let idx = |i: usize, j: usize| (i % nx) * ny + (j % ny);
        let n = nx * ny;
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for i in 0..nx {
            for j in 0..ny {
                let c = idx(i, j);
                for (nb, w) in [
                    (idx(i + 1, j), 1.0 / (hx * hx)),
                    (idx(i + nx - 1, j), 1.0 / (hx * hx)),
                    (idx(i, j + 1), 1.0 / (hy * hy)),
                    (idx(i, j + ny - 1), 1.0 / (hy * hy)),
                ] {
                    lap[(c, nb)] -= w;
                    lap[(c, c)] += w;
                }
            }
        }
        // τ(i, j) = (i + nx/2, −j): orthonormal basis of invariant functions.
        let tau = |c: usize| {
            let (i, j) = (c / ny, c % ny);
            idx(i + nx / 2, (ny - j) % ny)
        };
        let mut seen = vec![false; n];
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
        for c in 0..n {
            if seen[c] {
                continue;
            }
            let t = tau(c);
            seen[c] = true;
            seen[t] = true;
            if t == c {
                cols.push(vec![(c, 1.0)]);
            } else {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                cols.push(vec![(c, s), (t, s)]);
            }
        }
        let q = DMatrix::from_fn(n, cols.len(), |r, col| {
            cols[col].iter().find(|e| e.0 == r).map_or(0.0, |e| e.1)
        });
        let a = q.transpose() * lap * &q;
        let mut ev: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev.truncate(k);
        ev
    }

    #[test]
    fn flat_klein_matches_fd_quotient() {
        for b in [PI, 2.0 * PI, 4.5] {
            let s = flat_klein_spectrum(&KleinModulus::new(b).unwrap(), 7).unwrap();
            let fd = klein_fd_oracle(b, 48, 32, 8);
            for (x, y) in s.eigenvalues().iter().zip(&fd) {
                assert!((x - y).abs() < 0.03 * x.max(1.0), "b={b}: {x} vs {y}");
            }
            // Same cluster structure.
            let fd_cl = cluster(&fd, 0.05 * fd[1]);
            let ex: Vec<usize> = s.multiplicities().iter().map(|c| c.1).collect();
            let fd_m: Vec<usize> = fd_cl.iter().map(|c| c.1).collect();
            let k = ex.len().min(fd_m.len()) - 1;
            assert_eq!(ex[..k], fd_m[..k], "b={b}");
        }
    }

    #[test]
    fn flat_klein_examples() {
        let s = flat_klein_spectrum(&KleinModulus::new(PI).unwrap(), 4).unwrap();
        assert!((s.lambda1() - 4.0).abs() < 1e-12);
        assert!((s.lambda1bar() - 4.0 * PI2).abs() < 1e-10);
        // m = ±2 at n = 0, plus m = 0 at n = 1.
        assert_eq!(s.lambda1_multiplicity(), 3);
        let s = flat_klein_spectrum(&KleinModulus::new(2.0 * PI).unwrap(), 2).unwrap();
        assert!((s.lambda1() - 1.0).abs() < 1e-12);
        assert!((s.lambda1bar() - 2.0 * PI2).abs() < 1e-10);
        let b = 40.0;
        let s = flat_klein_spectrum(&KleinModulus::new(b).unwrap(), 2).unwrap();
        assert!((s.lambda1bar() - 4.0 * PI.powi(3) / b).abs() < 1e-9);
    }

    #[test]
    fn odd_fiber_modes_are_not_invariant() {
        // e^{imx} with n = 0 picks up (−1)^m under τ.
        for m in -5..=5 {
            assert_eq!(klein_invariant_weight(m, 0), usize::from(m % 2 == 0));
        }
    }

    #[test]
    fn sweeps() {
        let ray: Vec<_> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&b| TorusModulus::new(0.0, b).unwrap())
            .collect();
        let t = torus_sweep(&ray).unwrap();
        for (r, want) in t.rows.iter().zip([4.0 * PI2, 2.0 * PI2, PI2, PI2 / 2.0]) {
            assert!((r.lambda1bar - want).abs() < 1e-9);
        }
        assert!(t.decaying_tail(3));
        assert!(t.to_csv().starts_with("a,b,area,lambda1,lambda1bar\n"));

        let ks: Vec<_> = [PI / 4.0, PI, 4.0 * PI]
            .iter()
            .map(|&b| KleinModulus::new(b).unwrap())
            .collect();
        let k = klein_sweep(&ks).unwrap();
        assert_eq!(k.argmax(), Some(1));
        assert!(k.to_csv().starts_with("b,area,lambda1,lambda1bar\n"));
    }

    #[test]
    fn grid_maximum_at_equilateral() {
        let mut grid = Vec::new();
        for i in 0..=10 {
            for j in 0..=20 {
                let a = 0.05 * i as f64;
                let b = (1.0 - a * a).sqrt() + 0.05 * j as f64;
                grid.push(TorusModulus::new(a, b).unwrap());
            }
        }
        let t = torus_sweep(&grid).unwrap();
        let best = t.rows[t.argmax().unwrap()].modulus;
        let nearest = grid
            .iter()
            .min_by(|p, q| {
                let d = |m: &TorusModulus| (m.a - 0.5).hypot(m.b - 3f64.sqrt() / 2.0);
                d(p).total_cmp(&d(q))
            })
            .unwrap();
        assert_eq!(best, Modulus::Torus(*nearest));
    }

    #[test]
    fn ceiling_rejects() {
        let e = Spectrum::new(vec![0.0, 100.0], 1.0, Topology::Torus).unwrap_err();
        assert!(matches!(e, Error::CeilingViolation { .. }));
        assert!(Spectrum::new(vec![0.0, 100.0], 1.0, Topology::Klein).is_ok());
        assert!(Spectrum::new(vec![0.0, 16.0 * PI], 1.0, Topology::Torus).is_ok());
        assert!(Spectrum::new(vec![0.0, 32.0 * PI + 1e-6], 1.0, Topology::Klein).is_err());
    }

    #[test]
    fn pairing_integral() {
        let l = Lattice::new([1.2, 0.3], [-0.4, 2.1]).unwrap();
        let d = dual_lattice(&l).unwrap();
        for (xi, g) in [(d.e1, l.e1), (d.e2, l.e2), (d.e1, l.e2), (d.e2, l.e1)] {
            let p = dot(xi, g);
            assert!((p - p.round()).abs() < 1e-12);
        }
    }

    fn lattice_strategy() -> impl Strategy<Value = Lattice> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
            .prop_filter("nondegenerate", |(a, b, c, d)| {
                (a * d - b * c).abs() > 0.05 * (a.hypot(*b) * c.hypot(*d)).max(1e-3)
            })
            .prop_map(|(a, b, c, d)| Lattice { e1: [a, b], e2: [c, d] })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn homothety_invariance(l in lattice_strategy(), c in 0.1..10.0f64) {
            let s1 = flat_lattice_spectrum(&l, 1).unwrap().lambda1bar();
            let s2 = flat_lattice_spectrum(&l.scaled(c), 1).unwrap().lambda1bar();
            prop_assert!((s1 - s2).abs() <= 1e-12 * s1);
        }

        #[test]
        fn reduction_is_idempotent(l in lattice_strategy()) {
            let m = reduce_to_fundamental_domain(&l).unwrap();
            let m2 = reduce_to_fundamental_domain(&m.lattice()).unwrap();
            prop_assert!((m.a - m2.a).abs() < 1e-12 && (m.b - m2.b).abs() < 1e-12);
        }

        #[test]
        fn reduction_preserves_spectrum(l in lattice_strategy()) {
            let m = reduce_to_fundamental_domain(&l).unwrap();
            let x = flat_lattice_spectrum(&l, 5).unwrap().normalized();
            let y = flat_torus_spectrum(&m, 5).unwrap().normalized();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() <= 1e-9 * q.max(1.0));
            }
        }

        #[test]
        fn double_dual(l in lattice_strategy()) {
            let dd = dual_lattice(&dual_lattice(&l).unwrap()).unwrap();
            for (x, y) in [(dd.e1, l.e1), (dd.e2, l.e2)] {
                prop_assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
            }
        }

        #[test]
        fn flat_values_under_ceiling(a in 0.0..0.5f64, db in 0.0..5.0f64) {
            let b = (1.0 - a * a).sqrt() + db;
            let s = flat_torus_spectrum(&TorusModulus::new(a, b).unwrap(), 1).unwrap();
            prop_assert!(s.lambda1bar() <= 16.0 * PI);
        }
    }
}
