//! Maximization of `λ̄₁ = λ₁ · mass` over densities `f = e^φ` in a fixed
//! conformal class, with `φ` a trigonometric polynomial of low degree.
//!
//! The search is a Nelder–Mead simplex with restarts. `λ₁` is the bottom of
//! its cluster, so at a multiplicity crossing the objective is the minimum
//! over the cluster, never a split branch.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moduli::{Modulus, TorusModulus, CLUSTER_REL_TOL};
use crate::specsolve::{assemble, solve, ConformalFactor, SpectrumRecord};

/// One real trigonometric mode of the log-density, in lattice
/// coordinates. For Klein bottles each mode is a τ-invariant combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LogMode {
    pub m: i64,
    pub n: i64,
    pub sine: bool,
}

/// `φ = Σ cᵢ modeᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityParameterization {
    pub base: Modulus,
    pub b_opt: usize,
    pub modes: Vec<LogMode>,
}

impl DensityParameterization {
    pub fn new(base: Modulus, b_opt: usize) -> Result<Self> {
        if b_opt < 1 {
            return Err(Error::InvalidInput("density bandwidth must be ≥ 1".into()));
        }
        let b = b_opt as i64;
        let mut modes = Vec::new();
        match base {
            Modulus::Torus(_) => {
                for m in 0..=b {
                    for n in -b..=b {
                        if m > 0 || n > 0 {
                            modes.push(LogMode { m, n, sine: false });
                            modes.push(LogMode { m, n, sine: true });
                        }
                    }
                }
            }
            Modulus::Klein(_) => {
                for m in (2..=b).step_by(2) {
                    modes.push(LogMode { m, n: 0, sine: false });
                    modes.push(LogMode { m, n: 0, sine: true });
                }
                for n in 1..=b {
                    for m in -b..=b {
                        modes.push(LogMode { m, n, sine: false });
                        modes.push(LogMode { m, n, sine: true });
                    }
                }
            }
        }
        Ok(Self { base, b_opt, modes })
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    fn klein(&self) -> bool {
        matches!(self.base, Modulus::Klein(_))
    }

    /// `φ(s, t)`.
    pub fn log_density(&self, c: &[f64], s: f64, t: f64) -> f64 {
        let klein = self.klein();
        let mut v = 0.0;
        for (mode, &ci) in self.modes.iter().zip(c) {
            if ci == 0.0 {
                continue;
            }
            let trig = |x: f64| if mode.sine { x.sin() } else { x.cos() };
            let ph = 2.0 * PI * (mode.m as f64 * s + mode.n as f64 * t);
            let mut term = trig(ph);
            if klein && mode.n != 0 {
                // Partner mode (−1)^m (m, −n) makes the combination τ-invariant.
                let sign = if mode.m % 2 == 0 { 1.0 } else { -1.0 };
                term += sign * trig(2.0 * PI * (mode.m as f64 * s - mode.n as f64 * t));
            }
            v += ci * term;
        }
        v
    }

    pub fn factor(&self, c: &[f64]) -> ConformalFactor {
        let me = Arc::new(self.clone());
        let c = c.to_vec();
        ConformalFactor::new(self.base, move |s, t| me.log_density(&c, s, t).exp())
    }
}

/// One evaluation of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub value: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationReport {
    pub modulus: Modulus,
    pub b_opt: usize,
    pub bandwidth: usize,
    pub budget: usize,
    pub seed: u64,
    pub best_lambda1bar: f64,
    pub best_coefficients: Vec<f64>,
    pub start_lambda1bar: f64,
    /// Largest value over all iterates.
    pub max_iterate: f64,
    pub trace: Vec<TraceEntry>,
    /// Evaluations whose solve failed, with the error text.
    pub skipped: Vec<(usize, String)>,
    pub restarts: usize,
    /// Class maximum when known (the equilateral class).
    pub ceiling: Option<f64>,
    pub ceiling_tol: f64,
    pub pass: bool,
}

/// Relative tolerance on the class ceiling, from bandwidth truncation.
pub const CLASS_CEILING_TOL: f64 = 2.5e-3;

/// Known class maximum: the flat metric on the equilateral class.
pub fn known_class_ceiling(m: &Modulus) -> Option<f64> {
    match m {
        Modulus::Torus(t) if (t.a - 0.5).abs() < 1e-6 && (t.b - 3f64.sqrt() / 2.0).abs() < 1e-6 => {
            Some(8.0 * PI * PI / 3f64.sqrt())
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizeConfig {
    pub b_opt: usize,
    pub bandwidth: usize,
    pub budget: usize,
    pub seed: u64,
    /// Initial coefficients drawn uniformly from `[−start_spread, start_spread]`; zero gives `φ = 0`.
    pub start_spread: f64,
    pub initial_step: f64,
}

impl Default for MaximizeConfig {
    fn default() -> Self {
        Self { b_opt: 1, bandwidth: 6, budget: 2000, seed: 0, start_spread: 0.0, initial_step: 0.25 }
    }
}

/// `λ̄₁` of `e^φ` at solver bandwidth `bandwidth`.
pub fn objective(p: &DensityParameterization, c: &[f64], bandwidth: usize) -> Result<f64> {
    let prob = assemble(&p.factor(c), bandwidth)?;
    Ok(solve(&prob, 1)?.spectrum.lambda1bar())
}

struct Tracker<'a> {
    p: &'a DensityParameterization,
    bandwidth: usize,
    budget: usize,
    evals: usize,
    best: f64,
    best_x: Vec<f64>,
    max_iterate: f64,
    trace: Vec<TraceEntry>,
    skipped: Vec<(usize, String)>,
}

impl Tracker<'_> {
    fn exhausted(&self) -> bool {
        self.evals >= self.budget
    }

    /// Evaluates a batch concurrently and records it in order. Returns the
    /// negated objective (the simplex minimizes); failed solves give +∞.
    fn eval_batch(&mut self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let room = self.budget.saturating_sub(self.evals);
        let xs = &xs[..xs.len().min(room)];
        let (p, bw) = (self.p, self.bandwidth);
        let results: Vec<Result<f64>> = xs.par_iter().map(|x| objective(p, x, bw)).collect();
        let mut out = Vec::with_capacity(xs.len());
        for (x, r) in xs.iter().zip(results) {
            self.evals += 1;
            match r {
                Ok(v) => {
                    self.max_iterate = self.max_iterate.max(v);
                    if v > self.best {
                        self.best = v;
                        self.best_x = x.clone();
                    }
                    self.trace.push(TraceEntry { evaluation: self.evals, value: v, best: self.best });
                    out.push(-v);
                }
                Err(e @ Error::CeilingViolation { .. }) => return Err(e),
                Err(e) => {
                    self.skipped.push((self.evals, e.to_string()));
                    out.push(f64::INFINITY);
                }
            }
        }
        Ok(out)
    }

    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.exhausted() {
            return Ok(None);
        }
        Ok(self.eval_batch(&[x.to_vec()])?.pop())
    }
}

/// Nelder–Mead from `x0` until the simplex collapses or the budget ends.
fn nelder_mead(t: &mut Tracker, x0: &[f64], step: f64) -> Result<()> {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut vals = t.eval_batch(&simplex)?;
    if vals.len() < simplex.len() {
        return Ok(());
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while !t.exhausted() {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let size = simplex.iter().skip(1).map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        let spread = (vals[n] - vals[0]).abs();
        if size < 1e-6 || spread < 1e-10 * vals[0].abs() {
            return Ok(());
        }
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64).collect();
        let along = |c: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + c * (simplex[n][k] - centroid[k])).collect() };
        let xr = along(-alpha);
        let Some(fr) = t.eval(&xr)? else { return Ok(()) };
        if fr < vals[0] {
            let xe = along(-gamma);
            let Some(fe) = t.eval(&xe)? else { return Ok(()) };
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, outside) = if fr < vals[n] { (along(-rho), true) } else { (along(rho), false) };
            let Some(fc) = t.eval(&xc)? else { return Ok(()) };
            let limit = if outside { fr } else { vals[n] };
            if fc < limit {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                let best = simplex[0].clone();
                let shrunk: Vec<Vec<f64>> = simplex[1..]
                    .iter()
                    .map(|v| v.iter().zip(&best).map(|(a, b)| b + sigma * (a - b)).collect())
                    .collect();
                let fs = t.eval_batch(&shrunk)?;
                for (k, f) in fs.into_iter().enumerate() {
                    simplex[k + 1] = shrunk[k].clone();
                    vals[k + 1] = f;
                }
            }
        }
    }
    Ok(())
}

/// Best `λ̄₁` found in the conformal class of `m`.
pub fn maximize_in_class(m: &Modulus, cfg: &MaximizeConfig) -> Result<OptimizationReport> {
    if cfg.budget < 1 {
        return Err(Error::InvalidInput("budget must be ≥ 1".into()));
    }
    let p = DensityParameterization::new(*m, cfg.b_opt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0: Vec<f64> = (0..p.dim())
        .map(|_| if cfg.start_spread > 0.0 { rng.gen_range(-cfg.start_spread..cfg.start_spread) } else { 0.0 })
        .collect();
    let mut t = Tracker {
        p: &p,
        bandwidth: cfg.bandwidth,
        budget: cfg.budget,
        evals: 0,
        best: f64::NEG_INFINITY,
        best_x: x0.clone(),
        max_iterate: f64::NEG_INFINITY,
        trace: Vec::new(),
        skipped: Vec::new(),
    };
    let start = t.eval(&x0)?.map(|v| -v).unwrap_or(f64::NAN);
    let mut restarts = 0;
    let mut step = cfg.initial_step;
    while !t.exhausted() {
        let from = t.best_x.clone();
        let before = t.best;
        nelder_mead(&mut t, &from, step)?;
        restarts += 1;
        if t.best <= before + 1e-12 * before.abs() {
            step *= 0.5;
            if step < 1e-5 {
                break;
            }
        }
    }
    let ceiling = known_class_ceiling(m);
    let pass = match ceiling {
        Some(c) => t.max_iterate <= c * (1.0 + CLASS_CEILING_TOL),
        None => t.max_iterate <= m.topology().ceiling(),
    };
    Ok(OptimizationReport {
        modulus: *m,
        b_opt: cfg.b_opt,
        bandwidth: cfg.bandwidth,
        budget: cfg.budget,
        seed: cfg.seed,
        best_lambda1bar: t.best,
        best_coefficients: t.best_x,
        start_lambda1bar: start,
        max_iterate: t.max_iterate,
        trace: t.trace,
        skipped: t.skipped,
        restarts,
        ceiling,
        ceiling_tol: CLASS_CEILING_TOL,
        pass,
    })
}

/// First-order change of `λ₁` along `δf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EigenGradient {
    Simple(f64),
    /// Derivatives of the cluster branches: eigenvalues of `−λ₁ Xᵀ M(δf) X`
    /// with `X` the `M`-orthonormal cluster basis. The envelope of `λ₁` is
    /// their minimum.
    Cluster { multiplicity: usize, branches: Vec<f64> },
}

impl EigenGradient {
    pub fn simple(&self) -> Result<f64> {
        match self {
            Self::Simple(d) => Ok(*d),
            Self::Cluster { multiplicity, .. } => Err(Error::MultipleEigenvalue { multiplicity: *multiplicity }),
        }
    }
}

/// `δλ₁ = −λ₁ ∫u₁²δf dV / ∫u₁² f dV` for simple `λ₁`.
pub fn eigenvalue_gradient(f: &ConformalFactor, delta: impl Fn(f64, f64) -> f64 + Sync, bandwidth: usize) -> Result<EigenGradient> {
    let p = assemble(f, bandwidth)?;
    let sol = solve(&p, 8.min(p.dim() - 1))?;
    let ev = sol.spectrum.eigenvalues();
    let l1 = ev[1];
    let mult = ev[1..].iter().take_while(|&&x| (x - l1).abs() <= CLUSTER_REL_TOL * l1).count();
    let dm = p.mass_of(&delta);
    let x = sol.vectors.columns(1, mult).into_owned();
    let g: DMatrix<f64> = x.transpose() * &dm * &x * (-l1);
    if mult == 1 {
        return Ok(EigenGradient::Simple(g[(0, 0)]));
    }
    let g = (&g + g.transpose()) * 0.5;
    let mut branches: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
    branches.sort_by(f64::total_cmp);
    Ok(EigenGradient::Cluster { multiplicity: mult, branches })
}

/// `u₁` of `f` as a coefficient vector, for diagnostics.
pub fn first_eigenvector(f: &ConformalFactor, bandwidth: usize) -> Result<DVector<f64>> {
    let p = assemble(f, bandwidth)?;
    Ok(solve(&p, 1)?.vectors.column(1).into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub modulus: Modulus,
    pub best_lambda1bar: f64,
    pub budget: usize,
    pub seed: u64,
}

/// One `φ = 0` start per modulus, run concurrently.
pub fn degeneration_sweep(ray: &[Modulus], cfg: &MaximizeConfig) -> Result<Vec<SweepEntry>> {
    ray.par_iter()
        .map(|m| {
            let r = maximize_in_class(m, cfg)?;
            Ok(SweepEntry { modulus: *m, best_lambda1bar: r.best_lambda1bar, budget: cfg.budget, seed: cfg.seed })
        })
        .collect()
}

/// `modulus,best_lambda1bar,budget,seed`, with the modulus written `a;b`
/// for tori and `b` for Klein bottles.
pub fn sweep_csv(rows: &[SweepEntry]) -> String {
    let mut s = String::from("modulus,best_lambda1bar,budget,seed\n");
    for r in rows {
        let m = match r.modulus {
            Modulus::Torus(t) => format!("{};{}", t.a, t.b),
            Modulus::Klein(k) => format!("{}", k.b),
        };
        s.push_str(&format!("{m},{},{},{}\n", r.best_lambda1bar, r.budget, r.seed));
    }
    s
}

/// The torus ray `(0, b)`.
pub fn torus_ray(bs: &[f64]) -> Result<Vec<Modulus>> {
    bs.iter().map(|&b| Ok(Modulus::Torus(TorusModulus::new(0.0, b)?))).collect()
}

/// Spectrum record of the best density in a report.
pub fn best_record(r: &OptimizationReport) -> Result<SpectrumRecord> {
    let p = DensityParameterization::new(r.modulus, r.b_opt)?;
    let prob = assemble(&p.factor(&r.best_coefficients), r.bandwidth)?;
    let s = solve(&prob, 6)?.spectrum;
    Ok(SpectrumRecord::new(&prob, &s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::KleinModulus;

    fn equilateral() -> Modulus {
        Modulus::Torus(TorusModulus::equilateral())
    }

    #[test]
    fn klein_modes_are_invariant() {
        let p = DensityParameterization::new(Modulus::Klein(KleinModulus::new(1.5).unwrap()), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (s, t) in [(0.1, 0.2), (0.77, 0.4)] {
            assert!((p.log_density(&c, s, t) - p.log_density(&c, s + 0.5, -t)).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_is_monotone_and_flat_is_feasible() {
        let cfg = MaximizeConfig { budget: 60, ..Default::default() };
        let r = maximize_in_class(&Modulus::Torus(TorusModulus::square()), &cfg).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].best >= w[0].best));
        assert!(r.best_lambda1bar >= 4.0 * PI * PI - 1e-9);
        assert!(r.trace.len() <= 60);
    }

    #[test]
    fn equilateral_stays_at_flat_value() {
        let cfg = MaximizeConfig { budget: 150, ..Default::default() };
        let r = maximize_in_class(&equilateral(), &cfg).unwrap();
        let c = 8.0 * PI * PI / 3f64.sqrt();
        assert!(r.best_lambda1bar >= 45.0 && r.best_lambda1bar <= 45.70);
        assert!(r.max_iterate <= c * (1.0 + CLASS_CEILING_TOL));
        assert!(r.pass);
    }

    #[test]
    fn random_start_returns_toward_flat() {
        let cfg = MaximizeConfig { budget: 400, seed: 9, start_spread: 0.3, ..Default::default() };
        let r = maximize_in_class(&equilateral(), &cfg).unwrap();
        let c = 8.0 * PI * PI / 3f64.sqrt();
        assert!(r.start_lambda1bar < r.best_lambda1bar);
        assert!(r.best_lambda1bar >= 0.98 * c, "{} from {}", r.best_lambda1bar, r.start_lambda1bar);
    }

    fn generic_density() -> ConformalFactor {
        ConformalFactor::new(Modulus::Torus(TorusModulus::square()), |s, t| {
            (0.3 * (2.0 * PI * s).cos() + 0.2 * (2.0 * PI * (s + 2.0 * t)).sin() + 0.1 * (2.0 * PI * t).sin()).exp()
        })
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let f = generic_density();
        let delta = |s: f64, t: f64| 0.5 + (2.0 * PI * (s - t)).cos() * 0.3 + (2.0 * PI * t).sin() * 0.2;
        let g = eigenvalue_gradient(&f, delta, 8).unwrap().simple().unwrap();
        let h = 1e-4;
        let l = |e: f64| {
            let f2 = f.clone();
            let fe = ConformalFactor::new(*f.base(), move |s, t| f2.eval(s, t) + e * delta(s, t));
            solve(&assemble(&fe, 8).unwrap(), 1).unwrap().spectrum.lambda1()
        };
        let fd = (l(h) - l(-h)) / (2.0 * h);
        assert!((g - fd).abs() < 1e-5 * fd.abs().max(1.0), "{g} vs {fd}");
    }

    #[test]
    fn homothety_direction() {
        let f = generic_density();
        let f2 = f.clone();
        let g = eigenvalue_gradient(&f, move |s, t| f2.eval(s, t), 8).unwrap().simple().unwrap();
        let l1 = solve(&assemble(&f, 8).unwrap(), 1).unwrap().spectrum.lambda1();
        assert!((g + l1).abs() < 1e-9 * l1);
    }

    #[test]
    fn cluster_is_refused() {
        let f = ConformalFactor::flat(Modulus::Torus(TorusModulus::square()));
        let g = eigenvalue_gradient(&f, |s, _| (2.0 * PI * s).cos(), 6).unwrap();
        assert!(matches!(g.simple(), Err(Error::MultipleEigenvalue { multiplicity: 4 })));
    }

    #[test]
    fn degeneration_sweep_trend() {
        let cfg = MaximizeConfig { budget: 40, ..Default::default() };
        let rows = degeneration_sweep(&torus_ray(&[1.0, 2.0, 4.0, 8.0]).unwrap(), &cfg).unwrap();
        assert!(rows.windows(2).all(|w| w[1].best_lambda1bar <= w[0].best_lambda1bar));
        assert!(rows.iter().all(|r| r.best_lambda1bar <= 16.0 * PI));
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("modulus,best_lambda1bar,budget,seed\n0;1,"));
        let klein: Vec<Modulus> = [0.5, 0.2, 0.1].iter().map(|&b| Modulus::Klein(KleinModulus::new(b).unwrap())).collect();
        let rows = degeneration_sweep(&klein, &cfg).unwrap();
        assert!(rows.last().unwrap().best_lambda1bar < 8.0 * PI);
    }
}
