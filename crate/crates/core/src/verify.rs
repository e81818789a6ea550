//! The ten acceptance checks, shared by `verify-all` and the test suite.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elliptic::{complete_e, complete_e_quadrature};
use crate::maximize::{maximize_in_class, MaximizeConfig, CLASS_CEILING_TOL};
use crate::mobius::{
    area_monotonicity_trace, capacity_test_functions, center_of_mass, conformal_area, hersch_center, mobius_degeneration_study,
    CliffordTorus, ComplexMobius, EllipticSphereMap, MobiusMap, PointMeasure, CENTERING_TOL,
};
use crate::moduli::{
    ceiling_check_counts, flat_klein_spectrum, flat_torus_spectrum, klein_sweep, torus_sweep, KleinModulus, Modulus, Spectrum, Topology,
    TorusModulus,
};
use crate::revolution::klein_g0_lambda1bar;
use crate::specsolve::{assemble, density_stability_test, solve, Cone, ConformalFactor};
use crate::teich::{flat_continuity_certificate, hyperbolic_orbit_distance, random_modulus, tau, teich_distance_tori};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Run only the fast criteria.
    pub quick: bool,
    /// Corrupt the Galerkin stiffness (negative test of the harness).
    pub fault: bool,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { quick: false, fault: false, seed: 20240917 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub time_limit: f64,
}

impl CriterionResult {
    /// `criterion N: PASS|FAIL title (t s) detail`.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2}: {} {} ({:.2} s / {:.0} s) {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.time_limit,
            self.detail
        )
    }
}

pub const TITLES: [&str; 10] = [
    "equilateral flat torus",
    "Klein bottle g0",
    "degree/area invariance",
    "Mobius degeneration",
    "capacity",
    "Hersch centering",
    "Teichmuller distance and continuity",
    "class maximization",
    "density stability",
    "global ceilings",
];

pub const TIME_LIMITS: [f64; 10] = [1.0, 10.0, 30.0, 60.0, 5.0, 30.0, 10.0, 600.0, 60.0, 60.0];

/// Criteria run under `--quick`.
pub const QUICK: [u8; 7] = [1, 2, 3, 5, 6, 7, 10];

pub fn selected(cfg: &VerifyConfig) -> Vec<u8> {
    if cfg.quick {
        QUICK.to_vec()
    } else {
        (1..=10).collect()
    }
}

/// Runs criterion `id`; the time limit is part of the verdict.
pub fn run_criterion(id: u8, cfg: &VerifyConfig) -> CriterionResult {
    assert!((1..=10).contains(&id), "criteria are numbered 1 to 10");
    let start = Instant::now();
    let outcome = match id {
        1 => criterion_1(cfg),
        2 => criterion_2(),
        3 => criterion_3(cfg),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(cfg),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        9 => criterion_9(),
        _ => criterion_10(cfg),
    };
    let seconds = start.elapsed().as_secs_f64();
    let limit = TIME_LIMITS[id as usize - 1];
    let (mut pass, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if seconds >= limit {
        pass = false;
        detail.push_str(&format!("; exceeded time limit {limit} s"));
    }
    CriterionResult { id, title: TITLES[id as usize - 1], pass, detail, seconds, time_limit: limit }
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionResult> {
    selected(cfg).into_iter().map(|id| run_criterion(id, cfg)).collect()
}

type Outcome = crate::Result<(bool, String)>;

fn criterion_1(cfg: &VerifyConfig) -> Outcome {
    let m = TorusModulus::equilateral();
    let want = 8.0 * PI * PI / 3f64.sqrt();
    let closed = flat_torus_spectrum(&m, 6)?.lambda1bar();
    let mut p = assemble(&ConformalFactor::flat(Modulus::Torus(m)), 8)?;
    if cfg.fault {
        p = p.with_stiffness_scale(1.5);
    }
    let galerkin = solve(&p, 6)?.spectrum.lambda1bar();
    let (e1, e2) = ((closed - want).abs(), (galerkin - want).abs());
    Ok((e1 < 1e-10 && e2 < 1e-8, format!("closed form {closed:.12} (err {e1:.1e} < 1e-10), Galerkin B=8 {galerkin:.12} (err {e2:.1e} < 1e-8)")))
}

fn criterion_2() -> Outcome {
    let k = 2.0 * 2f64.sqrt() / 3.0;
    let (e_agm, e_quad) = (complete_e(k)?, complete_e_quadrature(k)?);
    let cross = (e_agm - e_quad).abs();
    let r = klein_g0_lambda1bar(1024)?;
    let target = 12.0 * e_agm;
    let got = r.lambda1bar / PI;
    let rel = (got / target - 1.0).abs();
    let flat_max = 4.0 * PI * PI;
    let cands: Vec<String> = r
        .candidates
        .iter()
        .map(|c| format!("{} λ̄₁/π={:.4} (λ₁={:.4} at ω={} {:?})", c.name, c.lambda1bar / PI, c.lambda1, c.frequency_of_min, c.parity_of_min))
        .collect();
    let pass = cross < 1e-10 && rel <= 5e-3 && r.lambda1bar > flat_max;
    Ok((
        pass,
        format!(
            "λ̄₁/π = {got:.4} vs 12E = {target:.4} (rel {rel:.2e}, tol 5e-3); |E_agm − E_quad| = {cross:.1e}; above flat Klein max {flat_max:.2}: {}; candidates: {}",
            r.lambda1bar > flat_max,
            cands.join(", ")
        ),
    ))
}

fn criterion_3(cfg: &VerifyConfig) -> Outcome {
    let map = EllipticSphereMap::new(TorusModulus::square())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g = MobiusMap::random(&mut rng, 2, 1.5);
        let a = conformal_area(&map, &g)?;
        worst = worst.max((a.value / (8.0 * PI) - 1.0).abs());
    }
    let grid: Vec<f64> = (0..10).map(|k| 2.0 * k as f64 / 9.0).collect();
    let tr = area_monotonicity_trace(&CliffordTorus, &[1.0, 0.0, 0.0, 0.0], &grid)?;
    let pass = worst < 1e-3 && tr.strictly_decreasing;
    Ok((
        pass,
        format!(
            "℘ area worst rel dev {worst:.2e} (< 1e-3) over 20 maps; Clifford areas {:.4} → {:.4} strictly decreasing: {}",
            tr.rows[0].1,
            tr.rows[9].1,
            tr.strictly_decreasing
        ),
    ))
}

fn criterion_4() -> Outcome {
    let rows = mobius_degeneration_study(&TorusModulus::square(), &[0.0, 0.5, 0.9], 10)?;
    let l: Vec<f64> = rows.iter().map(|r| r.lambda1).collect();
    let decreasing = l.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && l[0] < 2.0;
    Ok((pass, format!("λ₁(t=0, 0.5, 0.9) = {:.4}, {:.4}, {:.4}; decreasing: {decreasing}; λ₁(0) < 2: {}", l[0], l[1], l[2], l[0] < 2.0)))
}

fn criterion_5() -> Outcome {
    let c = capacity_test_functions(0.1, 0.005)?;
    Ok((c.rel_err < 0.02, format!("energy {:.5} vs 2π/ln 10 = {:.5} (rel {:.2e} < 2e-2)", c.energy, c.exact, c.rel_err)))
}

/// Ten `(map, measure)` cases for centering; the last is conical.
pub fn centering_cases(seed: u64) -> crate::Result<Vec<(&'static str, PointMeasure)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sq = TorusModulus::square();
    let wp = EllipticSphereMap::new(sq)?;
    let eq = EllipticSphereMap::new(TorusModulus::equilateral())?;
    let mut out: Vec<(&'static str, PointMeasure)> = Vec::new();
    let bump = |s: f64, t: f64| 1.0 + 0.6 * (2.0 * PI * s).cos() * (2.0 * PI * t).sin();
    out.push(("℘ square, flat measure", PointMeasure::from_map(&wp, 48, |_, _, _| 1.0)?));
    out.push(("℘ equilateral, flat measure", PointMeasure::from_map(&eq, 48, |_, _, _| 1.0)?));
    for (name, t) in [("℘∘γ_0.5, pullback measure", 0.5), ("℘∘γ_0.9, pullback measure", 0.9)] {
        let m = wp.composed(&ComplexMobius::chart_dilation(t));
        out.push((name, PointMeasure::from_map(&m, 128, |_, _, j| j)?));
    }
    out.push(("℘ square, bumped measure", PointMeasure::from_map(&wp, 48, move |s, t, _| bump(s, t))?));
    for name in ["Clifford, random Möbius", "Clifford, random Möbius and density"] {
        let g = MobiusMap::random(&mut rng, 3, 1.5);
        let weighted = name.ends_with("density");
        let base = PointMeasure::from_map(&CliffordTorus, 32, move |s, t, j| if weighted { j * bump(s, t) } else { j })?;
        out.push((name, base.pushed(&g)));
    }
    let g = ComplexMobius::random(&mut rng, 0.8);
    out.push(("random ℘ postcomposition", PointMeasure::from_map(&wp.composed(&g), 48, |_, _, j| j)?));
    let g = MobiusMap::random(&mut rng, 2, 2.0);
    out.push(("℘ flat measure, random boost", PointMeasure::from_map(&wp, 48, |_, _, _| 1.0)?.pushed(&g)));
    let cone = ConformalFactor::conical(Modulus::Torus(sq), vec![Cone { point: (0.25, 0.25), order: 1.0 }], |_, _| 1.0)?;
    out.push(("℘ square, conical measure", PointMeasure::from_map(&wp, 48, move |s, t, _| cone.eval(s, t))?));
    Ok(out)
}

fn criterion_6(cfg: &VerifyConfig) -> Outcome {
    let cases = centering_cases(cfg.seed)?;
    let mut worst_res = 0.0f64;
    let mut worst_idem = 0.0f64;
    for (_, mu) in &cases {
        let c = hersch_center(mu)?;
        let centered = mu.pushed(&c.map);
        let direct = center_of_mass(&centered).iter().map(|x| x * x).sum::<f64>().sqrt();
        worst_res = worst_res.max(c.residual).max(direct);
        let again = hersch_center(&centered)?;
        let n = again.map.lorentz().nrows();
        worst_idem = worst_idem.max((again.map.lorentz() - nalgebra::DMatrix::<f64>::identity(n, n)).norm());
    }
    let pass = worst_res < CENTERING_TOL && worst_idem < 1e-6;
    Ok((pass, format!("{} cases (1 conical): worst residual {worst_res:.1e} (< 1e-8), worst idempotence defect {worst_idem:.1e} (< 1e-6)", cases.len())))
}

fn criterion_7(cfg: &VerifyConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..100 {
        let (m1, m2) = (random_modulus(&mut rng, 3.0), random_modulus(&mut rng, 3.0));
        let d = teich_distance_tori(&m1, &m2)?.d_t;
        let o = hyperbolic_orbit_distance(tau(&m1), tau(&m2), 10);
        worst = worst.max((d - o).abs());
        if !flat_continuity_certificate(&Modulus::Torus(m1), &Modulus::Torus(m2))?.pass {
            violations += 1;
        }
    }
    let tight = flat_continuity_certificate(&Modulus::Torus(TorusModulus::square()), &Modulus::Torus(TorusModulus::new(0.0, 2.0)?))?;
    let equality = (tight.slack - tight.eps).abs() < 1e-12;
    let pass = worst < 1e-9 && violations == 0 && equality && tight.pass;
    Ok((pass, format!("worst |search − oracle| {worst:.1e} (< 1e-9); {violations} certificate violations; (0,1)/(0,2) slack {:.1e} (equality: {equality})", tight.slack - tight.eps)))
}

fn criterion_8(cfg: &VerifyConfig) -> Outcome {
    let c = 8.0 * PI * PI / 3f64.sqrt();
    let mc = MaximizeConfig { b_opt: 1, bandwidth: 6, budget: 2000, seed: cfg.seed, start_spread: 0.3, initial_step: 0.25 };
    let r = maximize_in_class(&Modulus::Torus(TorusModulus::equilateral()), &mc)?;
    let ratio = r.best_lambda1bar / c;
    let worst = r.max_iterate / c;
    let pass = (0.98..=1.0 + CLASS_CEILING_TOL).contains(&ratio) && worst <= 1.0 + CLASS_CEILING_TOL;
    Ok((
        pass,
        format!(
            "terminal/ceiling {ratio:.5} ∈ [0.98, 1.0025] from start {:.4}; max iterate/ceiling {worst:.5} (≤ 1.0025); {} evaluations, {} skipped",
            r.start_lambda1bar / c,
            r.trace.len(),
            r.skipped.len()
        ),
    ))
}

/// `(name, reference, [(ε, f_ε)])`.
pub type StabilityFamily = (&'static str, ConformalFactor, Vec<(f64, ConformalFactor)>);

/// The three mollification families: a cosine perturbation of the flat
/// metric, a smoothed step, and a regularized cone.
pub fn stability_families() -> crate::Result<Vec<StabilityFamily>> {
    let base = Modulus::Torus(TorusModulus::square());
    let eps = [0.02, 0.01, 0.005];
    let flat = ConformalFactor::flat(base);
    let cosine = eps.iter().map(|&e| (e, ConformalFactor::new(base, move |s, _| 1.0 + e * (2.0 * PI * s).cos()))).collect();
    let step = ConformalFactor::new(base, |s, _| 1.5 + 0.5 * (2.0 * PI * s).sin().signum());
    let smoothed = eps.iter().map(|&e| (e, ConformalFactor::new(base, move |s, _| 1.5 + 0.5 * ((2.0 * PI * s).sin() / e).tanh()))).collect();
    let cone = ConformalFactor::conical(base, vec![Cone { point: (0.5, 0.5), order: 1.0 }], |_, _| 1.0)?;
    let regularized = eps.iter().map(|&e| (e, cone.regularized(e))).collect();
    Ok(vec![("cosine", flat, cosine), ("smoothed step", step, smoothed), ("regularized cone", cone, regularized)])
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, reference, family) in stability_families()? {
        let t = density_stability_test(&reference, &family, 8, 256)?;
        pass &= t.monotone && t.final_rel_gap < 0.01;
        let gaps: Vec<String> = t.rows.iter().map(|r| format!("{:.2e}", r.gap)).collect();
        parts.push(format!("{name}: gaps [{}] monotone {} final rel {:.2e}", gaps.join(", "), t.monotone, t.final_rel_gap));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_10(cfg: &VerifyConfig) -> Outcome {
    let (checked0, rejected0) = ceiling_check_counts();
    // Deliberate probes just above and just inside the tolerance.
    let probe = |topology: Topology, bar: f64| Spectrum::new(vec![0.0, bar], 1.0, topology).is_ok();
    let probes_ok = !probe(Topology::Torus, 16.0 * PI + 2e-9)
        && probe(Topology::Torus, 16.0 * PI + 5e-10)
        && !probe(Topology::Klein, 32.0 * PI + 2e-9)
        && probe(Topology::Klein, 32.0 * PI);
    let mut produced = Vec::new();
    let torus_grid: Vec<TorusModulus> = (0..=10)
        .flat_map(|i| {
            let a = 0.05 * i as f64;
            (0..12).map(move |j| TorusModulus::new(a, (1.0 - a * a).sqrt() + 0.25 * j as f64).expect("grid in 𝓜"))
        })
        .collect();
    produced.extend(torus_sweep(&torus_grid)?.rows.iter().map(|r| (Topology::Torus, r.lambda1bar)));
    let klein_grid: Vec<KleinModulus> = (1..=40).map(|j| KleinModulus::new(0.1 * j as f64).expect("positive")).collect();
    produced.extend(klein_sweep(&klein_grid)?.rows.iter().map(|r| (Topology::Klein, r.lambda1bar)));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..10 {
        let m = random_modulus(&mut rng, 2.0);
        produced.push((Topology::Torus, flat_torus_spectrum(&m, 4)?.lambda1bar()));
    }
    for b in [0.5, 2.0, PI] {
        produced.push((Topology::Klein, flat_klein_spectrum(&KleinModulus::new(b)?, 4)?.lambda1bar()));
        let k = Modulus::Klein(KleinModulus::new(b)?);
        let f = ConformalFactor::new(k, |s, t| 1.0 + 0.5 * (4.0 * PI * s).cos() + 0.3 * (2.0 * PI * t).cos());
        produced.push((Topology::Klein, solve(&assemble(&f, 6)?, 2)?.spectrum.lambda1bar()));
    }
    let over = produced.iter().filter(|(t, v)| *v > t.ceiling() + 1e-9).count();
    let (checked1, rejected1) = ceiling_check_counts();
    let unexpected_rejections = (rejected1 - rejected0).saturating_sub(2);
    let pass = probes_ok && over == 0 && unexpected_rejections == 0;
    Ok((
        pass,
        format!(
            "{} spectra checked at construction, {} values re-audited, {over} above ceiling; probes rejected at +2e-9 and accepted within 1e-9: {probes_ok}; unexpected rejections {unexpected_rejections}",
            checked1 - checked0,
            produced.len()
        ),
    ))
}
