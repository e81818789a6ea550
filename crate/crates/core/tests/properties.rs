use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use toruslab::elliptic::complete_e;
use toruslab::mobius::{conformal_area, mobius_degeneration_study, EllipticSphereMap, MobiusMap};
use toruslab::moduli::{flat_klein_spectrum, flat_torus_spectrum};
use toruslab::revolution::target_lambda1bar;
use toruslab::specsolve::{assemble, solve};
use toruslab::teich::{flat_continuity_certificate, random_modulus};
use toruslab::{ConformalFactor, KleinModulus, Modulus, Topology, TorusModulus};

#[test]
fn stated_values() {
    assert!((8.0 * PI * PI / 3f64.sqrt() - 45.5858).abs() < 1e-4);
    assert!((target_lambda1bar() / PI - 13.365).abs() < 5e-4);
    assert!((12.0 * complete_e(2.0 * 2f64.sqrt() / 3.0).unwrap() - 13.365).abs() < 5e-4);
    assert_eq!(Topology::Torus.ceiling(), 16.0 * PI);
    assert_eq!(Topology::Klein.ceiling(), 32.0 * PI);
}

#[test]
fn galerkin_flat_klein_matches_closed_form() {
    for b in [0.4, 1.0, 2.5] {
        let m = KleinModulus::new(b).unwrap();
        let closed = flat_klein_spectrum(&m, 8).unwrap();
        let g = solve(&assemble(&ConformalFactor::flat(Modulus::Klein(m)), 8).unwrap(), 8).unwrap().spectrum;
        for k in 1..=8 {
            let (a, c) = (closed.lambda(k).unwrap(), g.lambda(k).unwrap());
            assert!((a - c).abs() < 1e-8 * a, "b={b} k={k}: {a} vs {c}");
        }
    }
}

#[test]
fn flat_maximum_over_moduli_is_equilateral() {
    let eq = flat_torus_spectrum(&TorusModulus::equilateral(), 1).unwrap().lambda1bar();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let m = random_modulus(&mut rng, 3.0);
        assert!(flat_torus_spectrum(&m, 1).unwrap().lambda1bar() <= eq + 1e-12);
    }
}

#[test]
fn conformal_volume_bound_along_degeneration() {
    // λ̄₁ ≤ 2·(conformal area) with conformal area 8π for degree-2 maps.
    let rows = mobius_degeneration_study(&TorusModulus::square(), &[0.0, 0.7], 8).unwrap();
    let map = EllipticSphereMap::new(TorusModulus::square()).unwrap();
    let vc = conformal_area(&map, &MobiusMap::identity(2)).unwrap().value;
    for r in rows {
        assert!(r.lambda1bar <= 2.0 * vc, "{r:?}");
        assert!((r.area - 8.0 * PI).abs() < 1e-3 * 8.0 * PI);
    }
}

#[test]
fn continuity_certificates_on_klein_moduli() {
    for (b1, b2) in [(0.5, 0.7), (1.0, 3.0), (2.0, 2.0)] {
        let c = flat_continuity_certificate(&Modulus::Klein(KleinModulus::new(b1).unwrap()), &Modulus::Klein(KleinModulus::new(b2).unwrap())).unwrap();
        assert!(c.pass, "{c:?}");
    }
}

fn density(c: [f64; 4]) -> impl Fn(f64, f64) -> f64 + Send + Sync + 'static {
    move |s, t| {
        (c[0] * (2.0 * PI * s).cos() + c[1] * (2.0 * PI * t).sin() + c[2] * (2.0 * PI * (s + t)).cos() + c[3] * (4.0 * PI * s).sin()).exp()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn torus_galerkin_respects_ceiling(a in 0.0..0.5f64, db in 0.0..1.5f64, c in prop::array::uniform4(-0.8..0.8f64)) {
        let b = (1.0 - a * a).sqrt() + db;
        let m = Modulus::Torus(TorusModulus::new(a, b).unwrap());
        let s = solve(&assemble(&ConformalFactor::new(m, density(c)), 5).unwrap(), 2).unwrap().spectrum;
        prop_assert!(s.lambda1bar() <= 16.0 * PI);
        prop_assert!(s.lambda1() > 0.0);
    }

    #[test]
    fn klein_galerkin_respects_ceiling(b in 0.3..3.0f64, c in prop::array::uniform2(-0.8..0.8f64)) {
        let m = Modulus::Klein(KleinModulus::new(b).unwrap());
        // Invariant under (s, t) ↦ (s + ½, −t): even in t with even s-frequencies.
        let f = move |s: f64, t: f64| (c[0] * (4.0 * PI * s).cos() + c[1] * (2.0 * PI * t).cos()).exp();
        let s = solve(&assemble(&ConformalFactor::new(m, f), 5).unwrap(), 2).unwrap().spectrum;
        prop_assert!(s.lambda1bar() <= 32.0 * PI);
    }

    #[test]
    fn wp_area_is_moebius_invariant(seed in 0u64..1000, tmax in 0.1..2.0f64) {
        let map = EllipticSphereMap::new(TorusModulus::equilateral()).unwrap();
        let g = MobiusMap::random(&mut ChaCha8Rng::seed_from_u64(seed), 2, tmax);
        let a = conformal_area(&map, &g).unwrap().value;
        prop_assert!((a / (8.0 * PI) - 1.0).abs() < 1e-3);
    }
}
