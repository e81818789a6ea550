//! Throughput of the spectral solvers and the geometric kernels.

use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use toruslab::mobius::{conformal_area, hersch_center, CliffordTorus, EllipticSphereMap, MobiusMap, PointMeasure};
use toruslab::revolution::klein_g0_lambda1bar;
use toruslab::specsolve::{assemble, solve};
use toruslab::teich::teich_distance_tori;
use toruslab::{ConformalFactor, Modulus, TorusModulus};

fn galerkin(c: &mut Criterion) {
    let mut g = c.benchmark_group("galerkin");
    g.sample_size(10);
    let f = ConformalFactor::new(Modulus::Torus(TorusModulus::equilateral()), |s, t| {
        1.0 + 0.3 * (2.0 * PI * s).cos() * (2.0 * PI * t).sin()
    });
    for b in [4usize, 6, 8, 12] {
        g.bench_with_input(BenchmarkId::new("assemble", b), &b, |bch, &b| bch.iter(|| assemble(black_box(&f), b).unwrap()));
        let p = assemble(&f, b).unwrap();
        g.bench_with_input(BenchmarkId::new("solve", b), &p, |bch, p| bch.iter(|| solve(black_box(p), 6).unwrap()));
    }
    g.finish();
}

fn sturm_liouville(c: &mut Criterion) {
    let mut g = c.benchmark_group("klein_g0");
    g.sample_size(10);
    for n in [256usize, 1024] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, &n| bch.iter(|| klein_g0_lambda1bar(n).unwrap()));
    }
    g.finish();
}

fn geometry(c: &mut Criterion) {
    let map = EllipticSphereMap::new(TorusModulus::square()).unwrap();
    let boost = MobiusMap::dilation(&[0.0, 0.6, 0.8], 1.0).unwrap();
    c.bench_function("conformal_area_wp", |b| b.iter(|| conformal_area(&map, black_box(&boost)).unwrap()));
    let mu = PointMeasure::from_map(&CliffordTorus, 48, |_, _, j| j).unwrap().pushed(&MobiusMap::dilation(&[1.0, 0.0, 0.0, 0.0], 1.5).unwrap());
    c.bench_function("hersch_center_clifford", |b| b.iter(|| hersch_center(black_box(&mu)).unwrap()));
    let (m1, m2) = (TorusModulus::new(0.1, 1.3).unwrap(), TorusModulus::new(0.4, 2.9).unwrap());
    c.bench_function("teich_distance", |b| b.iter(|| teich_distance_tori(black_box(&m1), black_box(&m2)).unwrap()));
}

criterion_group!(benches, galerkin, sturm_liouville, geometry);
criterion_main!(benches);
