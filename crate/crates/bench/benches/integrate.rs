use criterion::{criterion_group, criterion_main, Criterion};
use geofield::hamiltonian::{solve_kvector, Gauge};
use geofield::solver::integrate;
use geofield::{parse, Assignment, FieldTheory, GridSpec, Variant};

fn oscillator(c: &mut Criterion) {
    let sys = FieldTheory::new(Variant::KSymHam, 1, 1, parse("(q1^2 + p1_1^2)/2").unwrap()).unwrap();
    let x = solve_kvector(&sys, Gauge::DiagonalSplit).unwrap();
    let mut x0 = Assignment::new();
    x0.set("q1", 0.0).set("p1_1", 1.0);
    let grid = GridSpec::uniform(1, 10_000, 1e-3);
    c.bench_function("oscillator 10k steps", |b| b.iter(|| integrate(&x, &x0, &grid).unwrap()));
}

fn laplace(c: &mut Criterion) {
    let sys = FieldTheory::new(Variant::KSymHam, 2, 1, parse("(p1_1^2 + p2_1^2)/2 + q1^2/2").unwrap()).unwrap();
    let x = solve_kvector(&sys, Gauge::DiagonalSplit).unwrap();
    let mut x0 = Assignment::new();
    x0.set("q1", 0.5).set("p1_1", 0.1).set("p2_1", -0.2);
    let grid = GridSpec::uniform(2, 100, 1e-2);
    c.bench_function("k=2 grid 101x101", |b| b.iter(|| integrate(&x, &x0, &grid).unwrap()));
}

criterion_group!(benches, oscillator, laplace);
criterion_main!(benches);
