use criterion::{criterion_group, criterion_main, Criterion};
use geofield::bridges::{autonomize, suspend};
use geofield::canonical::{canonical_kcosymplectic, canonical_multisymplectic};
use geofield::hamiltonian::{geometric_residual, solve_kvector, Gauge};
use geofield::lagrangian::{lagrangian_forms, legendre};
use geofield::{parse, FieldTheory, Variant};
use std::hint::black_box;

fn canonical(c: &mut Criterion) {
    c.bench_function("canonical structures k=3 n=3", |b| {
        b.iter(|| {
            let kc = canonical_kcosymplectic(black_box(3), black_box(3));
            let ms = canonical_multisymplectic(3, 3);
            (kc.omega.len(), ms.omega.d().is_zero())
        })
    });
}

fn hamiltonian(c: &mut Criterion) {
    let sys = FieldTheory::new(
        Variant::KSymHam,
        2,
        2,
        parse("(p1_1^2 + p2_1^2 + p1_2^2 + p2_2^2)/2 + q1*q2 + sin(q1)").unwrap(),
    )
    .unwrap();
    c.bench_function("solve and suspend k=2 n=2", |b| {
        b.iter(|| {
            let x = solve_kvector(&sys, Gauge::DiagonalSplit).unwrap();
            geometric_residual(&autonomize(&sys).unwrap(), &suspend(&x).unwrap()).unwrap().is_zero()
        })
    });
}

fn lagrangian(c: &mut Criterion) {
    let sys = FieldTheory::new(Variant::KSymLag, 2, 2, parse("(v1_1^2 + v2_1^2 + v1_2^2 - v2_2^2)/2 - q1^3/3").unwrap())
        .unwrap();
    c.bench_function("legendre pullback k=2 n=2", |b| {
        b.iter(|| {
            let fl = legendre(&sys).unwrap();
            let forms = lagrangian_forms(&sys).unwrap();
            let ks = geofield::canonical::canonical_ksymplectic(2, 2);
            fl.pullback(&ks.omega[0]).unwrap().symbolic_eq(&forms.omega[0])
        })
    });
}

criterion_group!(benches, canonical, hamiltonian, lagrangian);
criterion_main!(benches);
