//! Randomized invariants across the symbolic, geometric and numeric layers.

use std::collections::BTreeMap;

use geofield::bridges::{autonomize, certify_equation_equivalence, suspend};
use geofield::canonical::{canonical_kcosymplectic, canonical_ksymplectic};
use geofield::hamiltonian::{geometric_residual, kvector_equations, solve_kvector, substitute_kvector, Gauge};
use geofield::lagrangian::{lagrangian_forms, legendre, regularity, solve_lagrangian_kvector, sopde_check};
use geofield::multisym::{hamilton_cartan_forms, ms_hamiltonian_kvector_equations, poincare_cartan_forms};
use geofield::symexpr::{parse, Assignment, Expr, Sampler};
use geofield::theory::{FieldTheory, Variant};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x", "y", "z"];

/// Polynomials in x, y, z with small integer coefficients, optionally wrapped
/// in one elementary function.
fn expr_strategy() -> impl Strategy<Value = Expr> {
    let mono = (-3i64..=3, 0u32..3, 0u32..3, 0u32..2).prop_map(|(c, a, b, d)| format!("{c}*x^{a}*y^{b}*z^{d}"));
    let poly = prop::collection::vec(mono, 1..4).prop_map(|ms| ms.join(" + "));
    (poly.clone(), poly, 0usize..4).prop_map(|(p, q, f)| {
        let text = match f {
            0 => p,
            1 => format!("{p} + sin({q})"),
            2 => format!("({p})*exp({q}/4)"),
            _ => format!("({p})/(2 + x^2)"),
        };
        parse(&text).unwrap()
    })
}

fn point(s: &mut Sampler) -> Assignment {
    let names: Vec<String> = VARS.iter().map(|v| v.to_string()).collect();
    s.point(&names, -1.5, 1.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(e in expr_strategy()) {
        let n = e.normalize();
        prop_assert_eq!(n.normalize(), n);
    }

    #[test]
    fn printing_round_trips(e in expr_strategy()) {
        let n = e.normalize();
        prop_assert_eq!(parse(&n.to_string()).unwrap().normalize(), n);
    }

    #[test]
    fn mixed_partials_commute(e in expr_strategy(), u in 0usize..3, w in 0usize..3) {
        let a = e.diff(VARS[u]).diff(VARS[w]);
        let b = e.diff(VARS[w]).diff(VARS[u]);
        prop_assert!((a - b).normalize().is_zero());
    }

    #[test]
    fn diff_is_linear(e1 in expr_strategy(), e2 in expr_strategy(), a in -5i64..5, b in 1i64..5, v in 0usize..3) {
        let (ca, cb) = (Expr::int(a), Expr::rational(1, b));
        let lhs = (&ca * &e1 + &cb * &e2).diff(VARS[v]);
        let rhs = &ca * &e1.diff(VARS[v]) + &cb * &e2.diff(VARS[v]);
        prop_assert!((lhs - rhs).normalize().is_zero());
    }

    #[test]
    fn derivative_matches_central_difference(e in expr_strategy(), v in 0usize..3, seed in any::<u64>()) {
        let mut s = Sampler::from_seed(seed);
        let d = e.diff(VARS[v]);
        let h = 1e-5;
        let a = point(&mut s);
        let exact = d.eval(&a).unwrap();
        let shift = |delta: f64| {
            let mut b = a.clone();
            b.set(VARS[v], a.get(VARS[v]).unwrap() + delta);
            e.eval(&b).unwrap()
        };
        let fd = (shift(h) - shift(-h)) / (2.0 * h);
        prop_assert!((exact - fd).abs() <= 1e-5 * (1.0 + exact.abs()), "{} vs {}", exact, fd);
    }
}

/// Random Hamiltonians: quadratic kinetic part plus a polynomial potential.
fn hamiltonian_strategy(k: usize, n: usize) -> impl Strategy<Value = String> {
    let kinetic = prop::collection::vec(1i64..4, k * n);
    let potential = prop::collection::vec(-2i64..=2, n * 2);
    (kinetic, potential).prop_map(move |(kin, pot)| {
        let mut terms = Vec::new();
        for a in 1..=k {
            for i in 1..=n {
                terms.push(format!("{}*p{a}_{i}^2/2", kin[(a - 1) * n + i - 1]));
            }
        }
        for i in 1..=n {
            terms.push(format!("{}*q{i}^2", pot[2 * (i - 1)]));
            terms.push(format!("{}*q{i}^3/3", pot[2 * (i - 1) + 1]));
        }
        terms.push("q1*p1_1".into());
        terms.join(" + ")
    })
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_solutions_solve_the_geometric_equation(
        (k, n, h) in dims().prop_flat_map(|(k, n)| (Just(k), Just(n), hamiltonian_strategy(k, n)))
    ) {
        for v in [Variant::KSymHam, Variant::KCosymHam] {
            let sys = FieldTheory::new(v, k, n, parse(&h).unwrap()).unwrap();
            let x = solve_kvector(&sys, Gauge::DiagonalSplit).unwrap();
            prop_assert!(geometric_residual(&sys, &x).unwrap().is_zero());
            let eqs = substitute_kvector(&kvector_equations(&sys).unwrap(), &x);
            prop_assert!(eqs.residuals().all(|r| r.normalize().is_zero()));
        }
    }

    #[test]
    fn suspension_preserves_solutions(
        (k, n, h) in dims().prop_flat_map(|(k, n)| (Just(k), Just(n), hamiltonian_strategy(k, n)))
    ) {
        let sys = FieldTheory::new(Variant::KSymHam, k, n, parse(&h).unwrap()).unwrap();
        let x = solve_kvector(&sys, Gauge::DiagonalSplit).unwrap();
        let auto = autonomize(&sys).unwrap();
        prop_assert!(geometric_residual(&auto, &suspend(&x).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn kcosymplectic_and_multisymplectic_kvector_equations_agree(
        (k, n, h) in dims().prop_flat_map(|(k, n)| (Just(k), Just(n), hamiltonian_strategy(k, n))),
        tdep in any::<bool>(),
    ) {
        let h = if tdep { format!("{h} + t1*q1") } else { h };
        let kc = FieldTheory::new(Variant::KCosymHam, k, n, parse(&h).unwrap()).unwrap();
        let ms = FieldTheory::new(Variant::MsHamSection, k, n, parse(&h).unwrap()).unwrap();
        let mut s = Sampler::from_seed(5);
        let c = certify_equation_equivalence(
            &kvector_equations(&kc).unwrap(),
            &ms_hamiltonian_kvector_equations(&ms).unwrap(),
            &mut s,
        );
        prop_assert!(c.verdict.holds(), "{:?}", c.verdict);
        let hc = hamilton_cartan_forms(&ms).unwrap();
        prop_assert!(hc.omega.d().is_zero());
    }
}

/// Random Lagrangians with a positive diagonal velocity Hessian plus a cross term.
fn lagrangian_strategy(k: usize, n: usize) -> impl Strategy<Value = String> {
    (prop::collection::vec(1i64..4, k * n), -1i64..=1, -2i64..=2).prop_map(move |(diag, cross, pot)| {
        let mut terms = Vec::new();
        for a in 1..=k {
            for i in 1..=n {
                terms.push(format!("{}*v{a}_{i}^2", diag[(a - 1) * n + i - 1]));
            }
        }
        if k * n > 1 {
            let second = if n > 1 { "v1_2" } else { "v2_1" };
            terms.push(format!("{cross}*v1_1*{second}/2"));
        }
        terms.push(format!("{pot}*q1^2/2 + q1*v1_1"));
        terms.join(" + ")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn legendre_pulls_back_the_canonical_forms(
        (k, n, l) in (1usize..=2, 1usize..=2).prop_flat_map(|(k, n)| (Just(k), Just(n), lagrangian_strategy(k, n)))
    ) {
        let sys = FieldTheory::new(Variant::KSymLag, k, n, parse(&l).unwrap()).unwrap();
        let fl = legendre(&sys).unwrap();
        let ks = canonical_ksymplectic(k, n);
        let forms = lagrangian_forms(&sys).unwrap();
        for a in 0..k {
            prop_assert!(fl.pullback(&ks.theta[a]).unwrap().symbolic_eq(&forms.theta[a]).holds());
            prop_assert!(fl.pullback(&ks.omega[a]).unwrap().symbolic_eq(&forms.omega[a]).holds());
        }
        let cos = FieldTheory::new(Variant::KCosymLag, k, n, parse(&l).unwrap()).unwrap();
        let fl = legendre(&cos).unwrap();
        let kc = canonical_kcosymplectic(k, n);
        let forms = lagrangian_forms(&cos).unwrap();
        for a in 0..k {
            prop_assert!(fl.pullback(&kc.theta[a]).unwrap().symbolic_eq(&forms.theta[a]).holds());
        }
    }

    #[test]
    fn regular_lagrangians_force_second_order(
        (k, n, l) in (1usize..=2, 1usize..=2).prop_flat_map(|(k, n)| (Just(k), Just(n), lagrangian_strategy(k, n)))
    ) {
        let sys = FieldTheory::new(Variant::KSymLag, k, n, parse(&l).unwrap()).unwrap();
        prop_assume!(regularity(&sys, &mut Sampler::from_seed(1)).unwrap().regular);
        let gamma = solve_lagrangian_kvector(&sys).unwrap();
        prop_assert!(sopde_check(&sys, &gamma).passed());
        let ms = FieldTheory::new(Variant::MsLag, k, n, parse(&l).unwrap()).unwrap();
        prop_assert!(poincare_cartan_forms(&ms).unwrap().omega.d().is_zero());
    }
}

#[test]
fn k1_gauge_is_the_hamiltonian_vector_field() {
    let sys = FieldTheory::new(Variant::KSymHam, 1, 2, parse("p1_1^2/2 + p1_2^2/2 + q1^2*q2").unwrap()).unwrap();
    let x = solve_kvector(&sys, Gauge::DiagonalSplit).unwrap();
    let h = sys.generator();
    let mut want = BTreeMap::new();
    for i in 1..=2 {
        want.insert(format!("q{i}"), h.diff(&format!("p1_{i}")));
        want.insert(format!("p1_{i}"), -h.diff(&format!("q{i}")));
    }
    for (name, e) in want {
        assert_eq!(x.field(1).component_of(&name).unwrap().normalize(), e.normalize(), "{name}");
    }
}
