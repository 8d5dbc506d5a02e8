//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use geofield::bridges::{
    autonomize, certify_equation_equivalence, identity_suite, suspend, theorem_suite, Equivalence,
};
use geofield::canonical::{canonical_kcosymplectic, canonical_ksymplectic, canonical_multisymplectic};
use geofield::forms::{BundleKind, CoordinateFrame, DifferentialForm, Frame};
use geofield::hamiltonian::{geometric_residual, hdw_equations, kvector_equations, solve_kvector, Gauge};
use geofield::lagrangian::{
    euler_lagrange_equations, lagrangian_forms, lagrangian_section_equations, legendre, prolong, regularity,
    solve_lagrangian_kvector, sopde_check, sopde_forced, verify_euler_lagrange,
};
use geofield::multisym::{extended_restricted_legendre, ms_hamiltonian_kvector_equations, poincare_cartan_forms};
use geofield::solver::{grid_residual, integrate, GridSolution, GridSpec, Stencil};
use geofield::symexpr::{parse, Assignment, EqualityVerdict, Expr, Sampler};
use geofield::theory::{FieldTheory, SymbolicSection, Variant};

type Outcome = Result<String, String>;

fn sys(v: Variant, k: usize, n: usize, g: &str) -> FieldTheory {
    FieldTheory::new(v, k, n, parse(g).unwrap()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact(v: EqualityVerdict) -> bool {
    v == EqualityVerdict::Equal
}

// ------------------------------------------------------------------ libraries

const HAMILTONIANS: &[(usize, usize, &str)] = &[
    (1, 1, "(q1^2 + p1_1^2)/2"),
    (2, 1, "(p1_1^2 + p2_1^2)/2"),
    (2, 1, "(p1_1^2 - p2_1^2)/2 + q1^4/4"),
    (2, 2, "(p1_1^2 + p2_1^2 + p1_2^2 + p2_2^2)/2 + q1*q2"),
    (3, 1, "(p1_1^2 + p2_1^2 + p3_1^2)/2 + sin(q1)"),
    (3, 2, "p1_1*p2_2 + p3_1^2/2 + q1^2*q2"),
];

/// (k, n, L, regular)
const LAGRANGIANS: &[(usize, usize, &str, bool)] = &[
    (2, 1, "(v1_1^2 - v2_1^2)/2", true),
    (1, 1, "(v1_1^2 - q1^2)/2", true),
    (2, 2, "(v1_1^2 + v2_1^2 + v1_2^2 + v2_2^2)/2", true),
    (2, 1, "v1_1*v2_1", true),
    (2, 1, "v1_1^2/2", false),
    (3, 1, "(v1_1^2 + v2_1^2 + v3_1^2)/2 - q1^3/3", true),
];

// ----------------------------------------------------------------- criterion 1

/// Position of a coordinate in the chart order q, p (copy-major), p, t.
fn rank(name: &str, k: usize, n: usize) -> usize {
    let idx = |s: &str| s.parse::<usize>().unwrap();
    if let Some(i) = name.strip_prefix('q') {
        idx(i)
    } else if let Some(rest) = name.strip_prefix('p') {
        match rest.split_once('_') {
            Some((a, i)) => n + (idx(a) - 1) * n + idx(i),
            None => n + k * n + 1,
        }
    } else {
        n + k * n + 1 + idx(name.strip_prefix('t').unwrap())
    }
}

/// Renders `Σ sign·coeff·d(b₁)∧…` with the library's term order and sign layout.
fn render(mut terms: Vec<(i32, &str, Vec<String>)>, k: usize, n: usize) -> String {
    terms.sort_by_key(|(_, _, basis)| basis.iter().map(|b| rank(b, k, n)).collect::<Vec<_>>());
    let mut out = String::new();
    for (j, (sign, coeff, basis)) in terms.iter().enumerate() {
        let wedge = basis.iter().map(|b| format!("d{b}")).collect::<Vec<_>>().join("∧");
        let body = if coeff.is_empty() { wedge } else { format!("{coeff}*{wedge}") };
        out.push_str(match (j, *sign < 0) {
            (0, false) => "",
            (0, true) => "-",
            (_, false) => " + ",
            (_, true) => " - ",
        });
        out.push_str(&body);
    }
    out
}

fn minor(k: usize, a: usize) -> (i32, Vec<String>) {
    let sign = if (a - 1) % 2 == 0 { 1 } else { -1 };
    (sign, (1..=k).filter(|&b| b != a).map(|b| format!("t{b}")).collect())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for k in 1..=3 {
        for n in 1..=3 {
            let ks = canonical_ksymplectic(k, n);
            let kc = canonical_kcosymplectic(k, n);
            let ms = canonical_multisymplectic(k, n);
            for a in 1..=k {
                let p: Vec<String> = (1..=n).map(|i| format!("p{a}_{i}")).collect();
                let theta = render((1..=n).map(|i| (1, p[i - 1].as_str(), vec![format!("q{i}")])).collect(), k, n);
                let omega = render(
                    (1..=n).map(|i| (1, "", vec![format!("q{i}"), p[i - 1].clone()])).collect(),
                    k,
                    n,
                );
                let eta = format!("dt{a}");
                let pairs = [
                    (ks.theta[a - 1].to_string(), &theta),
                    (ks.omega[a - 1].to_string(), &omega),
                    (kc.theta[a - 1].to_string(), &theta),
                    (kc.omega[a - 1].to_string(), &omega),
                    (kc.eta[a - 1].to_string(), &eta),
                ];
                for (got, want) in pairs {
                    ensure(&got == want, || format!("k={k} n={n} A={a}: {got} != {want}"))?;
                    checked += 1;
                }
            }
            let names: Vec<(usize, usize, String)> = (1..=n)
                .flat_map(|i| (1..=k).map(move |a| (i, a, format!("p{a}_{i}"))))
                .collect();
            let mut theta_terms = Vec::new();
            let mut omega_terms = Vec::new();
            for (i, a, p) in &names {
                let (s, ts) = minor(k, *a);
                let mut b = vec![format!("q{i}")];
                b.extend(ts.iter().cloned());
                theta_terms.push((s, p.as_str(), b));
                let mut b = vec![format!("q{i}"), p.clone()];
                b.extend(ts);
                omega_terms.push((s, "", b));
            }
            let vol: Vec<String> = (1..=k).map(|b| format!("t{b}")).collect();
            theta_terms.push((1, "p", vol.clone()));
            let mut pv = vec!["p".to_string()];
            pv.extend(vol);
            omega_terms.push((-1, "", pv));
            let theta = render(theta_terms, k, n);
            let omega = render(omega_terms, k, n);
            ensure(ms.theta.to_string() == theta, || format!("Theta k={k} n={n}: {} != {theta}", ms.theta))?;
            ensure(ms.omega.to_string() == omega, || format!("Omega k={k} n={n}: {} != {omega}", ms.omega))?;
            checked += 2;
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("{checked} renderings exact in {t:.2?}"))
}

// ----------------------------------------------------------------- criterion 2

fn random_form(s: &mut Sampler) -> DifferentialForm {
    let kinds = [
        BundleKind::KCovelocities,
        BundleKind::ExtKCovelocities,
        BundleKind::KVelocities,
        BundleKind::ExtKVelocities,
        BundleKind::Multimomentum,
    ];
    let pick = |s: &mut Sampler, m: usize| (s.uniform(0.0, m as f64) as usize).min(m - 1);
    let kind = kinds[pick(s, kinds.len())];
    let (k, n) = (1 + pick(s, 3), 1 + pick(s, 2));
    let frame: Frame = CoordinateFrame::new(kind, k, n);
    let dim = frame.dim();
    let degree = pick(s, (k + 2).min(dim) + 1);
    let names: Vec<String> = frame.names().map(String::from).collect();
    let mut terms = Vec::new();
    for _ in 0..3 {
        let mut idx: Vec<usize> = Vec::new();
        while idx.len() < degree {
            let i = pick(s, dim);
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let mut coeff = Expr::zero();
        for _ in 0..3 {
            let c = pick(s, 7) as i64 - 3;
            let mut m = Expr::int(c);
            for _ in 0..2 {
                let v = &names[pick(s, dim)];
                m = &m * &Expr::var(v.as_str()).pow(pick(s, 3) as i32);
            }
            coeff = coeff + m;
        }
        if pick(s, 4) == 0 {
            coeff = coeff + Expr::sin(Expr::var(names[pick(s, dim)].as_str()));
        }
        terms.push((idx, coeff.normalize()));
    }
    DifferentialForm::from_terms(&frame, degree, terms)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut s = Sampler::from_seed(2024);
    for i in 0..1000 {
        let a = random_form(&mut s);
        let dd = a.d().d();
        ensure(dd.is_zero(), || format!("d(d(alpha)) != 0 for sample {i}: {a}"))?;
    }
    for k in 1..=3 {
        for n in 1..=3 {
            let kc = canonical_kcosymplectic(k, n);
            for a in 0..k {
                for b in 0..k {
                    let eta = kc.eta[b].interior(&kc.reeb[a]).unwrap().as_scalar().unwrap();
                    let want = if a == b { Expr::one() } else { Expr::zero() };
                    ensure(eta == want, || format!("i(R{})eta{} = {eta}", a + 1, b + 1))?;
                    ensure(kc.omega[b].interior(&kc.reeb[a]).unwrap().is_zero(), || {
                        format!("i(R{})omega{} != 0", a + 1, b + 1)
                    })?;
                }
            }
        }
    }
    for &(k, n, l, _) in LAGRANGIANS {
        let ksl = sys(Variant::KSymLag, k, n, l);
        let fl = legendre(&ksl).unwrap();
        let lf = lagrangian_forms(&ksl).unwrap();
        let ks = canonical_ksymplectic(k, n);
        let kcl = sys(Variant::KCosymLag, k, n, l);
        let cfl = legendre(&kcl).unwrap();
        let clf = lagrangian_forms(&kcl).unwrap();
        let kc = canonical_kcosymplectic(k, n);
        for a in 0..k {
            ensure(exact(fl.pullback(&ks.theta[a]).unwrap().symbolic_eq(&lf.theta[a])), || {
                format!("FL*theta{} != theta_L for {l}", a + 1)
            })?;
            ensure(exact(cfl.pullback(&kc.theta[a]).unwrap().symbolic_eq(&clf.theta[a])), || {
                format!("FL*Theta{} != Theta_L for {l}", a + 1)
            })?;
        }
        let msl = sys(Variant::MsLag, k, n, l);
        let leg = extended_restricted_legendre(&msl).unwrap();
        let pc = poincare_cartan_forms(&msl).unwrap();
        let ms = canonical_multisymplectic(k, n);
        ensure(exact(leg.extended.pullback(&ms.theta).unwrap().symbolic_eq(&pc.theta)), || {
            format!("extended Legendre pullback of Theta fails for {l}")
        })?;
        ensure(exact(leg.extended.pullback(&ms.omega).unwrap().symbolic_eq(&pc.omega)), || {
            format!("extended Legendre pullback of Omega fails for {l}")
        })?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!(
        "1000 random forms, Reeb relations, {} Lagrangians, all exact zero in {t:.2?}",
        LAGRANGIANS.len()
    ))
}

// ----------------------------------------------------------------- criterion 3

fn criterion_3() -> Outcome {
    let mut count = 0;
    for k in 1..=3 {
        for n in 1..=2 {
            let ps: Vec<String> = (1..=k).flat_map(|a| (1..=n).map(move |i| format!("p{a}_{i}^2/2"))).collect();
            let vs: Vec<String> = (1..=k).flat_map(|a| (1..=n).map(move |i| format!("v{a}_{i}^2/2"))).collect();
            let h = format!("{} + q1^2*t1/2", ps.join(" + "));
            let l = format!("{} - q1^2/2 + t1*q1*v1_1", vs.join(" + "));
            let systems = [
                sys(Variant::KSymHam, k, n, &ps.join(" + ")),
                sys(Variant::KCosymHam, k, n, &h),
                sys(Variant::MsHamSection, k, n, &h),
                sys(Variant::KCosymLag, k, n, &l),
                sys(Variant::MsLag, k, n, &l),
            ];
            for s in &systems {
                for check in identity_suite(s).map_err(|e| e.to_string())? {
                    ensure(check.holds, || format!("{} fails for {} k={k} n={n}", check.identity, s.variant()))?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} round-trip identities hold for k <= 3, n <= 2"))
}

// ----------------------------------------------------------------- criterion 4

fn criterion_4() -> Outcome {
    let mut sampler = Sampler::from_seed(4);
    let mut certs = 0;
    let mut library: Vec<FieldTheory> = Vec::new();
    for &(k, n, h) in HAMILTONIANS {
        library.push(sys(Variant::KSymHam, k, n, h));
        library.push(sys(Variant::KCosymHam, k, n, &format!("{h} + t1*q1")));
        library.push(sys(Variant::MsHamSection, k, n, h));
    }
    for &(k, n, l, _) in LAGRANGIANS {
        library.push(sys(Variant::KSymLag, k, n, l));
        library.push(sys(Variant::KCosymLag, k, n, &format!("{l} + t1*q1")));
        library.push(sys(Variant::MsLag, k, n, l));
    }
    for s in &library {
        for t in theorem_suite(s, &mut sampler).map_err(|e| e.to_string())? {
            ensure(t.certificate.verdict.holds(), || {
                format!("{} not certified for {} {}: {:?}", t.theorem, s.variant(), s.generator(), t.certificate.verdict)
            })?;
            certs += 1;
        }
    }
    let kc = sys(Variant::KCosymHam, 2, 1, "(p1_1^2 + p2_1^2)/2");
    let ms = sys(Variant::MsHamSection, 2, 1, "(p1_1^2 + p2_1^2)/2 + q1");
    let c = certify_equation_equivalence(
        &kvector_equations(&kc).unwrap(),
        &ms_hamiltonian_kvector_equations(&ms).unwrap(),
        &mut sampler,
    );
    match c.verdict {
        Equivalence::NotEquivalent(w) => {
            ensure(w.deviation > 0.0 && !w.residual.is_zero(), || format!("degenerate witness {w:?}"))?;
            Ok(format!(
                "{certs} certificates Equivalent; perturbed H rejected (witness {} row {}, deviation {:.3})",
                w.system, w.label, w.deviation
            ))
        }
        Equivalence::Equivalent => Err("perturbed Hamiltonian certified equivalent".into()),
    }
}

// ----------------------------------------------------------------- criterion 5

fn criterion_5() -> Outcome {
    for &(k, n, h) in HAMILTONIANS {
        let s = sys(Variant::KSymHam, k, n, h);
        let x = solve_kvector(&s, Gauge::DiagonalSplit).unwrap();
        let r = geometric_residual(&autonomize(&s).unwrap(), &suspend(&x).unwrap()).unwrap();
        ensure(r.is_zero(), || format!("nonzero residual for {h}: {}", r.form))?;
    }
    Ok(format!("{} suspended gauge solutions have zero residual", HAMILTONIANS.len()))
}

// ----------------------------------------------------------------- criterion 6

fn oscillator(h: f64, t: f64) -> Result<(f64, f64), String> {
    let s = sys(Variant::KSymHam, 1, 1, "(q1^2 + p1_1^2)/2");
    let x = solve_kvector(&s, Gauge::DiagonalSplit).unwrap();
    let mut x0 = Assignment::new();
    x0.set("q1", 0.0).set("p1_1", 1.0);
    let steps = (t / h).round() as usize;
    let out = integrate(&x, &x0, &GridSpec::uniform(1, steps, h)).map_err(|e| e.to_string())?;
    let (mut err, mut drift) = (0.0f64, 0.0f64);
    for i in 0..=steps {
        let q = out.solution.value(&[i], "q1").unwrap();
        let p = out.solution.value(&[i], "p1_1").unwrap();
        err = err.max((q - (i as f64 * h).sin()).abs());
        drift = drift.max(((q * q + p * p) / 2.0 - 0.5).abs());
    }
    Ok((err, drift))
}

fn criterion_6() -> Outcome {
    let (err, drift) = oscillator(1e-3, 10.0)?;
    ensure(err <= 1e-6, || format!("max |q - sin t| = {err:e}"))?;
    ensure(drift <= 1e-6, || format!("energy drift {drift:e}"))?;
    let (coarse, _) = oscillator(0.1, 10.0)?;
    let (fine, _) = oscillator(0.05, 10.0)?;
    let ratio = coarse / fine;
    ensure((12.0..=20.0).contains(&ratio), || format!("halving ratio {ratio:.2}"))?;
    Ok(format!(
        "h=1e-3: error {err:.1e}, energy drift {drift:.1e}; halving h=0.1 -> 0.05 improves error by {ratio:.2}"
    ))
}

// ----------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let s = sys(Variant::KSymHam, 2, 1, "(p1_1^2 + p2_1^2)/2");
    let eqs = hdw_equations(&s).unwrap();
    let grid = GridSpec::uniform(2, 100, 1e-2);
    let section = |q: &str, p1: &str, p2: &str| {
        let values = [("q1", q), ("p1_1", p1), ("p2_1", p2)]
            .into_iter()
            .map(|(c, e)| (c.to_string(), parse(e).unwrap()))
            .collect();
        GridSolution::sample(&SymbolicSection::new(s.frame(), values).unwrap(), &grid).unwrap()
    };
    let good = grid_residual(&eqs, &section("t1^2 - t2^2", "2*t1", "-2*t2"), Stencil::Second).unwrap();
    let bad = grid_residual(&eqs, &section("t1^2", "2*t1", "0"), Stencil::Second).unwrap();
    ensure(good <= 1e-8, || format!("harmonic residual {good:e}"))?;
    ensure(bad >= 1.0, || format!("non-harmonic residual {bad:e}"))?;
    Ok(format!("101x101 grid: harmonic residual {good:.1e}, non-harmonic residual {bad:.2}"))
}

// ----------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let s = sys(Variant::KSymLag, 2, 1, "(v1_1^2 - v2_1^2)/2");
    let mut values = std::collections::BTreeMap::new();
    values.insert("q1".to_string(), parse("sin(t1 - t2)").unwrap());
    let phi = SymbolicSection::on_config(s.frame(), values).unwrap();
    let el = verify_euler_lagrange(&s, &phi).unwrap();
    ensure(el.rows.iter().all(|r| exact(r.verdict)), || format!("EL rows {:?}", el.rows))?;
    ensure(euler_lagrange_equations(&s).unwrap().len() == 1, || "expected one EL row".into())?;
    let lift = prolong(&s, &phi).unwrap();
    let eqs = lagrangian_section_equations(&s).unwrap();
    let grid = GridSolution::sample(&lift, &GridSpec::uniform(2, 100, 1e-2)).unwrap();
    let fourth = grid_residual(&eqs, &grid, Stencil::Fourth).unwrap();
    let second = grid_residual(&eqs, &grid, Stencil::Second).unwrap();
    ensure(fourth <= 1e-8, || format!("grid residual {fourth:e}"))?;
    Ok(format!(
        "sin(t1 - t2) exact EL zero; prolongation grid residual {fourth:.1e} (4th-order stencil, h=1e-2; 2nd-order gives {second:.1e})"
    ))
}

// ----------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let mut regular = 0;
    for &(k, n, l, is_regular) in LAGRANGIANS {
        for v in [Variant::KSymLag, Variant::KCosymLag] {
            let s = sys(v, k, n, l);
            let reg = regularity(&s, &mut Sampler::from_seed(9)).unwrap().regular;
            ensure(reg == is_regular, || format!("regularity of {l} reported {reg}"))?;
            if reg {
                let gamma = solve_lagrangian_kvector(&s).map_err(|e| e.to_string())?;
                ensure(sopde_check(&s, &gamma).passed(), || format!("SOPDE block not satisfied for {l}"))?;
                regular += 1;
            }
        }
    }
    let singular = sys(Variant::KSymLag, 2, 1, "v1_1^2/2");
    let a = sopde_forced(&singular, &mut Sampler::from_seed(9)).unwrap();
    ensure(!a.forced && !a.unforced.is_empty(), || format!("singular analysis {a:?}"))?;
    Ok(format!(
        "{regular} regular systems satisfy the SOPDE block; singular L: unforced {}",
        a.unforced.join(", ")
    ))
}

// ---------------------------------------------------------------- criterion 10

fn criterion_10() -> Outcome {
    let model = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models/laplace.toml");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_geofield"))
            .args(["verify", "--theorems"])
            .arg(&model)
            .env("GEOFIELD_SEED", "1234")
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())
    };
    let a = run("1")?;
    let b = run("4")?;
    ensure(a.status.code() == Some(0), || format!("exit {:?}", a.status.code()))?;
    ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || "reports differ".into())?;
    Ok(format!("two runs produced identical {}-byte JSON", a.stdout.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("canonical-structure golden renderings", criterion_1),
        ("identity suite", criterion_2),
        ("bridge round-trips", criterion_3),
        ("equivalence-theorem certificates", criterion_4),
        ("suspension", criterion_5),
        ("oscillator numerics", criterion_6),
        ("Laplace HDW grid residual", criterion_7),
        ("wave equation", criterion_8),
        ("SOPDE property", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
