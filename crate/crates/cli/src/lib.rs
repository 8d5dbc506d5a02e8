//! Front end for `geofield`: model loading, command dispatch and reports.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! computation cannot be carried out, 2 on usage errors.

pub mod model;
pub mod report;

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use geofield::bridges::{autonomize, deautonomize, identity_suite, theorem_suite};
use geofield::canonical::{canonical_kcosymplectic, canonical_ksymplectic, canonical_multisymplectic};
use geofield::forms::{BundleKind, CoordinateFrame, KVectorField};
use geofield::hamiltonian::{hdw_equations, kvector_equations, solve_kvector, verify_section, Gauge};
use geofield::lagrangian::{
    energy, euler_lagrange_equations, lagrangian_forms, lagrangian_kvector_equations, lagrangian_section_equations,
    legendre, prolong, regularity, solve_lagrangian_kvector, to_hamiltonian, verify_euler_lagrange,
};
use geofield::multisym::{
    hamilton_cartan_forms, ms_hamiltonian_kvector_equations, ms_lagrangian_kvector_equations, ms_section_equations,
    poincare_cartan_forms,
};
use geofield::solver::{integrate, GridSpec};
use geofield::symexpr::{Assignment, Sampler, DEFAULT_SEED};
use geofield::theory::{check_section, component_symbol, FieldTheory, SymbolicSection, Variant};
use model::{ModelFile, SectionSpec};
use report::*;

#[derive(Parser, Debug)]
#[command(name = "geofield", version, about = "k-symplectic, k-cosymplectic and multisymplectic field theories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Frame, coordinate naming, autonomy and regularity of a model.
    Info { model: PathBuf },
    /// Canonical structures (and generator-derived forms) in coordinates.
    Canon { model: PathBuf },
    /// Field equations and k-vector field equations.
    Equations {
        model: PathBuf,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Legendre map and regularity report (Lagrangian models).
    Legendre { model: PathBuf },
    /// Rewrite a model in another formalism.
    Convert {
        model: PathBuf,
        /// Target formalism, e.g. `multisymplectic` or `kcosymplectic-hamiltonian`.
        #[arg(long)]
        to: String,
    },
    /// Integrate the model's k-vector field on a grid and print CSV.
    Solve {
        model: PathBuf,
        /// Steps per axis, comma separated.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        /// Axis lengths T_A, comma separated; axis A covers [0, T_A].
        #[arg(long, value_delimiter = ',')]
        ranges: Option<Vec<f64>>,
        /// Initial values, e.g. `q1=0,p1_1=1`.
        #[arg(long, value_delimiter = ',')]
        x0: Vec<String>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check candidate sections and, optionally, the equivalence theorems.
    Verify {
        model: PathBuf,
        /// Also certify the equivalence theorems and structural identities.
        #[arg(long)]
        theorems: bool,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: 0, stdout, stderr: String::new() }
    }

    fn fail(code: i32, stderr: impl Into<String>) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: format!("error: {}\n", stderr.into()),
        }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome::ok(text)
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let path = match &cli.command {
        Command::Info { model }
        | Command::Canon { model }
        | Command::Equations { model, .. }
        | Command::Legendre { model }
        | Command::Convert { model, .. }
        | Command::Solve { model, .. }
        | Command::Verify { model, .. } => model.clone(),
    };
    let m = match model::load(&path) {
        Ok(m) => m,
        Err(e) => return Outcome::fail(2, format!("{}: {e}", path.display())),
    };
    match cli.command {
        Command::Info { .. } => info(&m),
        Command::Canon { .. } => canon(&m),
        Command::Equations { json, .. } => equations(&m, json),
        Command::Legendre { .. } => legendre_cmd(&m),
        Command::Convert { to, .. } => convert(&m, &to),
        Command::Solve { steps, ranges, x0, out, .. } => solve(&m, steps, ranges, &x0, out),
        Command::Verify { theorems, .. } => verify(&m, theorems),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn info(m: &ModelFile) -> Outcome {
    let sys = &m.theory;
    let frame = sys.frame();
    let mut out = String::new();
    let _ = writeln!(out, "formalism: {}", sys.variant());
    let _ = writeln!(out, "k: {}", sys.k());
    let _ = writeln!(out, "n: {}", sys.n());
    let _ = writeln!(out, "generator: {}", sys.generator());
    let _ = writeln!(out, "frame: {frame}");
    if sys.variant() == Variant::MsHamSection {
        let ambient = CoordinateFrame::new(BundleKind::Multimomentum, sys.k(), sys.n());
        let _ = writeln!(out, "ambient frame: {ambient}");
        let _ = writeln!(out, "hamiltonian section: p = -({})", sys.generator());
    }
    let _ = writeln!(
        out,
        "naming: pA_i is the momentum p^A_i and vA_i the velocity v^i_A (copy index A first, configuration index i second)"
    );
    let autonomous = (1..=sys.k()).all(|a| !sys.generator().depends_on(&format!("t{a}")));
    let _ = writeln!(out, "autonomous: {}", yes_no(autonomous));
    if sys.variant().is_lagrangian() {
        match regularity(sys, &mut Sampler::from_env()) {
            Ok(r) => {
                let _ = writeln!(out, "regular: {}", yes_no(r.regular));
                if let Some(d) = &r.determinant {
                    let _ = writeln!(out, "hessian determinant: {d}");
                }
            }
            Err(e) => return Outcome::fail(1, e.to_string()),
        }
    } else {
        let _ = writeln!(out, "regular: not applicable (Hamiltonian)");
    }
    Outcome::ok(out)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn canon(m: &ModelFile) -> Outcome {
    let sys = &m.theory;
    let (k, n) = (sys.k(), sys.n());
    let mut out = String::new();
    let ks = canonical_ksymplectic(k, n);
    let _ = writeln!(out, "# k-symplectic structure on {}", ks.frame.describe());
    for a in 0..k {
        let _ = writeln!(out, "theta{} = {}", a + 1, ks.theta[a]);
        let _ = writeln!(out, "omega{} = {}", a + 1, ks.omega[a]);
    }
    let kc = canonical_kcosymplectic(k, n);
    let _ = writeln!(out, "# k-cosymplectic structure on {}", kc.frame.describe());
    for a in 0..k {
        let _ = writeln!(out, "eta{} = {}", a + 1, kc.eta[a]);
        let _ = writeln!(out, "theta{} = {}", a + 1, kc.theta[a]);
        let _ = writeln!(out, "omega{} = {}", a + 1, kc.omega[a]);
        let _ = writeln!(out, "R{} = {}", a + 1, kc.reeb[a]);
    }
    let ms = canonical_multisymplectic(k, n);
    let _ = writeln!(out, "# multisymplectic structure on {}", ms.frame.describe());
    let _ = writeln!(out, "Theta = {}", ms.theta);
    let _ = writeln!(out, "Omega = {}", ms.omega);
    let derived = match sys.variant() {
        Variant::KSymLag | Variant::KCosymLag => lagrangian_forms(sys).map(|f| {
            let mut s = String::from("# Lagrangian forms\n");
            for a in 0..k {
                let _ = writeln!(s, "theta_L{} = {}", a + 1, f.theta[a]);
                let _ = writeln!(s, "omega_L{} = {}", a + 1, f.omega[a]);
            }
            s
        }),
        Variant::MsLag => poincare_cartan_forms(sys)
            .map(|pc| format!("# Poincare-Cartan forms\nTheta_L = {}\nOmega_L = {}\nenergy = {}\n", pc.theta, pc.omega, pc.energy)),
        Variant::KCosymHam | Variant::MsHamSection => hamilton_cartan_forms(sys)
            .map(|hc| format!("# Hamilton-Cartan forms\nTheta_h = {}\nOmega_h = {}\n", hc.theta, hc.omega)),
        Variant::KSymHam => Ok(String::new()),
    };
    match derived {
        Ok(s) => out.push_str(&s),
        Err(e) => return Outcome::fail(1, e.to_string()),
    }
    Outcome::ok(out)
}

fn equation_sets(sys: &FieldTheory) -> Result<Vec<geofield::theory::EquationSet>, String> {
    let e = |r: Result<geofield::theory::EquationSet, geofield::theory::TheoryError>| r.map_err(|e| e.to_string());
    Ok(match sys.variant() {
        Variant::KSymHam | Variant::KCosymHam => vec![e(hdw_equations(sys))?, e(kvector_equations(sys))?],
        Variant::MsHamSection => vec![e(ms_section_equations(sys))?, e(ms_hamiltonian_kvector_equations(sys))?],
        Variant::KSymLag | Variant::KCosymLag => {
            vec![e(euler_lagrange_equations(sys))?, e(lagrangian_kvector_equations(sys))?]
        }
        Variant::MsLag => vec![e(euler_lagrange_equations(sys))?, e(ms_lagrangian_kvector_equations(sys))?],
    })
}

fn equations(m: &ModelFile, as_json: bool) -> Outcome {
    let sets = match equation_sets(&m.theory) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(1, e),
    };
    if as_json {
        return Outcome::ok(json(&EquationsReport {
            model: ModelSummary::of(&m.theory),
            systems: sets.iter().map(SystemJson::of).collect(),
        }));
    }
    let mut out = String::new();
    for (i, s) in sets.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "{s}");
    }
    Outcome::ok(out)
}

fn legendre_cmd(m: &ModelFile) -> Outcome {
    let sys = &m.theory;
    if !sys.variant().is_lagrangian() {
        return Outcome::fail(2, format!("legendre needs a Lagrangian model, got {}", sys.variant()));
    }
    let run = || -> Result<LegendreReport, String> {
        let r = regularity(sys, &mut Sampler::from_env()).map_err(|e| e.to_string())?;
        let fl = legendre(sys).map_err(|e| e.to_string())?;
        let entries = fl
            .target()
            .names()
            .zip(fl.components())
            .map(|(c, v)| MapEntry {
                coordinate: c.to_string(),
                value: v.to_string(),
            })
            .collect();
        let h = if r.regular {
            to_hamiltonian(sys).ok().map(|h| h.generator().to_string())
        } else {
            None
        };
        let el = energy(sys).map_err(|e| e.to_string())?;
        Ok(LegendreReport::new(sys, &r, el.to_string(), entries, h))
    };
    match run() {
        Ok(rep) => {
            let code = if rep.regular { 0 } else { 1 };
            Outcome { code, stdout: json(&rep), stderr: String::new() }
        }
        Err(e) => Outcome::fail(1, e),
    }
}

/// Resolves a `--to` argument against the source variant.
fn target_variant(from: Variant, to: &str) -> Option<Variant> {
    if let Some(v) = Variant::from_name(to) {
        return Some(v);
    }
    let ham = from.is_hamiltonian();
    let pick = |h, l| if ham { h } else { l };
    match to {
        "ksymplectic" => Some(pick(Variant::KSymHam, Variant::KSymLag)),
        "kcosymplectic" => Some(pick(Variant::KCosymHam, Variant::KCosymLag)),
        "multisymplectic" => Some(pick(Variant::MsHamSection, Variant::MsLag)),
        "hamiltonian" => Some(match from {
            Variant::KSymHam | Variant::KSymLag => Variant::KSymHam,
            Variant::KCosymHam | Variant::KCosymLag => Variant::KCosymHam,
            Variant::MsHamSection | Variant::MsLag => Variant::MsHamSection,
        }),
        _ => None,
    }
}

fn convert_step(sys: &FieldTheory, to: Variant) -> Result<FieldTheory, String> {
    use Variant::*;
    let same = |v| FieldTheory::new(v, sys.k(), sys.n(), sys.generator().clone()).map_err(|e| e.to_string());
    match (sys.variant(), to) {
        (KSymHam, KCosymHam) | (KSymLag, KCosymLag) => autonomize(sys).map_err(|e| e.to_string()),
        (KCosymHam | MsHamSection, KSymHam) | (KCosymLag | MsLag, KSymLag) => deautonomize(sys).map_err(|e| e.to_string()),
        (KCosymHam, MsHamSection) | (MsHamSection, KCosymHam) | (KCosymLag, MsLag) | (MsLag, KCosymLag) => same(to),
        (KSymLag, KSymHam) | (KCosymLag, KCosymHam) | (MsLag, MsHamSection) => to_hamiltonian(sys).map_err(|e| e.to_string()),
        (a, b) => Err(format!("no direct conversion from {a} to {b}")),
    }
}

fn conversion_path(from: Variant, to: Variant) -> Option<Vec<Variant>> {
    use Variant::*;
    let edges = |v: Variant| -> Vec<Variant> {
        match v {
            KSymHam => vec![KCosymHam],
            KCosymHam => vec![MsHamSection, KSymHam],
            MsHamSection => vec![KCosymHam, KSymHam],
            KSymLag => vec![KSymHam, KCosymLag],
            KCosymLag => vec![KCosymHam, MsLag, KSymLag],
            MsLag => vec![MsHamSection, KCosymLag, KSymLag],
        }
    };
    let mut prev: BTreeMap<&'static str, Variant> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur.name()];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for w in edges(v) {
            if w != from && !prev.contains_key(w.name()) {
                prev.insert(w.name(), v);
                queue.push_back(w);
            }
        }
    }
    None
}

fn convert(m: &ModelFile, to: &str) -> Outcome {
    let from = m.variant();
    let Some(target) = target_variant(from, to) else {
        let known: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        return Outcome::fail(
            2,
            format!(
                "unknown formalism {to:?}; expected ksymplectic, kcosymplectic, multisymplectic, hamiltonian or one of {}",
                known.join(", ")
            ),
        );
    };
    let Some(path) = conversion_path(from, target) else {
        return Outcome::fail(1, format!("no conversion from {from} to {target}"));
    };
    let mut sys = m.theory.clone();
    for &v in &path[1..] {
        sys = match convert_step(&sys, v) {
            Ok(s) => s,
            Err(e) => return Outcome::fail(1, e),
        };
    }
    let route: Vec<&str> = path.iter().map(|v| v.name()).collect();
    let mut notes = vec![format!("converted: {}", route.join(" -> ")), format!("frame: {}", sys.frame())];
    if sys.variant() == Variant::MsHamSection {
        let ambient = CoordinateFrame::new(BundleKind::Multimomentum, sys.k(), sys.n());
        notes.push(format!("ambient frame: {ambient}"));
        notes.push(format!("hamiltonian section: p = -({})", sys.generator()));
    }
    Outcome::ok(model::render(&sys, &notes))
}

/// The k-vector field the solver integrates: the gauge solution of the
/// k-symplectic or k-cosymplectic equations, with model overrides applied.
fn solver_field(m: &ModelFile) -> Result<KVectorField, String> {
    let sys = &m.theory;
    let kc = |v| FieldTheory::new(v, sys.k(), sys.n(), sys.generator().clone()).map_err(|e| e.to_string());
    let x = match sys.variant() {
        Variant::KSymHam | Variant::KCosymHam => solve_kvector(sys, Gauge::DiagonalSplit).map_err(|e| e.to_string())?,
        Variant::MsHamSection => solve_kvector(&kc(Variant::KCosymHam)?, Gauge::DiagonalSplit).map_err(|e| e.to_string())?,
        Variant::KSymLag | Variant::KCosymLag => solve_lagrangian_kvector(sys).map_err(|e| e.to_string())?,
        Variant::MsLag => solve_lagrangian_kvector(&kc(Variant::KCosymLag)?).map_err(|e| e.to_string())?,
    };
    if m.components.is_empty() {
        return Ok(x);
    }
    let frame = sys.frame().clone();
    let mut fields = x.fields().to_vec();
    for (a, f) in fields.iter_mut().enumerate() {
        for i in 0..frame.dim() {
            if let Some(e) = m.components.get(&component_symbol(a + 1, frame.name(i))) {
                f.set_component(i, e.normalize());
            }
        }
    }
    KVectorField::new(fields).map_err(|e| e.to_string())
}

fn solve(m: &ModelFile, steps: Option<Vec<usize>>, ranges: Option<Vec<f64>>, x0: &[String], out: Option<PathBuf>) -> Outcome {
    let k = m.theory.k();
    let steps = steps.or_else(|| m.grid.steps.clone()).unwrap_or_else(|| vec![100; k]);
    let ranges = ranges.or_else(|| m.grid.ranges.clone()).unwrap_or_else(|| vec![1.0; k]);
    if steps.len() != k || ranges.len() != k {
        return Outcome::fail(2, format!("--steps and --ranges need {k} entries"));
    }
    if steps.contains(&0) || ranges.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Outcome::fail(2, "steps and ranges must be positive");
    }
    let mut init = Assignment::new();
    for (name, v) in &m.grid.x0 {
        init.set(name.clone(), *v);
    }
    for item in x0 {
        let Some((name, value)) = item.split_once('=') else {
            return Outcome::fail(2, format!("--x0 entry {item:?} is not name=value"));
        };
        let Ok(v) = value.trim().parse::<f64>() else {
            return Outcome::fail(2, format!("--x0 value {value:?} is not a number"));
        };
        init.set(name.trim().to_string(), v);
    }
    let frame = m.theory.frame();
    if let Some(bad) = init.0.keys().find(|n| !frame.contains(n) || n.starts_with('t')) {
        return Outcome::fail(2, format!("--x0 sets {bad}, which is not a fibre coordinate of {}", frame.describe()));
    }
    let field = match solver_field(m) {
        Ok(x) => x,
        Err(e) => return Outcome::fail(1, e),
    };
    let grid = GridSpec {
        h: ranges.iter().zip(&steps).map(|(r, s)| r / *s as f64).collect(),
        steps,
    };
    let outcome = match integrate(&field, &init, &grid) {
        Ok(o) => o,
        Err(geofield::solver::SolverError::MissingInitial(c)) => {
            return Outcome::fail(2, format!("initial value for {c} missing (use --x0 {c}=...)"))
        }
        Err(e) => return Outcome::fail(1, e.to_string()),
    };
    let csv = outcome.solution.to_csv();
    let mut stderr = format!(
        "commutator residual: {:e}\nintegral section: {}\n",
        outcome.commutator_residual,
        yes_no(outcome.integral_section)
    );
    let stdout = match out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, &csv) {
                return Outcome::fail(1, format!("cannot write {}: {e}", p.display()));
            }
            String::new()
        }
        None => csv,
    };
    if !outcome.integral_section {
        stderr.push_str("warning: the k-vector field is not integrable on the visited region; the grid depends on axis order\n");
    }
    Outcome {
        code: if outcome.integral_section { 0 } else { 1 },
        stdout,
        stderr,
    }
}

fn check_one(sys: &FieldTheory, spec: &SectionSpec) -> Vec<SectionJson> {
    let frame = sys.frame();
    let only_config = spec.values.keys().all(|c| c.starts_with('q'));
    let err = |e: &dyn std::fmt::Display| vec![SectionJson::error(&spec.name, e.to_string())];
    if sys.variant().is_lagrangian() && only_config {
        let phi = match SymbolicSection::on_config(frame, spec.values.clone()) {
            Ok(p) => p,
            Err(e) => return err(&e),
        };
        let mut out = Vec::new();
        match verify_euler_lagrange(sys, &phi) {
            Ok(r) => out.push(SectionJson::of(&spec.name, &r)),
            Err(e) => return err(&e),
        }
        if matches!(sys.variant(), Variant::KSymLag | Variant::KCosymLag) {
            if let (Ok(lift), Ok(eqs)) = (prolong(sys, &phi), lagrangian_section_equations(sys)) {
                out.push(SectionJson::of(&format!("{} (prolongation)", spec.name), &check_section(&eqs, &lift)));
            }
        }
        return out;
    }
    let section = match SymbolicSection::new(frame, spec.values.clone()) {
        Ok(s) => s,
        Err(e) => return err(&e),
    };
    let report = match sys.variant() {
        Variant::KSymHam | Variant::KCosymHam => verify_section(sys, &section),
        Variant::MsHamSection => ms_section_equations(sys).map(|eqs| check_section(&eqs, &section)),
        Variant::KSymLag | Variant::KCosymLag => lagrangian_section_equations(sys).map(|eqs| check_section(&eqs, &section)),
        Variant::MsLag => {
            let kc = FieldTheory::new(Variant::KCosymLag, sys.k(), sys.n(), sys.generator().clone());
            kc.and_then(|kc| lagrangian_section_equations(&kc)).map(|eqs| check_section(&eqs, &section))
        }
    };
    match report {
        Ok(r) => vec![SectionJson::of(&spec.name, &r)],
        Err(e) => err(&e),
    }
}

fn verify(m: &ModelFile, theorems: bool) -> Outcome {
    let sys = &m.theory;
    let seed = std::env::var("GEOFIELD_SEED")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .unwrap_or(DEFAULT_SEED);
    let sections: Vec<SectionJson> = m.sections.iter().flat_map(|s| check_one(sys, s)).collect();
    let (thm, ids) = if theorems {
        let mut sampler = Sampler::from_seed(seed);
        let thm = match theorem_suite(sys, &mut sampler) {
            Ok(t) => t.iter().map(TheoremJson::from_suite).collect(),
            Err(e) => return Outcome::fail(1, e.to_string()),
        };
        let ids = match identity_suite(sys) {
            Ok(i) => i.iter().map(IdentityJson::of).collect(),
            Err(e) => return Outcome::fail(1, e.to_string()),
        };
        (Some(thm), Some(ids))
    } else {
        (None, None)
    };
    let mut rep = VerifyReport {
        model: ModelSummary::of(sys),
        seed: seed.to_string(),
        sections,
        theorems: thm,
        identities: ids,
        verdict: "pass",
    };
    let passed = rep.passed();
    if !passed {
        rep.verdict = "fail";
    }
    Outcome {
        code: if passed { 0 } else { 1 },
        stdout: json(&rep),
        stderr: String::new(),
    }
}
