//! Lagrangian side of the k-symplectic and k-cosymplectic formalisms.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{determinant, solve_square};
use crate::canonical::{k_tangent_structure, liouville_field};
use crate::forms::{
    apply_tensor, base_name, config_name, momentum_name, velocity_name, BundleKind, CoordinateFrame,
    DifferentialForm, KVectorField, SmoothMap, VectorField,
};
use crate::numeric;
use crate::symexpr::{sum, Assignment, Expr, Sampler};
use crate::theory::{
    component_substitution, component_symbol, component_unknowns, jet2_symbol, jet_symbol, push_form_rows,
    push_normalization_rows, symbolic_kvector, total_derivative, Alphabet, EquationSet, FieldTheory,
    SymbolicSection, TheoryError, Variant, Verdict,
};

const KLAG: &[Variant] = &[Variant::KSymLag, Variant::KCosymLag];
const ANYLAG: &[Variant] = &[Variant::KSymLag, Variant::KCosymLag, Variant::MsLag];

/// `θ_Lᴬ = dL ∘ Sᴬ` and `ω_Lᴬ = −dθ_Lᴬ` (or their `Θ_𝓛ᴬ`, `Ω_𝓛ᴬ` versions).
#[derive(Clone, Debug)]
pub struct LagrangianForms {
    pub theta: Vec<DifferentialForm>,
    pub omega: Vec<DifferentialForm>,
}

pub fn lagrangian_forms(sys: &FieldTheory) -> Result<LagrangianForms, TheoryError> {
    sys.expect(ANYLAG, "Lagrangian")?;
    let frame = sys.frame();
    let dl = DifferentialForm::scalar(frame, sys.generator().clone()).d();
    let theta = k_tangent_structure(frame)?
        .iter()
        .map(|s| apply_tensor(s, &dl))
        .collect::<Result<Vec<_>, _>>()?;
    let omega = theta.iter().map(|t| t.d().neg()).collect();
    Ok(LagrangianForms { theta, omega })
}

/// `E_L = Δ(L) − L`.
pub fn energy(sys: &FieldTheory) -> Result<Expr, TheoryError> {
    sys.expect(ANYLAG, "Lagrangian")?;
    let delta = liouville_field(sys.frame())?;
    Ok(delta.apply(sys.generator()) - sys.generator())
}

/// Momentum frame matching a velocity frame.
pub fn momentum_frame(sys: &FieldTheory) -> crate::forms::Frame {
    let kind = if sys.frame().kind() == BundleKind::KVelocities {
        BundleKind::KCovelocities
    } else {
        BundleKind::ExtKCovelocities
    };
    CoordinateFrame::new(kind, sys.k(), sys.n())
}

/// `FL: (t, q, v) ↦ (t, q, ∂L/∂v)`.
pub fn legendre(sys: &FieldTheory) -> Result<SmoothMap, TheoryError> {
    sys.expect(ANYLAG, "Lagrangian")?;
    let target = momentum_frame(sys);
    let mut over = BTreeMap::new();
    for a in 1..=sys.k() {
        for i in 1..=sys.n() {
            over.insert(momentum_name(a, i), sys.generator().diff(&velocity_name(a, i)));
        }
    }
    Ok(SmoothMap::from_named(sys.frame(), &target, &over)?)
}

fn velocity_names(k: usize, n: usize) -> Vec<String> {
    (1..=k)
        .flat_map(|a| (1..=n).map(move |i| velocity_name(a, i)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularityMethod {
    Symbolic,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    /// Velocity labels indexing the Hessian rows and columns.
    pub velocities: Vec<String>,
    pub hessian: Vec<Vec<Expr>>,
    pub determinant: Option<Expr>,
    pub method: RegularityMethod,
    pub regular: bool,
    /// Smallest `|det|` among the sample points.
    pub min_abs_det: f64,
}

const SYMBOLIC_DET_LIMIT: usize = 6;

pub fn regularity(sys: &FieldTheory, sampler: &mut Sampler) -> Result<RegularityReport, TheoryError> {
    sys.expect(ANYLAG, "Lagrangian")?;
    let vs = velocity_names(sys.k(), sys.n());
    let l = sys.generator();
    let hessian: Vec<Vec<Expr>> = vs
        .iter()
        .map(|a| {
            let da = l.diff(a);
            vs.iter().map(|b| da.diff(b)).collect()
        })
        .collect();
    let names: Vec<String> = sys.frame().names().map(String::from).collect();
    let sample_det = |at: &Assignment| -> f64 {
        let m = DMatrix::from_fn(vs.len(), vs.len(), |r, c| hessian[r][c].eval(at).unwrap_or(f64::NAN));
        m.determinant()
    };
    let mut min_abs = f64::INFINITY;
    for _ in 0..20 {
        let at = sampler.point(&names, -2.0, 2.0);
        let d = sample_det(&at).abs();
        min_abs = min_abs.min(if d.is_nan() { 0.0 } else { d });
    }
    let (det, method, regular) = if vs.len() <= SYMBOLIC_DET_LIMIT {
        let det = determinant(&hessian);
        let regular = match det.as_rational() {
            Some(c) => !num_traits::Zero::is_zero(c),
            None => !det.is_zero() && min_abs > 1e-10,
        };
        (Some(det), RegularityMethod::Symbolic, regular)
    } else {
        (None, RegularityMethod::Sampled, min_abs > 1e-10)
    };
    Ok(RegularityReport {
        velocities: vs,
        hessian,
        determinant: det,
        method,
        regular,
        min_abs_det: min_abs,
    })
}

fn holonomic_substitution(k: usize, n: usize) -> BTreeMap<String, Expr> {
    let mut m = BTreeMap::new();
    for a in 1..=k {
        for i in 1..=n {
            m.insert(velocity_name(a, i), Expr::var(jet_symbol(&config_name(i), a)));
        }
    }
    m
}

/// Second-order Euler–Lagrange residuals `Σ_A d/dtᴬ(∂L/∂vᴬᵢ) − ∂L/∂qⁱ` along
/// holonomic sections, over `qⁱ`, `Dqi_A`, `DDqi_A_B`.
pub fn euler_lagrange_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    sys.expect(ANYLAG, "Lagrangian")?;
    let (k, n, l) = (sys.k(), sys.n(), sys.generator());
    let hol = holonomic_substitution(k, n);
    let mut unknowns = Vec::new();
    for i in 1..=n {
        let q = config_name(i);
        for a in 1..=k {
            unknowns.push(jet_symbol(&q, a));
        }
        for a in 1..=k {
            for b in a..=k {
                unknowns.push(jet2_symbol(&q, a, b));
            }
        }
    }
    let mut set = EquationSet::new(format!("Euler-Lagrange equations ({})", sys.variant()), Alphabet::Jet, unknowns);
    for i in 1..=n {
        let q = config_name(i);
        let div = sum((1..=k).map(|a| {
            let p = l.diff(&velocity_name(a, i)).substitute(&hol);
            total_derivative(&p, n, a)
        }));
        set.push(format!("EL[{q}]"), div - l.diff(&q).substitute(&hol));
    }
    Ok(set)
}

/// Verifies a base map `φ: ℝᵏ → Q` against the Euler–Lagrange equations.
pub fn verify_euler_lagrange(
    sys: &FieldTheory,
    phi: &SymbolicSection,
) -> Result<crate::theory::SectionReport, TheoryError> {
    let eqs = euler_lagrange_equations(sys)?;
    Ok(crate::theory::check_section(&eqs, phi))
}

/// Residual form of the Lagrangian geometric equation:
/// `Σ i(Γ_A)ω_Lᴬ − dE_L`, or `Σ i(Γ̄_A)Ω_𝓛ᴬ − d𝓔_𝓛 − Σ ∂𝓛/∂tᴬ dtᴬ`.
pub fn lagrangian_residual_form(sys: &FieldTheory, gamma: &KVectorField) -> Result<DifferentialForm, TheoryError> {
    sys.expect(KLAG, "k-symplectic or k-cosymplectic Lagrangian")?;
    let frame = sys.frame();
    let forms = lagrangian_forms(sys)?;
    let e = energy(sys)?;
    let mut form = DifferentialForm::scalar(frame, e).d().neg();
    for (w, g) in forms.omega.iter().zip(gamma.fields()) {
        form = form.add(&w.interior(g)?)?;
    }
    if sys.variant() == Variant::KCosymLag {
        for a in 1..=sys.k() {
            let t = base_name(a);
            let dt = DifferentialForm::dx(frame, &t)?;
            form = form.sub(&dt.scale(&sys.generator().diff(&t)))?;
        }
    }
    Ok(form)
}

/// Component system for `Γ`, including `(Γ̄_A)ᴮ = δᴮ_A` when time-dependent.
pub fn lagrangian_kvector_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    sys.expect(KLAG, "k-symplectic or k-cosymplectic Lagrangian")?;
    let frame = sys.frame();
    let gamma = symbolic_kvector(frame, &BTreeMap::new());
    let form = lagrangian_residual_form(sys, &gamma)?;
    let mut set = EquationSet::new(
        format!("Lagrangian k-vector field equations ({})", sys.variant()),
        Alphabet::Components,
        component_unknowns(frame),
    );
    if sys.variant() == Variant::KCosymLag {
        push_normalization_rows(&mut set, frame);
    }
    push_form_rows(&mut set, &form);
    Ok(set)
}

/// Hessian-block system `W·Γ = rhs` for the velocity components of a regular
/// Lagrangian once the second-order block is imposed: for each `i`,
/// `Σ ∂²L/∂vᴮⱼ∂vᴬᵢ (Γ_A)ʲ_B = ∂L/∂qⁱ − ∂²L/∂tᴬ∂vᴬᵢ − vᴬⱼ ∂²L/∂qʲ∂vᴬᵢ`.
fn hessian_block(sys: &FieldTheory) -> (Vec<Vec<Expr>>, Vec<(usize, usize, usize)>, Vec<Expr>) {
    let (k, n, l) = (sys.k(), sys.n(), sys.generator());
    let cols: Vec<(usize, usize, usize)> = (1..=k)
        .flat_map(|a| (1..=n).flat_map(move |j| (1..=k).map(move |b| (a, j, b))))
        .collect();
    let mut w = Vec::new();
    let mut rhs = Vec::new();
    for i in 1..=n {
        w.push(
            cols.iter()
                .map(|&(a, j, b)| l.diff(&velocity_name(a, i)).diff(&velocity_name(b, j)))
                .collect(),
        );
        let mut r = vec![l.diff(&config_name(i))];
        for a in 1..=k {
            let pa = l.diff(&velocity_name(a, i));
            if sys.variant().has_base() {
                r.push(-pa.diff(&base_name(a)));
            }
            for j in 1..=n {
                r.push(-(Expr::var(velocity_name(a, j)) * pa.diff(&config_name(j))));
            }
        }
        rhs.push(sum(r));
    }
    (w, cols, rhs)
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LagrangianError {
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("Lagrangian is singular: {0}")]
    Singular(String),
    #[error("momenta are not linear in the velocities; inverse Legendre map not available")]
    NotInvertible,
}

/// Particular solution `Γ` for a regular Lagrangian: second-order block
/// `(Γ_A)ⁱ = vᴬᵢ`, `(Γ̄_A)ᴮ = δᴮ_A`, velocity block by the minimal-norm
/// solution `Wᵀ(WWᵀ)⁻¹ rhs` of the Hessian system.
pub fn solve_lagrangian_kvector(sys: &FieldTheory) -> Result<KVectorField, LagrangianError> {
    sys.expect(KLAG, "k-symplectic or k-cosymplectic Lagrangian")?;
    let mut sampler = Sampler::from_seed(crate::symexpr::DEFAULT_SEED);
    if !regularity(sys, &mut sampler)?.regular {
        return Err(LagrangianError::Singular("Hessian in the velocities is degenerate".into()));
    }
    let (k, n) = (sys.k(), sys.n());
    let (w, cols, rhs) = hessian_block(sys);
    let wwt: Vec<Vec<Expr>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|s| sum(w[r].iter().zip(&w[s]).map(|(x, y)| x * y)))
                .collect()
        })
        .collect();
    let y = solve_square(&wwt, &rhs).ok_or_else(|| LagrangianError::Singular("W·Wᵀ not invertible".into()))?;
    let frame = sys.frame();
    let mut named: Vec<BTreeMap<String, Expr>> = vec![BTreeMap::new(); k];
    for (c, &(a, j, b)) in cols.iter().enumerate() {
        let val = sum((0..n).map(|r| &w[r][c] * &y[r]));
        named[a - 1].insert(velocity_name(b, j), val);
    }
    for a in 1..=k {
        for i in 1..=n {
            named[a - 1].insert(config_name(i), Expr::var(velocity_name(a, i)));
        }
        if sys.variant() == Variant::KCosymLag {
            named[a - 1].insert(base_name(a), Expr::one());
        }
    }
    let fields = named
        .iter()
        .map(|m| VectorField::from_named(frame, m))
        .collect::<Result<Vec<_>, _>>()
        .map_err(TheoryError::from)?;
    Ok(KVectorField::new(fields).map_err(TheoryError::from)?)
}

/// `(Γ_A)ⁱ = vᴬᵢ`, plus `(Γ̄_A)ᴮ = δᴮ_A` on time-dependent frames.
pub fn sopde_check(sys: &FieldTheory, gamma: &KVectorField) -> Verdict {
    let frame = sys.frame();
    let ok = gamma.len() == sys.k()
        && gamma.fields().iter().enumerate().all(|(a0, g)| {
            let a = a0 + 1;
            let q_ok = (1..=sys.n()).all(|i| {
                let c = g.component_of(&config_name(i)).cloned().unwrap_or_else(Expr::zero);
                crate::symexpr::equal(&c, &Expr::var(velocity_name(a, i))).holds()
            });
            let t_ok = !frame.kind().has_base()
                || (1..=sys.k()).all(|b| {
                    let c = g.component_of(&base_name(b)).cloned().unwrap_or_else(Expr::zero);
                    c == if a == b { Expr::one() } else { Expr::zero() }
                });
            q_ok && t_ok
        });
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Whether the component equations force the second-order block, decided at
/// seeded sample points by row-space membership.
#[derive(Clone, Debug, PartialEq)]
pub struct SopdeAnalysis {
    pub forced: bool,
    /// Components `(Γ_A)ⁱ` left undetermined at some sample point.
    pub unforced: Vec<String>,
    /// Whether the linear system was consistent at every sample point.
    pub consistent: bool,
    pub samples: usize,
}

pub fn sopde_forced(sys: &FieldTheory, sampler: &mut Sampler) -> Result<SopdeAnalysis, TheoryError> {
    let eqs = lagrangian_kvector_equations(sys)?;
    Ok(sopde_forced_in(&eqs, sys.frame(), sampler))
}

/// Row-space test on the rows of `eqs` that are linear in its unknowns.
pub(crate) fn sopde_forced_in(eqs: &EquationSet, frame: &crate::forms::Frame, sampler: &mut Sampler) -> SopdeAnalysis {
    let names: Vec<String> = frame.names().map(String::from).collect();
    let u = &eqs.unknowns;
    let zero: BTreeMap<String, Expr> = u.iter().map(|s| (s.clone(), Expr::zero())).collect();
    let linear: Vec<&Expr> = eqs
        .residuals()
        .filter(|r| u.iter().all(|x| u.iter().all(|y| !r.diff(x).depends_on(y))))
        .collect();
    let jac: Vec<Vec<Expr>> = linear.iter().map(|r| u.iter().map(|s| r.diff(s)).collect()).collect();
    let offs: Vec<Expr> = linear.iter().map(|r| r.substitute(&zero)).collect();
    let targets: Vec<(String, usize)> = (1..=frame.k())
        .flat_map(|a| (1..=frame.n()).map(move |i| component_symbol(a, &config_name(i))))
        .filter_map(|s| u.iter().position(|x| *x == s).map(|idx| (s, idx)))
        .collect();
    let samples = 6;
    let mut unforced = Vec::new();
    let mut consistent = true;
    for _ in 0..samples {
        let at = sampler.point(&names, -2.0, 2.0);
        let m = DMatrix::from_fn(jac.len(), u.len(), |r, c| jac[r][c].eval(&at).unwrap_or(f64::NAN));
        let b = DVector::from_iterator(offs.len(), offs.iter().map(|e| -e.eval(&at).unwrap_or(f64::NAN)));
        let r = numeric::rank(&m, 1e-9);
        let aug = DMatrix::from_fn(m.nrows(), m.ncols() + 1, |i, j| if j < m.ncols() { m[(i, j)] } else { b[i] });
        consistent &= numeric::rank(&aug, 1e-9) == r;
        for (s, idx) in &targets {
            let mut ext = m.clone().insert_row(m.nrows(), 0.0);
            ext[(m.nrows(), *idx)] = 1.0;
            if numeric::rank(&ext, 1e-9) > r && !unforced.contains(s) {
                unforced.push(s.clone());
            }
        }
    }
    SopdeAnalysis {
        forced: unforced.is_empty(),
        unforced,
        consistent,
        samples,
    }
}

/// Holonomic lift `φ ↦ φ⁽¹⁾` (or `φ^[1]`): adds `vᴬᵢ = ∂φⁱ/∂tᴬ`.
pub fn prolong(sys: &FieldTheory, phi: &SymbolicSection) -> Result<SymbolicSection, TheoryError> {
    sys.expect(ANYLAG, "Lagrangian")?;
    let mut values = BTreeMap::new();
    for i in 1..=sys.n() {
        let q = config_name(i);
        let f = phi.value(&q).ok_or_else(|| TheoryError::SectionIncomplete(q.clone()))?;
        for a in 1..=sys.k() {
            values.insert(velocity_name(a, i), f.diff(&base_name(a)));
        }
        values.insert(q, f.clone());
    }
    SymbolicSection::new(sys.frame(), values)
}

/// First-order section system for integral sections of a solution `Γ`:
/// the component equations with `(Γ_A)ᶜ` replaced by `∂ψᶜ/∂tᴬ`, plus the
/// holonomy rows `∂ψⁱ/∂tᴬ − vᴬᵢ`.
pub fn lagrangian_section_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    let comps = lagrangian_kvector_equations(sys)?;
    let frame = sys.frame();
    let mut map = BTreeMap::new();
    let mut unknowns = Vec::new();
    for a in 1..=sys.k() {
        for c in frame.names() {
            let s = component_symbol(a, c);
            if let Some(b) = c.strip_prefix('t').and_then(|x| x.parse::<usize>().ok()) {
                map.insert(s, if a == b { Expr::one() } else { Expr::zero() });
            } else {
                let j = jet_symbol(c, a);
                unknowns.push(j.clone());
                map.insert(s, Expr::var(j));
            }
        }
    }
    let mut set = comps.substitute(&map);
    set.name = format!("Lagrangian section equations ({})", sys.variant());
    set.alphabet = Alphabet::Jet;
    set.unknowns = unknowns;
    for a in 1..=sys.k() {
        for i in 1..=sys.n() {
            set.push(
                format!("holonomy[{}]", velocity_name(a, i)),
                Expr::var(jet_symbol(&config_name(i), a)) - Expr::var(velocity_name(a, i)),
            );
        }
    }
    Ok(set.pruned())
}

/// Inverse Legendre map `p ↦ v` when the momenta are affine in the velocities.
pub fn inverse_legendre(sys: &FieldTheory) -> Result<SmoothMap, LagrangianError> {
    let fl = legendre(sys)?;
    let (k, n) = (sys.k(), sys.n());
    let vs = velocity_names(k, n);
    let ps: Vec<String> = (1..=k)
        .flat_map(|a| (1..=n).map(move |i| momentum_name(a, i)))
        .collect();
    let exprs: Vec<Expr> = ps.iter().map(|p| fl.component_of(p).unwrap().clone()).collect();
    for e in &exprs {
        for v in &vs {
            let d = e.diff(v);
            if vs.iter().any(|w| d.depends_on(w)) {
                return Err(LagrangianError::NotInvertible);
            }
        }
    }
    let zero: BTreeMap<String, Expr> = vs.iter().map(|v| (v.clone(), Expr::zero())).collect();
    let a: Vec<Vec<Expr>> = exprs.iter().map(|e| vs.iter().map(|v| e.diff(v)).collect()).collect();
    let b: Vec<Expr> = exprs
        .iter()
        .zip(&ps)
        .map(|(e, p)| Expr::var(p.as_str()) - e.substitute(&zero))
        .collect();
    let sol = solve_square(&a, &b).ok_or_else(|| LagrangianError::Singular("Legendre map not invertible".into()))?;
    let source = fl.target().clone();
    let mut over = BTreeMap::new();
    for (v, s) in vs.iter().zip(sol) {
        over.insert(v.clone(), s);
    }
    Ok(SmoothMap::from_named(&source, sys.frame(), &over).map_err(TheoryError::from)?)
}

/// `H = E_L ∘ FL⁻¹`, as a system of the matching Hamiltonian variant.
pub fn to_hamiltonian(sys: &FieldTheory) -> Result<FieldTheory, LagrangianError> {
    let inv = inverse_legendre(sys)?;
    let h = inv.pullback_function(&energy(sys)?);
    let variant = match sys.variant() {
        Variant::KSymLag => Variant::KSymHam,
        Variant::KCosymLag => Variant::KCosymHam,
        _ => Variant::MsHamSection,
    };
    Ok(FieldTheory::new(variant, sys.k(), sys.n(), h)?)
}

/// Components of `Γ` substituted into an equation set.
pub fn substitute_gamma(eqs: &EquationSet, gamma: &KVectorField) -> EquationSet {
    eqs.substitute(&component_substitution(gamma))
}
