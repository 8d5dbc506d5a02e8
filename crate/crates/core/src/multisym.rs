//! Multisymplectic Hamiltonian and Lagrangian formalisms on `J¹π*` and `J¹π`.

use std::collections::BTreeMap;

use crate::canonical::{base_field, canonical_multisymplectic, tautological, volume_form, volume_minor};
use crate::forms::{
    base_name, config_name, contract_k, momentum_name, velocity_name, DifferentialForm, KVectorField, SmoothMap,
    VectorField, AFFINE_NAME,
};
use crate::lagrangian::{energy, legendre, sopde_forced_in, SopdeAnalysis};
use crate::symexpr::{sum, Expr, Sampler};
use crate::theory::{
    check_section, component_symbol, component_unknowns, jet_symbol, push_form_rows, push_normalization_rows,
    symbolic_kvector, Alphabet, EquationSet, FieldTheory, SectionReport, TheoryError, Variant,
};

const MS_HAM: &[Variant] = &[Variant::MsHamSection, Variant::KCosymHam];
const MS_LAG: &[Variant] = &[Variant::MsLag, Variant::KCosymLag];

/// Hamilton–Cartan forms of a Hamiltonian section `h: p = −𝓗`.
#[derive(Clone, Debug)]
pub struct HamiltonCartan {
    /// `h: J¹π* → 𝓜π`.
    pub section: SmoothMap,
    /// `Θ_h = pᴬᵢ dqⁱ∧dᵏ⁻¹t_A − 𝓗 dᵏt`.
    pub theta: DifferentialForm,
    pub omega: DifferentialForm,
}

impl HamiltonCartan {
    /// `h*Θ` computed by pullback of the canonical form.
    pub fn theta_by_pullback(&self) -> Result<DifferentialForm, TheoryError> {
        let ms = canonical_multisymplectic(self.theta.frame().k(), self.theta.frame().n());
        Ok(self.section.pullback(&ms.theta)?)
    }
}

/// Sum `Σ_A αᴬ∧dᵏ⁻¹t_A` on a frame with base coordinates.
pub(crate) fn wedge_minors(alphas: &[DifferentialForm]) -> Result<DifferentialForm, TheoryError> {
    let frame = alphas[0].frame();
    let mut acc = DifferentialForm::zero(frame, frame.k());
    for (a, alpha) in alphas.iter().enumerate() {
        acc = acc.add(&alpha.wedge(&volume_minor(frame, a + 1)?)?)?;
    }
    Ok(acc)
}

pub fn hamilton_cartan_forms(sys: &FieldTheory) -> Result<HamiltonCartan, TheoryError> {
    sys.expect(MS_HAM, "multisymplectic or k-cosymplectic Hamiltonian")?;
    let frame = sys.frame();
    let h = sys.generator();
    let ms = canonical_multisymplectic(sys.k(), sys.n());
    let section = SmoothMap::from_named(frame, &ms.frame, &[(AFFINE_NAME.to_string(), -h)].into())?;
    let thetas: Vec<_> = (1..=sys.k()).map(|a| tautological(frame, a)).collect();
    let theta = wedge_minors(&thetas)?.sub(&volume_form(frame)?.scale(h))?;
    let omega = theta.d().neg();
    Ok(HamiltonCartan { section, theta, omega })
}

/// `X̄` with the block `(X̄_A)ᴮ = δᴮ_A` already imposed.
fn normalized_kvector(frame: &crate::forms::Frame) -> KVectorField {
    let mut fixed = BTreeMap::new();
    for a in 1..=frame.k() {
        for b in 1..=frame.k() {
            fixed.insert(
                component_symbol(a, &base_name(b)),
                if a == b { Expr::one() } else { Expr::zero() },
            );
        }
    }
    symbolic_kvector(frame, &fixed)
}

fn contraction_system(name: String, omega: &DifferentialForm) -> Result<EquationSet, TheoryError> {
    let frame = omega.frame();
    let x = normalized_kvector(frame);
    let form = contract_k(omega, x.fields())?;
    let mut set = EquationSet::new(name, Alphabet::Components, component_unknowns(frame));
    push_normalization_rows(&mut set, frame);
    push_form_rows(&mut set, &form);
    Ok(set)
}

/// `i(X̄)Ω_h = 0`, `i(X̄)ω = 1` in components. The `dtᴮ` rows are quadratic
/// in the unknowns.
pub fn ms_hamiltonian_kvector_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    let hc = hamilton_cartan_forms(sys)?;
    contraction_system(format!("multisymplectic k-vector field equations ({})", sys.variant()), &hc.omega)
}

/// Tangent k-vector `T_B = ∂/∂tᴮ + Σ D{c}_B ∂/∂c` of a section, over the jet alphabet.
fn jet_tangent(frame: &crate::forms::Frame) -> Result<KVectorField, TheoryError> {
    let fields = (1..=frame.k())
        .map(|b| {
            let mut f = base_field(frame, b)?;
            for i in frame.fibre_indices() {
                f.set_component(i, Expr::var(jet_symbol(frame.name(i), b)));
            }
            Ok(f)
        })
        .collect::<Result<Vec<VectorField>, TheoryError>>()?;
    Ok(KVectorField::new(fields)?)
}

/// Section equations `ψ*i(Y)Ω_h = 0` for all `Y`, evaluated on the tangent
/// k-vector of `ψ`. Rows `dqⁱ`, `dpᴬᵢ` carry the sign of the HDW system; the
/// `dtᴮ` rows are their consequences.
pub fn ms_section_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    let hc = hamilton_cartan_forms(sys)?;
    let frame = sys.frame();
    let tangent = jet_tangent(frame)?;
    let form = contract_k(&hc.omega, tangent.fields())?;
    let unknowns = frame
        .fibre_indices()
        .into_iter()
        .flat_map(|i| (1..=frame.k()).map(move |b| (i, b)))
        .map(|(i, b)| jet_symbol(frame.name(i), b))
        .collect();
    let mut set = EquationSet::new(format!("Hamilton-Cartan section equations ({})", sys.variant()), Alphabet::Jet, unknowns);
    // sign making the dq rows read ∂𝓗/∂qⁱ + div p
    let sign = if frame.k() % 2 == 0 { Expr::one() } else { Expr::int(-1) };
    let mut rows: Vec<(String, Expr)> = Vec::new();
    for i in 1..=sys.n() {
        let q = config_name(i);
        rows.push((format!("dH/d{q}"), form.coefficient_of(&[&q]) * &sign));
    }
    for a in 1..=sys.k() {
        for i in 1..=sys.n() {
            let p = momentum_name(a, i);
            rows.push((format!("dH/d{p}"), form.coefficient_of(&[&p]) * &sign));
        }
    }
    for b in 1..=sys.k() {
        let t = base_name(b);
        rows.push((format!("d{t}"), form.coefficient_of(&[&t]) * &sign));
    }
    for (l, r) in rows {
        set.push(l, r);
    }
    Ok(set)
}

pub fn ms_section_residual(
    sys: &FieldTheory,
    section: &crate::theory::SymbolicSection,
) -> Result<SectionReport, TheoryError> {
    Ok(check_section(&ms_section_equations(sys)?, section))
}

/// Poincaré–Cartan forms and the energy recovered from `Θ_𝕃`.
#[derive(Clone, Debug)]
pub struct PoincareCartan {
    /// `Θ_𝕃 = ∂𝓛/∂vᴬᵢ dqⁱ∧dᵏ⁻¹t_A − 𝓔_𝓛 dᵏt`.
    pub theta: DifferentialForm,
    pub omega: DifferentialForm,
    /// `−Θ_𝕃(∂/∂t¹, …, ∂/∂tᵏ)`.
    pub energy: Expr,
}

pub fn poincare_cartan_forms(sys: &FieldTheory) -> Result<PoincareCartan, TheoryError> {
    sys.expect(MS_LAG, "multisymplectic or k-cosymplectic Lagrangian")?;
    let frame = sys.frame();
    let l = sys.generator();
    let mut alphas = Vec::new();
    let mut e_terms = vec![-l.clone()];
    for a in 1..=sys.k() {
        let mut alpha = DifferentialForm::zero(frame, 1);
        for i in 1..=sys.n() {
            let v = velocity_name(a, i);
            let pa = l.diff(&v);
            e_terms.push(Expr::var(v) * &pa);
            alpha = alpha.add(&DifferentialForm::dx(frame, &config_name(i))?.scale(&pa))?;
        }
        alphas.push(alpha);
    }
    let e = sum(e_terms);
    let theta = wedge_minors(&alphas)?.sub(&volume_form(frame)?.scale(&e))?;
    let omega = theta.d().neg();
    let bases = (1..=sys.k()).map(|a| base_field(frame, a)).collect::<Result<Vec<_>, _>>()?;
    let energy = -contract_k(&theta, &bases)?.as_scalar().expect("full contraction");
    Ok(PoincareCartan { theta, omega, energy })
}

/// `i(Γ̄)Ω_𝕃 = 0`, `i(Γ̄)ω = 1` in components.
pub fn ms_lagrangian_kvector_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    let pc = poincare_cartan_forms(sys)?;
    contraction_system(format!("multisymplectic Lagrangian k-vector field equations ({})", sys.variant()), &pc.omega)
}

/// SOPDE analysis of the multisymplectic Lagrangian system (linear rows only).
pub fn ms_sopde_forced(sys: &FieldTheory, sampler: &mut Sampler) -> Result<SopdeAnalysis, TheoryError> {
    let eqs = ms_lagrangian_kvector_equations(sys)?;
    Ok(sopde_forced_in(&eqs, sys.frame(), sampler))
}

/// Extended `F̃𝓛: J¹π → 𝓜π` and restricted `F𝓛: J¹π → J¹π*` Legendre maps.
#[derive(Clone, Debug)]
pub struct MsLegendre {
    pub extended: SmoothMap,
    pub restricted: SmoothMap,
}

pub fn extended_restricted_legendre(sys: &FieldTheory) -> Result<MsLegendre, TheoryError> {
    sys.expect(MS_LAG, "multisymplectic or k-cosymplectic Lagrangian")?;
    let restricted = legendre(sys)?;
    let ms = canonical_multisymplectic(sys.k(), sys.n());
    let mut over = BTreeMap::new();
    for a in 1..=sys.k() {
        for i in 1..=sys.n() {
            let p = momentum_name(a, i);
            over.insert(p.clone(), restricted.component_of(&p).unwrap().clone());
        }
    }
    over.insert(AFFINE_NAME.to_string(), -energy(sys)?);
    let extended = SmoothMap::from_named(sys.frame(), &ms.frame, &over)?;
    Ok(MsLegendre { extended, restricted })
}
