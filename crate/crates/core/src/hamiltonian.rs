//! Hamilton–de Donder–Weyl equations and Hamiltonian k-vector fields in the
//! k-symplectic and k-cosymplectic formalisms.

use std::collections::BTreeMap;

use crate::canonical::ksymplectic_on;
use crate::forms::{base_name, config_name, momentum_name, DifferentialForm, KVectorField, VectorField};
use crate::symexpr::{equal, sum, Expr};
use crate::theory::{
    check_section, component_substitution, component_symbol, component_unknowns, jet_symbol, push_form_rows,
    push_normalization_rows, symbolic_kvector, Alphabet, EquationSet, FieldTheory, SectionReport, SymbolicSection,
    TheoryError, Variant,
};

const HAMILTONIAN: &[Variant] = &[Variant::KSymHam, Variant::KCosymHam, Variant::MsHamSection];
const KHAM: &[Variant] = &[Variant::KSymHam, Variant::KCosymHam];

/// HDW system over the jet alphabet: for each `i`,
/// `∂H/∂qⁱ + Σ_A ∂ψᴬᵢ/∂tᴬ`, then `∂H/∂pᴬᵢ − ∂ψⁱ/∂tᴬ` for each `A, i`.
pub fn hdw_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    sys.expect(HAMILTONIAN, "Hamiltonian")?;
    let (k, n, h) = (sys.k(), sys.n(), sys.generator());
    let mut unknowns = Vec::new();
    for i in 1..=n {
        for b in 1..=k {
            unknowns.push(jet_symbol(&config_name(i), b));
        }
    }
    for a in 1..=k {
        for i in 1..=n {
            for b in 1..=k {
                unknowns.push(jet_symbol(&momentum_name(a, i), b));
            }
        }
    }
    let mut set = EquationSet::new(format!("HDW equations ({})", sys.variant()), Alphabet::Jet, unknowns);
    for i in 1..=n {
        let q = config_name(i);
        let div = sum((1..=k).map(|a| Expr::var(jet_symbol(&momentum_name(a, i), a))));
        set.push(format!("dH/d{q}"), h.diff(&q) + div);
    }
    for a in 1..=k {
        for i in 1..=n {
            let p = momentum_name(a, i);
            set.push(
                format!("dH/d{p}"),
                h.diff(&p) - Expr::var(jet_symbol(&config_name(i), a)),
            );
        }
    }
    Ok(set)
}

/// Residual of the geometric field equation for a candidate k-vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricResidual {
    /// `Σ i(X_A)ωᴬ − dH`, or `Σ i(X̄_A)Ωᴬ − d𝓗 + Σ ∂𝓗/∂tᴬ dtᴬ`.
    pub form: DifferentialForm,
    /// `ηᴬ(X̄_B) − δᴬ_B` (k-cosymplectic only), row-major in `(A, B)`.
    pub normalization: Vec<Expr>,
}

impl GeometricResidual {
    pub fn is_zero(&self) -> bool {
        self.form.is_zero() && self.normalization.iter().all(Expr::is_zero)
    }

    /// Zero up to the probabilistic equality test.
    pub fn vanishes(&self) -> bool {
        self.form.terms().values().all(|c| equal(c, &Expr::zero()).holds())
            && self.normalization.iter().all(|c| equal(c, &Expr::zero()).holds())
    }
}

pub fn geometric_residual(sys: &FieldTheory, x: &KVectorField) -> Result<GeometricResidual, TheoryError> {
    sys.expect(KHAM, "k-symplectic or k-cosymplectic Hamiltonian")?;
    let frame = sys.frame();
    let h = sys.generator();
    let omega = ksymplectic_on(frame).omega;
    let mut form = DifferentialForm::scalar(frame, h.clone()).d().neg();
    for (w, xa) in omega.iter().zip(x.fields()) {
        form = form.add(&w.interior(xa)?)?;
    }
    let mut normalization = Vec::new();
    if sys.variant() == Variant::KCosymHam {
        for a in 1..=sys.k() {
            let t = base_name(a);
            let dt = DifferentialForm::dx(frame, &t)?;
            form = form.add(&dt.scale(&h.diff(&t)))?;
        }
        for a in 1..=sys.k() {
            let t = frame.base(a).expect("base coordinate");
            for (b, xb) in x.fields().iter().enumerate() {
                let delta = if a == b + 1 { Expr::one() } else { Expr::zero() };
                normalization.push(xb.component(t) - &delta);
            }
        }
    }
    Ok(GeometricResidual { form, normalization })
}

/// Component form of the geometric equation over the `X{A}_{coord}`
/// alphabet, with the normalization block for the k-cosymplectic case.
pub fn kvector_equations(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    sys.expect(KHAM, "k-symplectic or k-cosymplectic Hamiltonian")?;
    let frame = sys.frame();
    let x = symbolic_kvector(frame, &BTreeMap::new());
    let residual = geometric_residual(sys, &x)?;
    let mut set = EquationSet::new(
        format!("k-vector field equations ({})", sys.variant()),
        Alphabet::Components,
        component_unknowns(frame),
    );
    if sys.variant() == Variant::KCosymHam {
        push_normalization_rows(&mut set, frame);
    }
    push_form_rows(&mut set, &residual.form);
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Gauge {
    /// `(X_A)ᴮᵢ = −δᴮ_A (1/k) ∂H/∂qⁱ`.
    #[default]
    DiagonalSplit,
}

pub fn solve_kvector(sys: &FieldTheory, gauge: Gauge) -> Result<KVectorField, TheoryError> {
    sys.expect(KHAM, "k-symplectic or k-cosymplectic Hamiltonian")?;
    let Gauge::DiagonalSplit = gauge;
    let frame = sys.frame();
    let (k, n, h) = (sys.k(), sys.n(), sys.generator());
    let share = Expr::rational(-1, k as i64);
    let fields = (1..=k)
        .map(|a| {
            let mut named = BTreeMap::new();
            for i in 1..=n {
                named.insert(config_name(i), h.diff(&momentum_name(a, i)));
                named.insert(momentum_name(a, i), &share * &h.diff(&config_name(i)));
            }
            if sys.variant() == Variant::KCosymHam {
                named.insert(base_name(a), Expr::one());
            }
            VectorField::from_named(frame, &named)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KVectorField::new(fields)?)
}

/// Substitutes a candidate section into the HDW system.
pub fn verify_section(sys: &FieldTheory, section: &SymbolicSection) -> Result<SectionReport, TheoryError> {
    let eqs = hdw_equations(sys)?;
    if section.frame().kind().has_momenta() && section.k() == sys.k() && section.frame().n() == sys.n() {
        Ok(check_section(&eqs, section))
    } else {
        Err(TheoryError::SectionForeign(section.frame().describe()))
    }
}

/// Substitutes a k-vector field into the component equations.
pub fn substitute_kvector(eqs: &EquationSet, x: &KVectorField) -> EquationSet {
    eqs.substitute(&component_substitution(x))
}

/// Free component count: unknowns minus the rank of the (constant) linear
/// system.
pub fn free_component_count(eqs: &EquationSet) -> Option<usize> {
    crate::theory::constant_linear_rank(eqs).map(|r| eqs.unknowns.len() - r)
}

/// Symbol `X{A}_{q i}` helper for callers that build partial fields.
pub fn config_component(a: usize, i: usize) -> String {
    component_symbol(a, &config_name(i))
}
