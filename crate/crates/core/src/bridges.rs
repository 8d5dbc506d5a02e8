//! Conversions between the k-symplectic, k-cosymplectic and multisymplectic
//! descriptions, and certification that their field equations agree.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::canonical::{base_field, volume_form, volume_minor};
use crate::forms::{
    base_name, contract_k, BundleKind, CoordinateFrame, DifferentialForm, Frame, KVectorField, SmoothMap, VectorField,
    AFFINE_NAME,
};
use crate::hamiltonian::{geometric_residual, hdw_equations, kvector_equations, solve_kvector, Gauge};
use crate::lagrangian::{energy, lagrangian_kvector_equations};
use crate::multisym::{
    hamilton_cartan_forms, ms_hamiltonian_kvector_equations, ms_lagrangian_kvector_equations, ms_section_equations,
    poincare_cartan_forms, wedge_minors,
};
use crate::numeric;
use crate::symexpr::{equal, Assignment, Expr, Sampler};
use crate::theory::{EquationSet, FieldTheory, TheoryError, Variant};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("not autonomous: {}", .0.iter().map(|(t, d)| format!("d/d{t} = {d}")).collect::<Vec<_>>().join(", "))]
    NotAutonomous(Vec<(String, Expr)>),
    #[error("k-vector field is not projectable: {0}")]
    NotProjectable(String),
    #[error("expected a form on {expected}, got {found}")]
    WrongFrame { expected: &'static str, found: &'static str },
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

impl From<crate::forms::FormError> for BridgeError {
    fn from(e: crate::forms::FormError) -> Self {
        BridgeError::Theory(e.into())
    }
}

fn expect_kind(frame: &Frame, kind: BundleKind) -> Result<(), BridgeError> {
    if frame.kind() == kind {
        Ok(())
    } else {
        Err(BridgeError::WrongFrame {
            expected: kind.label(),
            found: frame.kind().label(),
        })
    }
}

// ---------------------------------------------------------------- autonomy

/// `H ↦ 𝓗 = π̄₂*H` (and `L ↦ 𝓛` on the t-extended frame).
pub fn autonomize(sys: &FieldTheory) -> Result<FieldTheory, BridgeError> {
    let target = match sys.variant() {
        Variant::KSymHam => Variant::KCosymHam,
        Variant::KSymLag => Variant::KCosymLag,
        other => {
            return Err(TheoryError::WrongVariant {
                expected: "k-symplectic",
                found: other,
            }
            .into())
        }
    };
    Ok(FieldTheory::new(target, sys.k(), sys.n(), sys.generator().clone())?)
}

/// Inverse of [`autonomize`]; fails unless `∂𝓗/∂tᴬ = 0` for every `A`.
pub fn deautonomize(sys: &FieldTheory) -> Result<FieldTheory, BridgeError> {
    let target = match sys.variant() {
        Variant::KCosymHam | Variant::MsHamSection => Variant::KSymHam,
        Variant::KCosymLag | Variant::MsLag => Variant::KSymLag,
        other => {
            return Err(TheoryError::WrongVariant {
                expected: "t-dependent",
                found: other,
            }
            .into())
        }
    };
    let offending: Vec<(String, Expr)> = (1..=sys.k())
        .map(|a| {
            let t = base_name(a);
            let d = sys.generator().diff(&t);
            (t, d)
        })
        .filter(|(_, d)| !equal(d, &Expr::zero()).holds())
        .collect();
    if !offending.is_empty() {
        return Err(BridgeError::NotAutonomous(offending));
    }
    Ok(FieldTheory::new(target, sys.k(), sys.n(), sys.generator().clone())?)
}

fn extended_kind(kind: BundleKind) -> Option<BundleKind> {
    match kind {
        BundleKind::KCovelocities => Some(BundleKind::ExtKCovelocities),
        BundleKind::KVelocities => Some(BundleKind::ExtKVelocities),
        _ => None,
    }
}

fn reduced_kind(kind: BundleKind) -> Option<BundleKind> {
    match kind {
        BundleKind::ExtKCovelocities => Some(BundleKind::KCovelocities),
        BundleKind::ExtKVelocities => Some(BundleKind::KVelocities),
        _ => None,
    }
}

/// `X̄_A = ∂/∂tᴬ + π̄₂*(X_A)`.
pub fn suspend(x: &KVectorField) -> Result<KVectorField, BridgeError> {
    let frame = x.frame().ok_or(crate::forms::FormError::Arity { expected: 1, found: 0 })?;
    let kind = extended_kind(frame.kind()).ok_or(BridgeError::WrongFrame {
        expected: "(T1k)*Q or T1kQ",
        found: frame.kind().label(),
    })?;
    let target = CoordinateFrame::new(kind, frame.k(), frame.n());
    let fields = x
        .fields()
        .iter()
        .enumerate()
        .map(|(a, xa)| {
            let mut named: BTreeMap<String, Expr> = frame
                .names()
                .zip(xa.components())
                .map(|(n, c)| (n.to_string(), c.clone()))
                .collect();
            named.insert(base_name(a + 1), Expr::one());
            VectorField::from_named(&target, &named)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KVectorField::new(fields)?)
}

/// Projection `X̄ ↦ X` along `π̄₂`, offered only when `(X̄_A)ᴮ = δᴮ_A` and
/// no coefficient depends on `t` (a sufficient condition for projectability).
pub fn deproject(x: &KVectorField) -> Result<KVectorField, BridgeError> {
    let frame = x.frame().ok_or(crate::forms::FormError::Arity { expected: 1, found: 0 })?;
    let kind = reduced_kind(frame.kind()).ok_or(BridgeError::WrongFrame {
        expected: "R^k x (T1k)*Q or R^k x T1kQ",
        found: frame.kind().label(),
    })?;
    let target = CoordinateFrame::new(kind, frame.k(), frame.n());
    let ts: Vec<String> = (1..=frame.k()).map(base_name).collect();
    let mut fields = Vec::new();
    for (a, xa) in x.fields().iter().enumerate() {
        let mut named = BTreeMap::new();
        for (name, c) in frame.names().zip(xa.components()) {
            if let Some(t) = ts.iter().find(|t| t.as_str() == name) {
                let want = if *t == base_name(a + 1) { Expr::one() } else { Expr::zero() };
                if *c != want {
                    return Err(BridgeError::NotProjectable(format!("component {name} of X{} is {c}", a + 1)));
                }
            } else {
                if let Some(t) = ts.iter().find(|t| c.depends_on(t)) {
                    return Err(BridgeError::NotProjectable(format!(
                        "component {name} of X{} depends on {t}",
                        a + 1
                    )));
                }
                named.insert(name.to_string(), c.clone());
            }
        }
        fields.push(VectorField::from_named(&target, &named)?);
    }
    Ok(KVectorField::new(fields)?)
}

// ---------------------------------------------------------------- splitting

/// `Ψ̄: 𝓜π → ℝᵏ×ℝ×(T¹ₖ)*Q`, its inverse, and the quotient `μ: 𝓜π → J¹π*`.
#[derive(Clone, Debug)]
pub struct Splitting {
    pub forward: SmoothMap,
    pub inverse: SmoothMap,
    pub quotient: SmoothMap,
}

/// The product chart carries the same coordinate names, so both directions
/// are the identity in coordinates.
pub fn split_multimomentum(k: usize, n: usize) -> Splitting {
    let ms = CoordinateFrame::new(BundleKind::Multimomentum, k, n);
    let product = CoordinateFrame::new(BundleKind::Multimomentum, k, n);
    let jet = CoordinateFrame::new(BundleKind::ExtKCovelocities, k, n);
    let none = BTreeMap::new();
    Splitting {
        forward: SmoothMap::from_named(&ms, &product, &none).expect("same names"),
        inverse: SmoothMap::from_named(&product, &ms, &none).expect("same names"),
        quotient: SmoothMap::from_named(&ms, &jet, &none).expect("subset of names"),
    }
}

// ---------------------------------------------------------------- extraction

/// `i(∂/∂tᵏ)…i(∂/∂t¹)(α∧dtᴬ)`.
fn nested_contraction(alpha: &DifferentialForm, a: usize) -> Result<DifferentialForm, BridgeError> {
    let frame = alpha.frame();
    let dt = DifferentialForm::dx(frame, &base_name(a))?;
    let bases = (1..=frame.k()).map(|b| base_field(frame, b)).collect::<Result<Vec<_>, _>>()?;
    Ok(contract_k(&alpha.wedge(&dt)?, &bases)?)
}

fn sign(odd: bool) -> Expr {
    if odd {
        Expr::int(-1)
    } else {
        Expr::one()
    }
}

/// Embedding of `target_kind` into `𝓜π` fixing `t` (zero when absent) and
/// the affine coordinate, with momenta kept unless `zero_momenta`.
fn embedding(k: usize, n: usize, source_kind: BundleKind, affine: Expr, zero_momenta: bool) -> SmoothMap {
    let source = CoordinateFrame::new(source_kind, k, n);
    let ms = CoordinateFrame::new(BundleKind::Multimomentum, k, n);
    let mut over = BTreeMap::new();
    over.insert(AFFINE_NAME.to_string(), affine);
    for i in 0..ms.dim() {
        let name = ms.name(i);
        let is_momentum = matches!(ms.role(i), crate::forms::Role::Momentum { .. });
        if !source.contains(name) || (zero_momenta && is_momentum) {
            over.entry(name.to_string()).or_insert_with(Expr::zero);
        }
    }
    SmoothMap::from_named(&source, &ms, &over).expect("names exist")
}

/// Forms `θᴬ`, `ωᴬ` (or `Θᴬ`, `Ωᴬ`) recovered from a k-form and its
/// `(k+1)`-form.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedForms {
    pub theta: Vec<DifferentialForm>,
    pub omega: Vec<DifferentialForm>,
}

fn extract_with(
    theta: &DifferentialForm,
    omega: &DifferentialForm,
    pull: Option<&SmoothMap>,
) -> Result<ExtractedForms, BridgeError> {
    let k = theta.frame().k();
    let back = |f: DifferentialForm| -> Result<DifferentialForm, BridgeError> {
        Ok(match pull {
            Some(m) => m.pullback(&f)?,
            None => f,
        })
    };
    let mut thetas = Vec::new();
    let mut omegas = Vec::new();
    for a in 1..=k {
        thetas.push(back(nested_contraction(theta, a)?.neg())?);
        omegas.push(back(nested_contraction(omega, a)?.scale(&sign(k % 2 == 0)))?);
    }
    Ok(ExtractedForms {
        theta: thetas,
        omega: omegas,
    })
}

/// `θᴬ = −ȷ*[i(∂/∂tᵏ)…i(∂/∂t¹)(Θ∧dtᴬ)]`, `ωᴬ = (−1)ᵏ⁺¹ ȷ*[i(∂/∂tᵏ)…i(∂/∂t¹)(Ω∧dtᴬ)]`
/// with `ȷ: (T¹ₖ)*Q → 𝓜π` the zero section.
pub fn extract_ksymplectic(theta: &DifferentialForm, omega: &DifferentialForm) -> Result<ExtractedForms, BridgeError> {
    expect_kind(theta.frame(), BundleKind::Multimomentum)?;
    let f = theta.frame();
    let j = embedding(f.k(), f.n(), BundleKind::KCovelocities, Expr::zero(), false);
    extract_with(theta, omega, Some(&j))
}

/// Slot form of the same extraction: `θᴬ(X) = ȷ*[Θ(∂/∂t¹, …, ȷ_*X, …, ∂/∂tᵏ)]`
/// and `ωᴬ(X, Y) = ȷ*[Ω(ȷ_*X, ∂/∂t¹, …, ȷ_*Y, …, ∂/∂tᵏ)]`.
pub fn extract_ksymplectic_by_slots(
    theta: &DifferentialForm,
    omega: &DifferentialForm,
) -> Result<ExtractedForms, BridgeError> {
    expect_kind(theta.frame(), BundleKind::Multimomentum)?;
    let f = theta.frame();
    let j = embedding(f.k(), f.n(), BundleKind::KCovelocities, Expr::zero(), false);
    let bases = (1..=f.k()).map(|b| base_field(f, b)).collect::<Result<Vec<_>, _>>()?;
    let mut out = ExtractedForms {
        theta: Vec::new(),
        omega: Vec::new(),
    };
    for a in 1..=f.k() {
        let slots: Vec<Option<&VectorField>> =
            (1..=f.k()).map(|b| if b == a { None } else { Some(&bases[b - 1]) }).collect();
        out.theta.push(j.pullback(&theta.evaluate_slots(&slots)?)?);
        let mut slots2 = vec![None];
        slots2.extend(slots);
        out.omega.push(j.pullback(&omega.evaluate_slots(&slots2)?)?);
    }
    Ok(out)
}

/// Canonical multisymplectic pair built from lower-order forms.
#[derive(Clone, Debug, PartialEq)]
pub struct MsForms {
    pub theta: DifferentialForm,
    pub omega: DifferentialForm,
}

fn rebuild_with(thetas: &[DifferentialForm], from: BundleKind) -> Result<MsForms, BridgeError> {
    let f = thetas[0].frame();
    expect_kind(f, from)?;
    let ms = CoordinateFrame::new(BundleKind::Multimomentum, f.k(), f.n());
    let sigma = SmoothMap::from_named(&ms, f, &BTreeMap::new())?;
    let lifted = thetas.iter().map(|t| sigma.pullback(t)).collect::<Result<Vec<_>, _>>()?;
    let theta = volume_form(&ms)?
        .scale(&Expr::var(AFFINE_NAME))
        .add(&wedge_minors(&lifted)?)?;
    let omega = theta.d().neg();
    Ok(MsForms { theta, omega })
}

/// `Θ = p dᵏt + σ₂*θᴬ∧dᵏ⁻¹t_A`, `Ω = −dΘ`.
pub fn rebuild_ms_from_ksymplectic(thetas: &[DifferentialForm]) -> Result<MsForms, BridgeError> {
    rebuild_with(thetas, BundleKind::KCovelocities)
}

/// k-cosymplectic data recovered from `(Θ, Ω)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedCosymplectic {
    pub eta: Vec<DifferentialForm>,
    pub theta: Vec<DifferentialForm>,
    pub omega: Vec<DifferentialForm>,
}

/// `Θᴬ`, `Ωᴬ` through the zero section `𝔦` of `μ`, and `ηᴬ` by [`etas_from_omega`].
pub fn extract_kcosymplectic(
    theta: &DifferentialForm,
    omega: &DifferentialForm,
) -> Result<ExtractedCosymplectic, BridgeError> {
    expect_kind(theta.frame(), BundleKind::Multimomentum)?;
    let f = theta.frame();
    let i = embedding(f.k(), f.n(), BundleKind::ExtKCovelocities, Expr::zero(), false);
    let ExtractedForms { theta: t, omega: o } = extract_with(theta, omega, Some(&i))?;
    Ok(ExtractedCosymplectic {
        eta: etas_from_omega(omega)?,
        theta: t,
        omega: o,
    })
}

/// `ηᴬ(X̄) = −𝔦*[Ω(∂/∂p, ∂/∂t¹, …, 𝔦_*X̄, …, ∂/∂tᵏ)]`; only `−dp∧dᵏt` survives
/// the `∂/∂p` slot, so the sign does not depend on `A` or `k`.
pub fn etas_from_omega(omega: &DifferentialForm) -> Result<Vec<DifferentialForm>, BridgeError> {
    let f = omega.frame();
    expect_kind(f, BundleKind::Multimomentum)?;
    let i = embedding(f.k(), f.n(), BundleKind::ExtKCovelocities, Expr::zero(), false);
    let dp = VectorField::coordinate(f, AFFINE_NAME)?;
    let bases = (1..=f.k()).map(|b| base_field(f, b)).collect::<Result<Vec<_>, _>>()?;
    (1..=f.k())
        .map(|a| {
            let mut slots: Vec<Option<&VectorField>> = vec![Some(&dp)];
            slots.extend((1..=f.k()).map(|b| if b == a { None } else { Some(&bases[b - 1]) }));
            let raw = i.pullback(&omega.evaluate_slots(&slots)?)?;
            Ok(raw.neg())
        })
        .collect()
}

/// `ηᴬ(X̄) = ȷ₀*[Θ(∂/∂t¹, …, (ȷ₀)_*X̄, …, ∂/∂tᵏ)]` with `ȷ₀(t, α) = (t, 1, 0)`.
pub fn etas_from_theta(theta: &DifferentialForm) -> Result<Vec<DifferentialForm>, BridgeError> {
    let f = theta.frame();
    expect_kind(f, BundleKind::Multimomentum)?;
    let j0 = embedding(f.k(), f.n(), BundleKind::ExtKCovelocities, Expr::one(), true);
    let bases = (1..=f.k()).map(|b| base_field(f, b)).collect::<Result<Vec<_>, _>>()?;
    (1..=f.k())
        .map(|a| {
            let slots: Vec<Option<&VectorField>> =
                (1..=f.k()).map(|b| if b == a { None } else { Some(&bases[b - 1]) }).collect();
            Ok(j0.pullback(&theta.evaluate_slots(&slots)?)?)
        })
        .collect()
}

/// `Θ = p dᵏt + σ̄₂*Θᴬ∧dᵏ⁻¹t_A`, `Ω = −dΘ`.
pub fn rebuild_ms_from_kcosymplectic(thetas: &[DifferentialForm]) -> Result<MsForms, BridgeError> {
    rebuild_with(thetas, BundleKind::ExtKCovelocities)
}

/// k-cosymplectic forms plus the scalar recovered from the `dᵏt` coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedWithScalar {
    pub theta: Vec<DifferentialForm>,
    pub omega: Vec<DifferentialForm>,
    /// `𝓗` for Hamilton–Cartan input, `𝓔_𝓛` for Poincaré–Cartan input.
    pub scalar: Expr,
}

fn extract_on_self(theta: &DifferentialForm, omega: &DifferentialForm) -> Result<ExtractedWithScalar, BridgeError> {
    let f = theta.frame();
    let bases = (1..=f.k()).map(|b| base_field(f, b)).collect::<Result<Vec<_>, _>>()?;
    let scalar = -contract_k(theta, &bases)?.as_scalar().expect("full contraction");
    let ExtractedForms { theta, omega } = extract_with(theta, omega, None)?;
    Ok(ExtractedWithScalar { theta, omega, scalar })
}

fn rebuild_on_self(thetas: &[DifferentialForm], scalar: &Expr) -> Result<MsForms, BridgeError> {
    let f = thetas[0].frame();
    let theta = wedge_minors(thetas)?.sub(&volume_form(f)?.scale(scalar))?;
    let omega = theta.d().neg();
    Ok(MsForms { theta, omega })
}

/// `Θᴬ = −i(∂/∂tᵏ)…i(∂/∂t¹)(Θ_h∧dtᴬ)`, `Ωᴬ = (−1)ᵏ⁺¹ i(∂/∂tᵏ)…i(∂/∂t¹)(Ω_h∧dtᴬ)`,
/// `𝓗 = −Θ_h(∂/∂t¹, …, ∂/∂tᵏ)`.
pub fn hamcartan_to_kcosymplectic(
    theta_h: &DifferentialForm,
    omega_h: &DifferentialForm,
) -> Result<ExtractedWithScalar, BridgeError> {
    expect_kind(theta_h.frame(), BundleKind::ExtKCovelocities)?;
    extract_on_self(theta_h, omega_h)
}

/// `Θ_h = −𝓗 dᵏt + Θᴬ∧dᵏ⁻¹t_A`, `Ω_h = −dΘ_h`.
pub fn kcosymplectic_to_hamcartan(thetas: &[DifferentialForm], h: &Expr) -> Result<MsForms, BridgeError> {
    expect_kind(thetas[0].frame(), BundleKind::ExtKCovelocities)?;
    rebuild_on_self(thetas, h)
}

/// `Θ_𝓛ᴬ = −i(∂/∂tᵏ)…i(∂/∂t¹)(Θ_𝕃∧dtᴬ)`, `Ω_𝓛ᴬ = −dΘ_𝓛ᴬ`, `𝓔_𝓛 = −Θ_𝕃(∂/∂t¹, …)`.
///
/// The contraction formula for `Ω_𝓛ᴬ` drops the `dqⁱ∧dtᴬ` block whenever
/// `∂𝓛/∂vᴬᵢ` depends on `t`, so `−dΘ_𝓛ᴬ` is used; [`lagrangian_omega_by_contraction`]
/// exposes the literal formula.
pub fn lagrangian_ms_to_kcosymplectic(
    theta_l: &DifferentialForm,
    omega_l: &DifferentialForm,
) -> Result<ExtractedWithScalar, BridgeError> {
    expect_kind(theta_l.frame(), BundleKind::ExtKVelocities)?;
    let mut out = extract_on_self(theta_l, omega_l)?;
    out.omega = out.theta.iter().map(|t| t.d().neg()).collect();
    Ok(out)
}

/// `(−1)ᵏ⁺¹ i(∂/∂tᵏ)…i(∂/∂t¹)(Ω_𝕃∧dtᴬ)` for each `A`.
pub fn lagrangian_omega_by_contraction(omega_l: &DifferentialForm) -> Result<Vec<DifferentialForm>, BridgeError> {
    let k = omega_l.frame().k();
    (1..=k)
        .map(|a| Ok(nested_contraction(omega_l, a)?.scale(&sign(k % 2 == 0))))
        .collect()
}

/// `Θ_𝕃 = −𝓔_𝓛 dᵏt + Θ_𝓛ᴬ∧dᵏ⁻¹t_A`, `Ω_𝕃 = −dΘ_𝕃`.
pub fn lagrangian_kcosymplectic_to_ms(thetas: &[DifferentialForm], energy: &Expr) -> Result<MsForms, BridgeError> {
    expect_kind(thetas[0].frame(), BundleKind::ExtKVelocities)?;
    rebuild_on_self(thetas, energy)
}

/// `Ω = −dp∧dᵏt + σ*ωᴬ∧dᵏ⁻¹t_A` written out, for checking `Ω = −dΘ`.
pub fn omega_from_pieces(omegas: &[DifferentialForm], scalar_differential: &DifferentialForm) -> Result<DifferentialForm, BridgeError> {
    let f = scalar_differential.frame();
    let mut acc = scalar_differential.wedge(&volume_form(f)?)?;
    for (a, w) in omegas.iter().enumerate() {
        acc = acc.add(&w.wedge(&volume_minor(f, a + 1)?)?)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------- certification

/// Row of one system not implied by the other.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// Name of the system the row belongs to.
    pub system: String,
    pub label: String,
    pub residual: Expr,
    /// Largest deviation seen on the other system's solution set.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Equivalence {
    Equivalent,
    NotEquivalent(Witness),
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub lhs: String,
    pub rhs: String,
    pub verdict: Equivalence,
    /// `identical` when the normalized residual sets coincide up to sign,
    /// `sampled` when decided on solution sets at random points.
    pub method: &'static str,
    pub samples: usize,
}

const CERT_SAMPLES: usize = 8;
const FIBRE_SAMPLES: usize = 3;

fn identical_up_to_sign(a: &EquationSet, b: &EquationSet) -> bool {
    let canon = |s: &EquationSet| -> BTreeSet<String> {
        s.residuals()
            .filter(|r| !r.is_zero())
            .map(|r| {
                let neg = (-r.clone()).normalize();
                let (x, y) = (r.to_string(), neg.to_string());
                if x < y {
                    x
                } else {
                    y
                }
            })
            .collect()
    };
    canon(a) == canon(b)
}

/// Rows linear in the unknowns, as `(row index, gradient, offset)`.
struct Linearized {
    linear: Vec<(usize, Vec<Expr>, Expr)>,
}

fn linearize(set: &EquationSet, unknowns: &[String]) -> Linearized {
    let zero: BTreeMap<String, Expr> = unknowns.iter().map(|u| (u.clone(), Expr::zero())).collect();
    let mut linear = Vec::new();
    for (idx, r) in set.residuals().enumerate() {
        let grads: Vec<Expr> = unknowns.iter().map(|u| r.diff(u)).collect();
        if grads.iter().all(|g| unknowns.iter().all(|u| !g.depends_on(u))) {
            linear.push((idx, grads, r.substitute(&zero)));
        }
    }
    Linearized { linear }
}

fn eval_row(e: &Expr, at: &Assignment) -> Option<f64> {
    e.eval(at).ok().filter(|v| v.is_finite())
}

/// Solution set of the linear rows at a coordinate point.
fn solution_space(lin: &Linearized, at: &Assignment, m: usize) -> Option<Option<(DVector<f64>, DMatrix<f64>)>> {
    let rows = lin.linear.len();
    let mut a = DMatrix::zeros(rows, m);
    let mut b = DVector::zeros(rows);
    for (r, (_, grads, off)) in lin.linear.iter().enumerate() {
        for (c, g) in grads.iter().enumerate() {
            a[(r, c)] = eval_row(g, at)?;
        }
        b[r] = -eval_row(off, at)?;
    }
    Some(numeric::affine_solutions(&a, &b, 1e-10))
}

/// Largest residual of `set` over points of the affine space `x₀ + N c`.
fn max_deviation(
    set: &EquationSet,
    unknowns: &[String],
    at: &Assignment,
    space: &(DVector<f64>, DMatrix<f64>),
    sampler: &mut Sampler,
) -> Option<Vec<f64>> {
    let (x0, null) = space;
    let mut worst = vec![0.0f64; set.len()];
    for _ in 0..FIBRE_SAMPLES {
        let c = DVector::from_fn(null.ncols(), |_, _| sampler.uniform(-1.0, 1.0));
        let x = x0 + null * c;
        let mut point = at.clone();
        for (u, v) in unknowns.iter().zip(x.iter()) {
            point.set(u.clone(), *v);
        }
        for (w, r) in worst.iter_mut().zip(set.residuals()) {
            let scale = 1.0 + x.amax();
            *w = w.max(eval_row(r, &point)?.abs() / scale);
        }
    }
    Some(worst)
}

fn coordinate_names(sets: &[&EquationSet], unknowns: &[String]) -> Vec<String> {
    let mut names = BTreeSet::new();
    for s in sets {
        for r in s.residuals() {
            names.extend(r.free_vars());
        }
    }
    for u in unknowns {
        names.remove(u);
    }
    names.into_iter().collect()
}

/// Decides whether two equation sets over (the union of) their unknown
/// alphabets have the same solutions. Coordinates are sampled; at each point
/// the solution set of each side's linear rows is computed, and every row of
/// both systems must vanish on it.
pub fn certify_equation_equivalence(e1: &EquationSet, e2: &EquationSet, sampler: &mut Sampler) -> Certificate {
    let mut cert = Certificate {
        lhs: e1.name.clone(),
        rhs: e2.name.clone(),
        verdict: Equivalence::Equivalent,
        method: "identical",
        samples: 0,
    };
    if identical_up_to_sign(e1, e2) {
        return cert;
    }
    cert.method = "sampled";
    let mut unknowns: Vec<String> = e1.unknowns.clone();
    for u in &e2.unknowns {
        if !unknowns.contains(u) {
            unknowns.push(u.clone());
        }
    }
    let coords = coordinate_names(&[e1, e2], &unknowns);
    let lins = [linearize(e1, &unknowns), linearize(e2, &unknowns)];
    let sets = [e1, e2];
    let mut worst: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut attempts = 0;
    while cert.samples < CERT_SAMPLES && attempts < 16 * CERT_SAMPLES {
        attempts += 1;
        let at = sampler.point(&coords, -2.0, 2.0);
        let mut spaces = Vec::new();
        for lin in &lins {
            match solution_space(lin, &at, unknowns.len()) {
                Some(s) => spaces.push(s),
                None => break,
            }
        }
        if spaces.len() < 2 {
            continue;
        }
        // a side without solutions where the other has some is reported
        // through its first linear row
        for side in 0..2 {
            if spaces[side].is_none() && spaces[1 - side].is_some() {
                if let Some((row, _, _)) = lins[side].linear.first() {
                    worst.insert((side, *row), f64::INFINITY);
                }
            }
        }
        let mut ok = true;
        for space in spaces.iter().flatten() {
            for (target, set) in sets.iter().enumerate() {
                let Some(dev) = max_deviation(set, &unknowns, &at, space, sampler) else {
                    ok = false;
                    break;
                };
                for (row, d) in dev.into_iter().enumerate() {
                    let key = (target, row);
                    let e = worst.entry(key).or_insert(0.0);
                    *e = e.max(d);
                }
            }
        }
        if ok {
            cert.samples += 1;
        }
    }
    let tol = 1e-7;
    if let Some((&(side, row), &dev)) = worst
        .iter()
        .filter(|(_, &d)| d > tol)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
    {
        let eq = &sets[side].equations[row];
        cert.verdict = Equivalence::NotEquivalent(Witness {
            system: sets[side].name.clone(),
            label: eq.label.clone(),
            residual: eq.residual.clone(),
            deviation: dev,
        });
    }
    cert
}

// ---------------------------------------------------------------- theorem suite

/// One named equivalence certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremCertificate {
    pub theorem: &'static str,
    pub certificate: Certificate,
}

/// One named identity check (symbolic zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    pub identity: &'static str,
    pub holds: bool,
}

/// Every equivalence theorem that applies to `sys`.
pub fn theorem_suite(sys: &FieldTheory, sampler: &mut Sampler) -> Result<Vec<TheoremCertificate>, BridgeError> {
    let mut out = Vec::new();
    let mut push = |theorem, certificate| out.push(TheoremCertificate { theorem, certificate });
    let time_dependent = match sys.variant() {
        Variant::KSymHam | Variant::KSymLag => {
            let auto = autonomize(sys)?;
            let he20 = hdw_equations_or_el(sys)?;
            let he = hdw_equations_or_el(&auto)?;
            push("autonomous one-to-one correspondence", certify_equation_equivalence(&he20, &he, sampler));
            auto
        }
        _ => sys.clone(),
    };
    let t = &time_dependent;
    match t.variant() {
        Variant::KCosymHam | Variant::MsHamSection => {
            let kc = FieldTheory::new(Variant::KCosymHam, t.k(), t.n(), t.generator().clone())?;
            let ms = FieldTheory::new(Variant::MsHamSection, t.k(), t.n(), t.generator().clone())?;
            push(
                "k-cosymplectic and multisymplectic Hamiltonian k-vector fields coincide",
                certify_equation_equivalence(&kvector_equations(&kc)?, &ms_hamiltonian_kvector_equations(&ms)?, sampler),
            );
            push(
                "Hamilton-Cartan section equations are the HDW equations",
                certify_equation_equivalence(&hdw_equations(&kc)?, &ms_section_equations(&ms)?, sampler),
            );
            if let Ok(auto) = deautonomize(&kc) {
                push(
                    "one-to-one correspondence with the deautonomized system",
                    certify_equation_equivalence(&hdw_equations(&auto)?, &hdw_equations(&kc)?, sampler),
                );
            }
        }
        Variant::KCosymLag | Variant::MsLag => {
            let kc = FieldTheory::new(Variant::KCosymLag, t.k(), t.n(), t.generator().clone())?;
            let ms = FieldTheory::new(Variant::MsLag, t.k(), t.n(), t.generator().clone())?;
            push(
                "k-cosymplectic and multisymplectic Lagrangian k-vector fields coincide",
                certify_equation_equivalence(&lagrangian_kvector_equations(&kc)?, &ms_lagrangian_kvector_equations(&ms)?, sampler),
            );
        }
        _ => {}
    }
    Ok(out)
}

fn hdw_equations_or_el(sys: &FieldTheory) -> Result<EquationSet, TheoryError> {
    if sys.variant().is_hamiltonian() {
        hdw_equations(sys)
    } else {
        crate::lagrangian::euler_lagrange_equations(sys)
    }
}

/// Structural identities relating the formalisms for `sys` (k ≥ 1, n ≥ 1):
/// bridge round-trips on canonical and generator-derived forms, and, for
/// k-symplectic Hamiltonians, the suspension of the gauge solution.
pub fn identity_suite(sys: &FieldTheory) -> Result<Vec<IdentityCheck>, BridgeError> {
    let (k, n) = (sys.k(), sys.n());
    let mut out = Vec::new();
    let ms = crate::canonical::canonical_multisymplectic(k, n);
    let ks = crate::canonical::canonical_ksymplectic(k, n);
    let kc = crate::canonical::canonical_kcosymplectic(k, n);
    let ex = extract_ksymplectic(&ms.theta, &ms.omega)?;
    out.push(IdentityCheck {
        identity: "k-symplectic forms extracted from the multisymplectic forms",
        holds: ex.theta == ks.theta && ex.omega == ks.omega,
    });
    let re = rebuild_ms_from_ksymplectic(&ks.theta)?;
    out.push(IdentityCheck {
        identity: "multisymplectic forms rebuilt from the k-symplectic forms",
        holds: re.theta == ms.theta && re.omega == ms.omega,
    });
    let exc = extract_kcosymplectic(&ms.theta, &ms.omega)?;
    out.push(IdentityCheck {
        identity: "k-cosymplectic forms extracted from the multisymplectic forms",
        holds: exc.theta == kc.theta && exc.omega == kc.omega && exc.eta == kc.eta,
    });
    out.push(IdentityCheck {
        identity: "eta recovered from Omega agrees with eta recovered from Theta",
        holds: etas_from_theta(&ms.theta)? == exc.eta,
    });
    let rec = rebuild_ms_from_kcosymplectic(&kc.theta)?;
    out.push(IdentityCheck {
        identity: "multisymplectic forms rebuilt from the k-cosymplectic forms",
        holds: rec.theta == ms.theta && rec.omega == ms.omega,
    });
    let generic = FieldTheory::new(
        if sys.variant().is_hamiltonian() { Variant::MsHamSection } else { Variant::MsLag },
        k,
        n,
        sys.generator().clone(),
    )?;
    if generic.variant() == Variant::MsHamSection {
        let hc = hamilton_cartan_forms(&generic)?;
        let back = hamcartan_to_kcosymplectic(&hc.theta, &hc.omega)?;
        let canon = crate::canonical::ksymplectic_on(generic.frame());
        let rebuilt = kcosymplectic_to_hamcartan(&back.theta, &back.scalar)?;
        out.push(IdentityCheck {
            identity: "Hamilton-Cartan forms and k-cosymplectic forms round-trip",
            holds: back.theta == canon.theta
                && back.omega == canon.omega
                && equal(&back.scalar, generic.generator()).holds()
                && rebuilt.theta.symbolic_eq(&hc.theta).holds()
                && rebuilt.omega.symbolic_eq(&hc.omega).holds(),
        });
        out.push(IdentityCheck {
            identity: "Hamilton-Cartan forms equal the pullback of the canonical forms",
            holds: hc.theta_by_pullback()?.symbolic_eq(&hc.theta).holds(),
        });
    } else {
        let pc = poincare_cartan_forms(&generic)?;
        let back = lagrangian_ms_to_kcosymplectic(&pc.theta, &pc.omega)?;
        let kcl = FieldTheory::new(Variant::KCosymLag, k, n, generic.generator().clone())?;
        let lf = crate::lagrangian::lagrangian_forms(&kcl)?;
        let rebuilt = lagrangian_kcosymplectic_to_ms(&back.theta, &back.scalar)?;
        let same = |a: &[DifferentialForm], b: &[DifferentialForm]| a.iter().zip(b).all(|(x, y)| x.symbolic_eq(y).holds());
        out.push(IdentityCheck {
            identity: "Poincare-Cartan forms and Lagrangian k-cosymplectic forms round-trip",
            holds: same(&back.theta, &lf.theta)
                && same(&back.omega, &lf.omega)
                && equal(&back.scalar, &energy(&kcl)?).holds()
                && rebuilt.theta.symbolic_eq(&pc.theta).holds()
                && rebuilt.omega.symbolic_eq(&pc.omega).holds(),
        });
        let leg = crate::multisym::extended_restricted_legendre(&generic)?;
        out.push(IdentityCheck {
            identity: "extended Legendre map pulls back Theta and Omega",
            holds: leg.extended.pullback(&ms.theta)?.symbolic_eq(&pc.theta).holds()
                && leg.extended.pullback(&ms.omega)?.symbolic_eq(&pc.omega).holds(),
        });
    }
    if sys.variant() == Variant::KSymHam {
        let x = solve_kvector(sys, Gauge::DiagonalSplit)?;
        let r = geometric_residual(&autonomize(sys)?, &suspend(&x)?)?;
        out.push(IdentityCheck {
            identity: "suspension maps the k-symplectic solution to a k-cosymplectic solution",
            holds: r.vanishes(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{canonical_kcosymplectic, canonical_ksymplectic, canonical_multisymplectic};
    use crate::symexpr::parse;

    fn sys(v: Variant, k: usize, n: usize, g: &str) -> FieldTheory {
        FieldTheory::new(v, k, n, parse(g).unwrap()).unwrap()
    }

    #[test]
    fn autonomy_round_trip_and_errors() {
        let s = sys(Variant::KSymHam, 2, 1, "(p1_1^2 + p2_1^2)/2");
        let a = autonomize(&s).unwrap();
        assert_eq!(a.variant(), Variant::KCosymHam);
        assert_eq!(a.generator(), s.generator());
        assert_eq!(deautonomize(&a).unwrap(), s);
        let t = sys(Variant::KCosymHam, 1, 1, "t1*q1");
        match deautonomize(&t) {
            Err(BridgeError::NotAutonomous(v)) => assert_eq!(v, vec![("t1".to_string(), Expr::var("q1"))]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn suspension_of_oscillator() {
        let s = sys(Variant::KSymHam, 1, 1, "(q1^2 + p1_1^2)/2");
        let x = solve_kvector(&s, Gauge::DiagonalSplit).unwrap();
        let xs = suspend(&x).unwrap();
        assert_eq!(xs.field(1).to_string(), "p1_1*∂/∂q1 - q1*∂/∂p1_1 + ∂/∂t1");
        assert_eq!(deproject(&xs).unwrap(), x);
        let r = geometric_residual(&autonomize(&s).unwrap(), &xs).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn deprojection_guard() {
        let s = sys(Variant::KCosymHam, 1, 1, "(q1^2 + p1_1^2)/2 + t1*q1");
        let x = solve_kvector(&s, Gauge::DiagonalSplit).unwrap();
        assert!(matches!(deproject(&x), Err(BridgeError::NotProjectable(_))));
    }

    #[test]
    fn splitting_is_identity() {
        let sp = split_multimomentum(2, 1);
        let ms = canonical_multisymplectic(2, 1);
        let round = sp.inverse.compose(&sp.forward).unwrap();
        assert_eq!(round.pullback(&ms.theta).unwrap(), ms.theta);
        assert_eq!(sp.quotient.target().dim() + 1, ms.frame.dim());
        assert!(!sp.quotient.target().contains(AFFINE_NAME));
    }

    #[test]
    fn canonical_round_trips() {
        for k in 1..=3 {
            for n in 1..=2 {
                let ms = canonical_multisymplectic(k, n);
                let ks = canonical_ksymplectic(k, n);
                let kc = canonical_kcosymplectic(k, n);
                let ex = extract_ksymplectic(&ms.theta, &ms.omega).unwrap();
                assert_eq!(ex.theta, ks.theta, "k={k} n={n}");
                assert_eq!(ex.omega, ks.omega, "k={k} n={n}");
                assert_eq!(extract_ksymplectic_by_slots(&ms.theta, &ms.omega).unwrap(), ex);
                let re = rebuild_ms_from_ksymplectic(&ex.theta).unwrap();
                assert_eq!(re.theta, ms.theta);
                assert_eq!(re.omega, ms.omega);
                let exc = extract_kcosymplectic(&ms.theta, &ms.omega).unwrap();
                assert_eq!(exc.eta, kc.eta, "k={k}");
                assert_eq!(etas_from_theta(&ms.theta).unwrap(), kc.eta, "k={k}");
                assert_eq!(exc.theta, kc.theta);
                assert_eq!(exc.omega, kc.omega);
                let rec = rebuild_ms_from_kcosymplectic(&exc.theta).unwrap();
                assert_eq!(rec.theta, ms.theta);
                assert_eq!(rec.omega, ms.omega);
                let dp = DifferentialForm::dx(&ms.frame, AFFINE_NAME).unwrap().neg();
                let sigma = SmoothMap::from_named(&ms.frame, &kc.frame, &BTreeMap::new()).unwrap();
                let lifted: Vec<_> = kc.omega.iter().map(|w| sigma.pullback(w).unwrap()).collect();
                assert_eq!(omega_from_pieces(&lifted, &dp).unwrap(), ms.omega);
            }
        }
    }

    #[test]
    fn hamcartan_bridge() {
        for (k, n, h) in [(2, 1, "(p1_1^2 - p2_1^2)/2"), (1, 1, "0"), (3, 2, "t3*q2*p1_2 + exp(q1)")] {
            let s = sys(Variant::MsHamSection, k, n, h);
            let hc = hamilton_cartan_forms(&s).unwrap();
            let back = hamcartan_to_kcosymplectic(&hc.theta, &hc.omega).unwrap();
            let canon = crate::canonical::ksymplectic_on(s.frame());
            assert_eq!(back.theta, canon.theta);
            assert_eq!(back.omega, canon.omega);
            assert_eq!(back.scalar, s.generator().clone());
            let re = kcosymplectic_to_hamcartan(&back.theta, &back.scalar).unwrap();
            assert_eq!(re.theta, hc.theta);
            assert_eq!(re.omega, hc.omega);
            let dh = DifferentialForm::scalar(s.frame(), s.generator().clone()).d();
            assert_eq!(omega_from_pieces(&canon.omega, &dh).unwrap(), hc.omega);
        }
    }

    #[test]
    fn lagrangian_bridge() {
        for (k, n, l) in [(2, 1, "(v1_1^2 - v2_1^2)/2"), (2, 1, "q1*t2"), (2, 2, "v1_1*v2_2 + t1*v2_1*q2"), (3, 1, "v3_1^2 - q1^2")] {
            let s = sys(Variant::MsLag, k, n, l);
            let kc = sys(Variant::KCosymLag, k, n, l);
            let pc = poincare_cartan_forms(&s).unwrap();
            let back = lagrangian_ms_to_kcosymplectic(&pc.theta, &pc.omega).unwrap();
            let lf = crate::lagrangian::lagrangian_forms(&kc).unwrap();
            for a in 0..k {
                assert!(back.theta[a].symbolic_eq(&lf.theta[a]).holds(), "{l}");
                assert!(back.omega[a].symbolic_eq(&lf.omega[a]).holds(), "{l}");
            }
            assert!(equal(&back.scalar, &energy(&kc).unwrap()).holds());
            let re = lagrangian_kcosymplectic_to_ms(&back.theta, &back.scalar).unwrap();
            assert!(re.theta.symbolic_eq(&pc.theta).holds());
            assert!(re.omega.symbolic_eq(&pc.omega).holds());
            assert!(re.omega.d().is_zero());
        }
    }

    #[test]
    fn literal_lagrangian_omega_formula_misses_time_block() {
        let autonomous = sys(Variant::MsLag, 2, 1, "(v1_1^2 - v2_1^2)/2 + q1^2");
        let pc = poincare_cartan_forms(&autonomous).unwrap();
        let lf = crate::lagrangian::lagrangian_forms(&sys(Variant::KCosymLag, 2, 1, "(v1_1^2 - v2_1^2)/2 + q1^2")).unwrap();
        assert_eq!(lagrangian_omega_by_contraction(&pc.omega).unwrap(), lf.omega);
        let timed = sys(Variant::MsLag, 2, 1, "t1*v1_1*q1");
        let pc = poincare_cartan_forms(&timed).unwrap();
        let lit = lagrangian_omega_by_contraction(&pc.omega).unwrap();
        let lf = crate::lagrangian::lagrangian_forms(&sys(Variant::KCosymLag, 2, 1, "t1*v1_1*q1")).unwrap();
        assert_ne!(lit[0], lf.omega[0]);
    }

    #[test]
    fn certificates() {
        let mut s = Sampler::from_seed(9);
        let h = "(p1_1^2 + p2_1^2)/2 + q1^2";
        let kc = sys(Variant::KCosymHam, 2, 1, h);
        let ms = sys(Variant::MsHamSection, 2, 1, h);
        let c = certify_equation_equivalence(&kvector_equations(&kc).unwrap(), &ms_hamiltonian_kvector_equations(&ms).unwrap(), &mut s);
        assert!(c.verdict.holds(), "{c:?}");
        assert_eq!(c.method, "sampled");
        let w = "(v1_1^2 - v2_1^2)/2";
        let c = certify_equation_equivalence(
            &lagrangian_kvector_equations(&sys(Variant::KCosymLag, 2, 1, w)).unwrap(),
            &ms_lagrangian_kvector_equations(&sys(Variant::MsLag, 2, 1, w)).unwrap(),
            &mut s,
        );
        assert!(c.verdict.holds(), "{c:?}");
        let a = hdw_equations(&sys(Variant::KSymHam, 1, 1, "q1")).unwrap();
        let b = hdw_equations(&sys(Variant::KSymHam, 1, 1, "2*q1")).unwrap();
        match certify_equation_equivalence(&a, &b, &mut s).verdict {
            Equivalence::NotEquivalent(wit) => {
                assert!(wit.deviation > 1e-3);
                assert!(!wit.residual.is_zero());
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn suites_pass_on_library() {
        let mut s = Sampler::from_seed(4);
        for (v, k, n, g) in [
            (Variant::KSymHam, 2, 1, "(p1_1^2 + p2_1^2)/2"),
            (Variant::KSymHam, 1, 1, "(q1^2 + p1_1^2)/2"),
            (Variant::KCosymHam, 2, 2, "p1_1*p2_2 + t1*q2 + q1^2*p1_2"),
            (Variant::MsHamSection, 3, 1, "(p1_1^2 + p2_1^2 + p3_1^2)/2 + sin(q1)"),
            (Variant::KSymLag, 2, 1, "(v1_1^2 - v2_1^2)/2"),
            (Variant::KCosymLag, 2, 1, "v1_1*v2_1 + t2*q1"),
            (Variant::MsLag, 1, 1, "v1_1^2/2 - q1^2/2"),
            (Variant::KSymLag, 2, 1, "v1_1^2/2"),
        ] {
            let t = sys(v, k, n, g);
            for c in theorem_suite(&t, &mut s).unwrap() {
                assert!(c.certificate.verdict.holds(), "{g}: {} {:?}", c.theorem, c.certificate);
            }
            for c in identity_suite(&t).unwrap() {
                assert!(c.holds, "{g}: {}", c.identity);
            }
        }
    }
}
