//! Canonical structures in Darboux coordinates.
//!
//! Orientation signs all come from one convention: `dᵏ⁻¹t_A = i(∂/∂tᴬ) dᵏt`.

use nalgebra::DMatrix;

use crate::forms::{
    BundleKind, CoordinateFrame, DifferentialForm, FormError, Frame, OneOneTensor, Role, VectorField,
};
use crate::numeric;
use crate::symexpr::{Expr, Sampler};

/// Outcome of one structural invariant check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), passed }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// `dt¹∧…∧dtᵏ` on a frame carrying base coordinates.
pub fn volume_form(frame: &Frame) -> Result<DifferentialForm, FormError> {
    let idx = (1..=frame.k())
        .map(|a| frame.base(a).ok_or_else(|| FormError::UnknownCoordinate(format!("t{a}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DifferentialForm::monomial(frame, Expr::one(), &idx))
}

/// `dᵏ⁻¹t_A := i(∂/∂tᴬ) dᵏt`.
pub fn volume_minor(frame: &Frame, a: usize) -> Result<DifferentialForm, FormError> {
    let dt = base_field(frame, a)?;
    volume_form(frame)?.interior(&dt)
}

/// Coordinate field `∂/∂tᴬ`.
pub fn base_field(frame: &Frame, a: usize) -> Result<VectorField, FormError> {
    VectorField::coordinate(frame, &crate::forms::base_name(a))
}

fn fibre_span(frame: &Frame) -> Vec<VectorField> {
    (0..frame.dim())
        .filter(|&i| matches!(frame.role(i), Role::Momentum { .. } | Role::Velocity { .. }))
        .map(|i| VectorField::coordinate(frame, frame.name(i)).expect("own coordinate"))
        .collect()
}

pub(crate) fn tautological(frame: &Frame, a: usize) -> DifferentialForm {
    let terms = (1..=frame.n()).map(|i| {
        let p = frame.momentum(a, i).expect("momentum coordinate");
        (vec![frame.config(i).unwrap()], Expr::var(frame.name(p)))
    });
    DifferentialForm::from_terms(frame, 1, terms)
}

fn all_closed(forms: &[DifferentialForm]) -> bool {
    forms.iter().all(|f| f.d().is_zero())
}

fn vanishes_on_pairs(forms: &[DifferentialForm], span: &[VectorField]) -> bool {
    forms.iter().all(|w| {
        span.iter().all(|x| {
            span.iter().all(|y| {
                w.evaluate_slots(&[Some(x), Some(y)])
                    .map(|v| v.is_zero())
                    .unwrap_or(false)
            })
        })
    })
}

/// Stacks the contraction matrices of several forms and tests for trivial
/// common kernel at `samples` random points.
fn trivial_joint_kernel(forms: &[DifferentialForm], frame: &Frame, samples: usize, sampler: &mut Sampler) -> bool {
    let names: Vec<String> = frame.names().map(String::from).collect();
    (0..samples).all(|_| {
        let at = sampler.point(&names, -2.0, 2.0);
        let blocks: Option<Vec<DMatrix<f64>>> =
            forms.iter().map(|f| numeric::contraction_matrix(f, &at).ok()).collect();
        let Some(blocks) = blocks else { return false };
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut m = DMatrix::zeros(rows, frame.dim());
        let mut r0 = 0;
        for b in &blocks {
            m.view_mut((r0, 0), (b.nrows(), b.ncols())).copy_from(b);
            r0 += b.nrows();
        }
        numeric::rank(&m, 1e-10) == frame.dim()
    })
}

/// `((T¹ₖ)*Q, ωᴬ, V)` with `θᴬ = pᴬᵢ dqⁱ`, `ωᴬ = −dθᴬ = dqⁱ∧dpᴬᵢ`.
#[derive(Clone, Debug)]
pub struct KSymplecticStructure {
    pub frame: Frame,
    pub theta: Vec<DifferentialForm>,
    pub omega: Vec<DifferentialForm>,
    pub vertical: Vec<VectorField>,
}

pub fn canonical_ksymplectic(k: usize, n: usize) -> KSymplecticStructure {
    ksymplectic_on(&CoordinateFrame::new(BundleKind::KCovelocities, k, n))
}

/// Same Darboux expressions on any frame carrying `q` and `p` coordinates.
pub fn ksymplectic_on(frame: &Frame) -> KSymplecticStructure {
    let theta: Vec<_> = (1..=frame.k()).map(|a| tautological(frame, a)).collect();
    let omega = theta.iter().map(|t| t.d().neg()).collect();
    KSymplecticStructure {
        frame: frame.clone(),
        theta,
        omega,
        vertical: fibre_span(frame),
    }
}

impl KSymplecticStructure {
    pub fn checks(&self, sampler: &mut Sampler) -> Vec<Check> {
        let potentials = self
            .theta
            .iter()
            .zip(&self.omega)
            .all(|(t, w)| t.d().neg() == *w);
        vec![
            Check::new("omega^A = -d theta^A", potentials),
            Check::new("omega^A closed", all_closed(&self.omega)),
            Check::new("omega^A vanishes on V x V", vanishes_on_pairs(&self.omega, &self.vertical)),
            Check::new("dim V = nk", self.vertical.len() == self.frame.n() * self.frame.k()),
            Check::new(
                "joint kernel of omega^A trivial",
                trivial_joint_kernel(&self.omega, &self.frame, 20, sampler),
            ),
        ]
    }
}

/// `(ℝᵏ × (T¹ₖ)*Q, ηᴬ, Ωᴬ, 𝒱)` with Reeb fields `R_A = ∂/∂tᴬ`.
#[derive(Clone, Debug)]
pub struct KCosymplecticStructure {
    pub frame: Frame,
    pub eta: Vec<DifferentialForm>,
    pub theta: Vec<DifferentialForm>,
    pub omega: Vec<DifferentialForm>,
    pub vertical: Vec<VectorField>,
    pub reeb: Vec<VectorField>,
}

pub fn canonical_kcosymplectic(k: usize, n: usize) -> KCosymplecticStructure {
    let frame = CoordinateFrame::new(BundleKind::ExtKCovelocities, k, n);
    let theta: Vec<_> = (1..=k).map(|a| tautological(&frame, a)).collect();
    let omega = theta.iter().map(|t| t.d().neg()).collect();
    let eta = (1..=k)
        .map(|a| DifferentialForm::monomial(&frame, Expr::one(), &[frame.base(a).unwrap()]))
        .collect();
    let reeb = (1..=k).map(|a| base_field(&frame, a).unwrap()).collect();
    KCosymplecticStructure {
        vertical: fibre_span(&frame),
        frame,
        eta,
        theta,
        omega,
        reeb,
    }
}

impl KCosymplecticStructure {
    pub fn checks(&self, sampler: &mut Sampler) -> Vec<Check> {
        let k = self.frame.k();
        let mut wedge = DifferentialForm::scalar(&self.frame, Expr::one());
        for e in &self.eta {
            wedge = wedge.wedge(e).expect("same frame");
        }
        let eta_on_v = self
            .eta
            .iter()
            .all(|e| self.vertical.iter().all(|x| e.interior(x).map(|s| s.is_zero()).unwrap_or(false)));
        let mut reeb_eta = true;
        let mut reeb_omega = true;
        for a in 0..k {
            for b in 0..k {
                let v = self.eta[b].interior(&self.reeb[a]).unwrap().as_scalar().unwrap();
                let want = if a == b { Expr::one() } else { Expr::zero() };
                reeb_eta &= v == want;
                reeb_omega &= self.omega[b].interior(&self.reeb[a]).unwrap().is_zero();
            }
        }
        let mut stacked = self.eta.clone();
        stacked.extend(self.omega.iter().cloned());
        vec![
            Check::new("eta^1 ^ ... ^ eta^k != 0", !wedge.is_zero()),
            Check::new("eta^A and Omega^A closed", all_closed(&self.eta) && all_closed(&self.omega)),
            Check::new("eta^A vanishes on V", eta_on_v),
            Check::new("Omega^A vanishes on V x V", vanishes_on_pairs(&self.omega, &self.vertical)),
            Check::new("i(R_A) eta^B = delta", reeb_eta),
            Check::new("i(R_A) Omega^B = 0", reeb_omega),
            Check::new(
                "joint kernel of eta^A, Omega^A trivial",
                trivial_joint_kernel(&stacked, &self.frame, 20, sampler),
            ),
        ]
    }
}

/// `(𝓜π, Θ, Ω)` with `Θ = pᴬᵢ dqⁱ∧dᵏ⁻¹t_A + p dᵏt` and `Ω = −dΘ`.
#[derive(Clone, Debug)]
pub struct MultisymplecticStructure {
    pub frame: Frame,
    pub theta: DifferentialForm,
    pub omega: DifferentialForm,
}

pub fn canonical_multisymplectic(k: usize, n: usize) -> MultisymplecticStructure {
    let frame = CoordinateFrame::new(BundleKind::Multimomentum, k, n);
    let vol = volume_form(&frame).unwrap();
    let affine = Expr::var(crate::forms::AFFINE_NAME);
    let mut theta = vol.scale(&affine);
    for a in 1..=k {
        let minor = volume_minor(&frame, a).unwrap();
        let piece = tautological(&frame, a).wedge(&minor).unwrap();
        theta = theta.add(&piece).unwrap();
    }
    let omega = theta.d().neg();
    MultisymplecticStructure { frame, theta, omega }
}

impl MultisymplecticStructure {
    pub fn checks(&self, sampler: &mut Sampler) -> Vec<Check> {
        vec![
            Check::new("Omega = -d Theta", self.theta.d().neg() == self.omega),
            Check::new("Omega closed", self.omega.d().is_zero()),
            Check::new(
                "Omega 1-nondegenerate",
                trivial_joint_kernel(std::slice::from_ref(&self.omega), &self.frame, 20, sampler),
            ),
        ]
    }
}

/// `Sᴬ = ∂/∂vᴬᵢ ⊗ dqⁱ` on a velocity-type frame.
pub fn k_tangent_structure(frame: &Frame) -> Result<Vec<OneOneTensor>, FormError> {
    if !frame.kind().has_velocities() {
        return Err(FormError::UnknownCoordinate("v1_1".into()));
    }
    Ok((1..=frame.k())
        .map(|a| {
            let mut s = OneOneTensor::zero(frame);
            for i in 1..=frame.n() {
                s.add_entry(frame.velocity(a, i).unwrap(), frame.config(i).unwrap(), Expr::one());
            }
            s
        })
        .collect())
}

/// `Δ = vᴬᵢ ∂/∂vᴬᵢ`.
pub fn liouville_field(frame: &Frame) -> Result<VectorField, FormError> {
    if !frame.kind().has_velocities() {
        return Err(FormError::UnknownCoordinate("v1_1".into()));
    }
    let mut x = VectorField::zero(frame);
    for i in 0..frame.dim() {
        if let Role::Velocity { .. } = frame.role(i) {
            x.set_component(i, Expr::var(frame.name(i)));
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{apply_tensor, contract_k};
    use crate::symexpr::parse;

    #[test]
    fn low_dimensional_renderings() {
        let s = canonical_ksymplectic(1, 1);
        assert_eq!(s.theta[0].to_string(), "p1_1*dq1");
        assert_eq!(s.omega[0].to_string(), "dq1∧dp1_1");
        let c = canonical_kcosymplectic(2, 1);
        assert_eq!(c.eta[1].to_string(), "dt2");
        assert_eq!(c.omega[1].to_string(), "dq1∧dp2_1");
        let m = canonical_multisymplectic(2, 1);
        assert_eq!(m.theta.to_string(), "-p2_1*dq1∧dt1 + p1_1*dq1∧dt2 + p*dt1∧dt2");
        let m1 = canonical_multisymplectic(1, 1);
        assert_eq!(m1.theta.to_string(), "p1_1*dq1 + p*dt1");
    }

    #[test]
    fn multisymplectic_omega_matches_expansion() {
        // Ω = −dpᴬᵢ∧dqⁱ∧dᵏ⁻¹t_A − dp∧dᵏt
        for (k, n) in [(1, 1), (2, 2), (3, 1)] {
            let m = canonical_multisymplectic(k, n);
            let f = &m.frame;
            let mut expected = DifferentialForm::basis(f, &["p"]).unwrap().wedge(&volume_form(f).unwrap()).unwrap().neg();
            for a in 1..=k {
                for i in 1..=n {
                    let dpdq = DifferentialForm::basis(f, &[&format!("p{a}_{i}"), &format!("q{i}")]).unwrap();
                    let piece = dpdq.wedge(&volume_minor(f, a).unwrap()).unwrap().neg();
                    expected = expected.add(&piece).unwrap();
                }
            }
            assert_eq!(m.omega, expected);
        }
    }

    #[test]
    fn structures_pass_their_invariants() {
        let mut sampler = Sampler::from_seed(7);
        for k in 1..=3 {
            for n in 1..=2 {
                assert!(all_passed(&canonical_ksymplectic(k, n).checks(&mut sampler)));
                assert!(all_passed(&canonical_kcosymplectic(k, n).checks(&mut sampler)));
                assert!(all_passed(&canonical_multisymplectic(k, n).checks(&mut sampler)));
            }
        }
    }

    #[test]
    fn degenerate_form_fails_nondegeneracy() {
        let mut sampler = Sampler::from_seed(1);
        let mut s = canonical_ksymplectic(2, 1);
        s.omega[1] = s.omega[0].clone();
        s.theta[1] = s.theta[0].clone();
        // ω¹ = ω² has kernel ∂/∂p2_1
        assert!(!all_passed(&s.checks(&mut sampler)));
    }

    #[test]
    fn volume_contractions() {
        let f = CoordinateFrame::new(BundleKind::ExtKCovelocities, 2, 1);
        let vol = volume_form(&f).unwrap();
        let t1 = base_field(&f, 1).unwrap();
        let t2 = base_field(&f, 2).unwrap();
        let q1 = VectorField::coordinate(&f, "q1").unwrap();
        assert_eq!(contract_k(&vol, &[t1.clone(), t2]).unwrap().as_scalar().unwrap(), Expr::one());
        assert!(contract_k(&vol, &[q1, t1]).unwrap().is_zero());
        assert_eq!(volume_minor(&f, 1).unwrap().to_string(), "dt2");
        assert_eq!(volume_minor(&f, 2).unwrap().to_string(), "-dt1");
    }

    #[test]
    fn k_tangent_and_liouville() {
        let f = CoordinateFrame::new(BundleKind::KVelocities, 2, 1);
        let s = k_tangent_structure(&f).unwrap();
        assert!(s[0].compose(&s[1]).unwrap().is_zero());
        assert!(s[0].compose(&s[0]).unwrap().is_zero());
        let l = parse("v1_1^2/2").unwrap();
        let dl = DifferentialForm::scalar(&f, l.clone()).d();
        assert_eq!(apply_tensor(&s[0], &dl).unwrap().to_string(), "v1_1*dq1");
        assert!(apply_tensor(&s[0], &DifferentialForm::dx(&f, "q1").unwrap()).unwrap().is_zero());
        let delta = liouville_field(&f).unwrap();
        assert_eq!(delta.to_string(), "v1_1*∂/∂v1_1 + v2_1*∂/∂v2_1");
        assert_eq!(delta.apply(&l), parse("v1_1^2").unwrap());
        assert!(delta.apply(&parse("q1^3").unwrap()).is_zero());
    }
}
