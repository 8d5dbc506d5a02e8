use std::collections::BTreeMap;
use std::fmt;

use crate::symexpr::Expr;

use super::{same_frame, DifferentialForm, FormError, Frame};

/// Smooth map between charts, one source-coordinate expression per target
/// coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothMap {
    source: Frame,
    target: Frame,
    components: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(source: &Frame, target: &Frame, components: Vec<Expr>) -> Result<Self, FormError> {
        if components.len() != target.dim() {
            return Err(FormError::Arity {
                expected: target.dim(),
                found: components.len(),
            });
        }
        Ok(SmoothMap {
            source: source.clone(),
            target: target.clone(),
            components: components.into_iter().map(|c| c.normalize()).collect(),
        })
    }

    /// Target coordinates default to the same-named source coordinate unless
    /// overridden.
    pub fn from_named(source: &Frame, target: &Frame, overrides: &BTreeMap<String, Expr>) -> Result<Self, FormError> {
        let components = target
            .names()
            .map(|name| match overrides.get(name) {
                Some(e) => Ok(e.normalize()),
                None if source.contains(name) => Ok(Expr::var(name)),
                None => Err(FormError::UnknownCoordinate(name.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(source, target, components)
    }

    pub fn identity(frame: &Frame) -> Self {
        SmoothMap {
            source: frame.clone(),
            target: frame.clone(),
            components: frame.names().map(Expr::var).collect(),
        }
    }

    pub fn source(&self) -> &Frame {
        &self.source
    }

    pub fn target(&self) -> &Frame {
        &self.target
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component_of(&self, target_name: &str) -> Option<&Expr> {
        self.target.index_of(target_name).map(|i| &self.components[i])
    }

    fn substitution(&self) -> BTreeMap<String, Expr> {
        self.target
            .names()
            .zip(&self.components)
            .map(|(n, e)| (n.to_string(), e.clone()))
            .collect()
    }

    /// `f ∘ φ` for a function on the target.
    pub fn pullback_function(&self, f: &Expr) -> Expr {
        f.substitute(&self.substitution())
    }

    /// `φ*α`: coefficients composed with φ, differentials replaced by total
    /// differentials of the component expressions.
    pub fn pullback(&self, alpha: &DifferentialForm) -> Result<DifferentialForm, FormError> {
        same_frame(&self.target, alpha.frame())?;
        let subst = self.substitution();
        let mut differentials: Vec<Option<DifferentialForm>> = vec![None; self.target.dim()];
        let mut out = DifferentialForm::zero(&self.source, alpha.degree());
        for (idx, c) in alpha.terms() {
            let mut acc = DifferentialForm::scalar(&self.source, c.substitute(&subst));
            let mut vanished = false;
            for &j in idx {
                if differentials[j].is_none() {
                    differentials[j] = Some(DifferentialForm::scalar(&self.source, self.components[j].clone()).d());
                }
                acc = acc.wedge(differentials[j].as_ref().unwrap())?;
                if acc.is_zero() {
                    vanished = true;
                    break;
                }
            }
            if !vanished {
                out = out.add(&acc)?;
            }
        }
        Ok(out)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap, FormError> {
        same_frame(&self.source, &inner.target)?;
        let subst = inner.substitution();
        Ok(SmoothMap {
            source: inner.source.clone(),
            target: self.target.clone(),
            components: self.components.iter().map(|c| c.substitute(&subst)).collect(),
        })
    }
}

impl fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, e)) in self.target.names().zip(&self.components).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{name} = {e}")?;
        }
        Ok(())
    }
}
