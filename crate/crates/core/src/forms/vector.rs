use std::collections::BTreeMap;
use std::fmt;

use crate::symexpr::{equal, sum, EqualityVerdict, Expr};

use super::{same_frame, FormError, Frame};

/// Vector field with one coefficient per frame coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    frame: Frame,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn zero(frame: &Frame) -> Self {
        VectorField {
            frame: frame.clone(),
            components: vec![Expr::zero(); frame.dim()],
        }
    }

    pub fn new(frame: &Frame, components: Vec<Expr>) -> Result<Self, FormError> {
        if components.len() != frame.dim() {
            return Err(FormError::Arity {
                expected: frame.dim(),
                found: components.len(),
            });
        }
        Ok(VectorField {
            frame: frame.clone(),
            components: components.into_iter().map(|c| c.normalize()).collect(),
        })
    }

    /// Builds a field from named components; unnamed coordinates get zero.
    pub fn from_named(frame: &Frame, named: &BTreeMap<String, Expr>) -> Result<Self, FormError> {
        let mut out = Self::zero(frame);
        for (name, c) in named {
            let i = frame
                .index_of(name)
                .ok_or_else(|| FormError::UnknownCoordinate(name.clone()))?;
            out.components[i] = c.normalize();
        }
        Ok(out)
    }

    /// Coordinate field `∂/∂x`.
    pub fn coordinate(frame: &Frame, name: &str) -> Result<Self, FormError> {
        let i = frame
            .index_of(name)
            .ok_or_else(|| FormError::UnknownCoordinate(name.to_string()))?;
        let mut out = Self::zero(frame);
        out.components[i] = Expr::one();
        Ok(out)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn component_of(&self, name: &str) -> Option<&Expr> {
        self.frame.index_of(name).map(|i| &self.components[i])
    }

    pub fn set_component(&mut self, i: usize, value: Expr) {
        self.components[i] = value.normalize();
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    /// Directional derivative `X(f)` over frame coordinates.
    pub fn apply(&self, f: &Expr) -> Expr {
        sum((0..self.frame.dim()).filter_map(|j| {
            let c = &self.components[j];
            if c.is_zero() {
                return None;
            }
            let df = f.diff(self.frame.name(j));
            (!df.is_zero()).then(|| c * df)
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        same_frame(&self.frame, &other.frame)?;
        Ok(VectorField {
            frame: self.frame.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, f: &Expr) -> Self {
        VectorField {
            frame: self.frame.clone(),
            components: self.components.iter().map(|c| c * f).collect(),
        }
    }

    /// `[X, Y]ᶜ = X(Yᶜ) − Y(Xᶜ)`.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self, FormError> {
        same_frame(&self.frame, &other.frame)?;
        let components = (0..self.frame.dim())
            .map(|c| self.apply(&other.components[c]) - other.apply(&self.components[c]))
            .collect();
        Ok(VectorField {
            frame: self.frame.clone(),
            components,
        })
    }

    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Self {
        VectorField {
            frame: self.frame.clone(),
            components: self.components.iter().map(|c| c.substitute(map)).collect(),
        }
    }

    pub fn symbolic_eq(&self, other: &Self) -> EqualityVerdict {
        if self.frame != other.frame {
            return EqualityVerdict::NotEqual;
        }
        let mut verdict = EqualityVerdict::Equal;
        for (a, b) in self.components.iter().zip(&other.components) {
            match equal(a, b) {
                EqualityVerdict::Equal => {}
                EqualityVerdict::ProbablyEqual => verdict = EqualityVerdict::ProbablyEqual,
                EqualityVerdict::NotEqual => return EqualityVerdict::NotEqual,
            }
        }
        verdict
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = format!("∂/∂{}", self.frame.name(j));
            let mut term = if c.is_one() {
                d
            } else if *c == Expr::int(-1) {
                format!("-{d}")
            } else if matches!(c, Expr::Add(_)) {
                format!("({c})*{d}")
            } else {
                format!("{c}*{d}")
            };
            if !first {
                term = match term.strip_prefix('-') {
                    Some(rest) => format!(" - {rest}"),
                    None => format!(" + {term}"),
                };
            }
            first = false;
            write!(f, "{term}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Ordered k-tuple of vector fields on one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct KVectorField {
    fields: Vec<VectorField>,
}

impl KVectorField {
    pub fn new(fields: Vec<VectorField>) -> Result<Self, FormError> {
        let first = fields.first().ok_or(FormError::Arity { expected: 1, found: 0 })?;
        let k = first.frame().k();
        for x in &fields {
            same_frame(first.frame(), x.frame())?;
        }
        if fields.len() != k {
            return Err(FormError::Arity {
                expected: k,
                found: fields.len(),
            });
        }
        Ok(KVectorField { fields })
    }

    /// Tuple of arbitrary length, for contractions like `i(∂/∂tᵏ)…i(∂/∂t¹)`.
    pub fn tuple(fields: Vec<VectorField>) -> Result<Self, FormError> {
        if let Some(first) = fields.first() {
            for x in &fields {
                same_frame(first.frame(), x.frame())?;
            }
        }
        Ok(KVectorField { fields })
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field(&self, a: usize) -> &VectorField {
        &self.fields[a - 1]
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn frame(&self) -> Option<&Frame> {
        self.fields.first().map(|x| x.frame())
    }

    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Self {
        KVectorField {
            fields: self.fields.iter().map(|x| x.substitute(map)).collect(),
        }
    }
}

impl fmt::Display for KVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, x) in self.fields.iter().enumerate() {
            if a > 0 {
                writeln!(f)?;
            }
            write!(f, "X{} = {x}", a + 1)?;
        }
        Ok(())
    }
}
