use std::collections::BTreeMap;
use std::fmt;

use crate::symexpr::{equal, EqualityVerdict, Expr};

use super::{same_frame, FormError, Frame, VectorField};

/// Sorts an index list, returning the permutation sign, or `None` when an
/// index repeats (the wedge monomial vanishes).
fn sort_with_sign(mut idx: Vec<usize>) -> Option<(Vec<usize>, i32)> {
    let mut sign = 1;
    // insertion sort; lists are short and we need the parity
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && idx[j - 1] == idx[j] {
            return None;
        }
    }
    for w in idx.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((idx, sign))
}

/// Differential form of fixed degree with sparse canonical coefficients over
/// strictly increasing coordinate-index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialForm {
    frame: Frame,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl DifferentialForm {
    pub fn zero(frame: &Frame, degree: usize) -> Self {
        DifferentialForm {
            frame: frame.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(frame: &Frame, f: Expr) -> Self {
        let mut out = Self::zero(frame, 0);
        out.add_term(Vec::new(), f.normalize());
        out
    }

    /// `coeff · dx_{i₁} ∧ … ∧ dx_{i_r}` for arbitrary (unsorted) indices.
    pub fn monomial(frame: &Frame, coeff: Expr, idx: &[usize]) -> Self {
        let mut out = Self::zero(frame, idx.len());
        if let Some((sorted, sign)) = sort_with_sign(idx.to_vec()) {
            let c = if sign < 0 { -coeff } else { coeff.normalize() };
            out.add_term(sorted, c);
        }
        out
    }

    /// Coordinate differential `dx` by name.
    pub fn dx(frame: &Frame, name: &str) -> Result<Self, FormError> {
        let i = frame
            .index_of(name)
            .ok_or_else(|| FormError::UnknownCoordinate(name.to_string()))?;
        Ok(Self::monomial(frame, Expr::one(), &[i]))
    }

    /// Wedge of coordinate differentials, by name.
    pub fn basis(frame: &Frame, names: &[&str]) -> Result<Self, FormError> {
        let idx = names
            .iter()
            .map(|n| {
                frame
                    .index_of(n)
                    .ok_or_else(|| FormError::UnknownCoordinate(n.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::monomial(frame, Expr::one(), &idx))
    }

    pub fn from_terms(frame: &Frame, degree: usize, terms: impl IntoIterator<Item = (Vec<usize>, Expr)>) -> Self {
        let mut out = Self::zero(frame, degree);
        for (idx, c) in terms {
            assert_eq!(idx.len(), degree, "index tuple length must equal degree");
            if let Some((sorted, sign)) = sort_with_sign(idx) {
                out.add_term(sorted, if sign < 0 { -c } else { c });
            }
        }
        out
    }

    fn add_term(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&idx) {
            Some(prev) => {
                let s = prev + c;
                if !s.is_zero() {
                    self.terms.insert(idx, s);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.terms
    }

    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        match sort_with_sign(idx.to_vec()) {
            Some((sorted, sign)) => {
                let c = self.terms.get(&sorted).cloned().unwrap_or_else(Expr::zero);
                if sign < 0 {
                    -c
                } else {
                    c
                }
            }
            None => Expr::zero(),
        }
    }

    /// Coefficient by coordinate names, e.g. `["q1", "p1_1"]`.
    pub fn coefficient_of(&self, names: &[&str]) -> Expr {
        let idx: Option<Vec<usize>> = names.iter().map(|n| self.frame.index_of(n)).collect();
        idx.map(|i| self.coefficient(&i)).unwrap_or_else(Expr::zero)
    }

    /// Value of a 0-form.
    pub fn as_scalar(&self) -> Option<Expr> {
        (self.degree == 0).then(|| self.coefficient(&[]))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        same_frame(&self.frame, &other.frame)?;
        if self.degree != other.degree {
            return Err(FormError::WrongDegree {
                expected: self.degree,
                found: other.degree,
            });
        }
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&Expr::int(-1))
    }

    pub fn scale(&self, f: &Expr) -> Self {
        let mut out = Self::zero(&self.frame, self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), c * f);
        }
        out
    }

    /// Applies `g` to every coefficient (e.g. substitution of constants).
    pub fn map_coefficients(&self, g: impl Fn(&Expr) -> Expr) -> Self {
        let mut out = Self::zero(&self.frame, self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), g(c).normalize());
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        same_frame(&self.frame, &other.frame)?;
        let mut out = Self::zero(&self.frame, self.degree + other.degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                let mut idx = ia.clone();
                idx.extend_from_slice(ib);
                if let Some((sorted, sign)) = sort_with_sign(idx) {
                    let c = ca * cb;
                    out.add_term(sorted, if sign < 0 { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative. Only frame coordinates are differentiated; any
    /// other symbol in a coefficient is treated as a constant parameter.
    pub fn d(&self) -> Self {
        let mut out = Self::zero(&self.frame, self.degree + 1);
        for (idx, c) in &self.terms {
            for j in 0..self.frame.dim() {
                let dc = c.diff(self.frame.name(j));
                if dc.is_zero() {
                    continue;
                }
                let mut full = Vec::with_capacity(idx.len() + 1);
                full.push(j);
                full.extend_from_slice(idx);
                if let Some((sorted, sign)) = sort_with_sign(full) {
                    out.add_term(sorted, if sign < 0 { -dc } else { dc });
                }
            }
        }
        out
    }

    /// Contraction `i(X)α` in the first slot.
    pub fn interior(&self, x: &VectorField) -> Result<Self, FormError> {
        same_frame(&self.frame, x.frame())?;
        if self.degree == 0 {
            return Err(FormError::DegreeTooSmall { needed: 1, found: 0 });
        }
        let mut out = Self::zero(&self.frame, self.degree - 1);
        for (idx, c) in &self.terms {
            for (s, &j) in idx.iter().enumerate() {
                let xj = x.component(j);
                if xj.is_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(s);
                let t = c * xj;
                out.add_term(rest, if s % 2 == 1 { -t } else { t });
            }
        }
        Ok(out)
    }

    /// Evaluates the form with some argument slots filled. Returns the form in
    /// the remaining (`None`) slots, taken in their original order.
    pub fn evaluate_slots(&self, slots: &[Option<&VectorField>]) -> Result<Self, FormError> {
        if slots.len() != self.degree {
            return Err(FormError::WrongDegree {
                expected: self.degree,
                found: slots.len(),
            });
        }
        // Move filled slots to the front; α(…) changes by the sign of that
        // permutation, then contract them in order.
        let mut order: Vec<usize> = (0..slots.len()).filter(|&i| slots[i].is_some()).collect();
        order.extend((0..slots.len()).filter(|&i| slots[i].is_none()));
        let mut inversions = 0;
        for a in 0..order.len() {
            for b in a + 1..order.len() {
                if order[a] > order[b] {
                    inversions += 1;
                }
            }
        }
        let mut acc = self.clone();
        for s in slots.iter().flatten() {
            acc = acc.interior(s)?;
        }
        Ok(if inversions % 2 == 1 { acc.neg() } else { acc })
    }

    /// Symbolic comparison, coefficient by coefficient.
    pub fn symbolic_eq(&self, other: &Self) -> EqualityVerdict {
        if self.frame != other.frame || self.degree != other.degree {
            return EqualityVerdict::NotEqual;
        }
        let mut verdict = EqualityVerdict::Equal;
        let mut keys: Vec<&Vec<usize>> = self.terms.keys().collect();
        keys.extend(other.terms.keys());
        keys.sort();
        keys.dedup();
        for idx in keys {
            let a = self.terms.get(idx).cloned().unwrap_or_else(Expr::zero);
            let b = other.terms.get(idx).cloned().unwrap_or_else(Expr::zero);
            match equal(&a, &b) {
                EqualityVerdict::Equal => {}
                EqualityVerdict::ProbablyEqual => verdict = EqualityVerdict::ProbablyEqual,
                EqualityVerdict::NotEqual => return EqualityVerdict::NotEqual,
            }
        }
        verdict
    }

    /// Re-expresses the form on another frame that carries the same coordinate
    /// names (e.g. identifying `J¹π*` with `ℝᵏ × (T¹ₖ)*Q`).
    pub fn reframe(&self, target: &Frame) -> Result<Self, FormError> {
        let mut out = Self::zero(target, self.degree);
        for (idx, c) in &self.terms {
            let mapped = idx
                .iter()
                .map(|&i| {
                    let name = self.frame.name(i);
                    target
                        .index_of(name)
                        .ok_or_else(|| FormError::UnknownCoordinate(name.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some((sorted, sign)) = sort_with_sign(mapped) {
                out.add_term(sorted, if sign < 0 { -c.clone() } else { c.clone() });
            }
        }
        Ok(out)
    }

    fn basis_string(&self, idx: &[usize]) -> String {
        idx.iter()
            .map(|&i| format!("d{}", self.frame.name(i)))
            .collect::<Vec<_>>()
            .join("∧")
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.terms.iter().enumerate() {
            let basis = self.basis_string(idx);
            let mut term = if idx.is_empty() {
                c.to_string()
            } else if c.is_one() {
                basis
            } else if *c == Expr::int(-1) {
                format!("-{basis}")
            } else if matches!(c, Expr::Add(_)) {
                format!("({c})*{basis}")
            } else {
                format!("{c}*{basis}")
            };
            if n > 0 {
                if let Some(rest) = term.strip_prefix('-') {
                    term = format!(" - {rest}");
                } else {
                    term = format!(" + {term}");
                }
            }
            write!(f, "{term}")?;
        }
        Ok(())
    }
}
