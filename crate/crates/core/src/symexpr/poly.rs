//! Canonical sparse representation backing `normalize`.
//!
//! A [`Poly`] is a finite sum of rational coefficients times monomials, where a
//! monomial is a product of atoms raised to nonzero integer powers. Atoms are
//! variables, elementary functions of a canonical argument, and reciprocals of
//! canonical multi-term sums. The map ordering doubles as the printing order.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Expr, Func};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Atom {
    Var(String),
    Func(Func, Box<Poly>),
    /// `1 / P` with `P` a multi-term sum whose leading coefficient is 1.
    Recip(Box<Poly>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Monomial(pub(crate) Vec<(Atom, i32)>);

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Monomial, BigRational>,
}

impl Monomial {
    fn one() -> Self {
        Monomial(Vec::new())
    }

    fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Merges two monomials. Reciprocal atoms whose exponent turns negative are
    /// returned separately so the caller can multiply their sums back in.
    fn merge(&self, other: &Monomial) -> (Monomial, Vec<(Poly, u32)>) {
        let mut out: Vec<(Atom, i32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() || j < b.len() {
            if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i].clone());
                i += 1;
            } else if i >= a.len() || b[j].0 < a[i].0 {
                out.push(b[j].clone());
                j += 1;
            } else {
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
        split_negative_recips(out)
    }
}

fn split_negative_recips(atoms: Vec<(Atom, i32)>) -> (Monomial, Vec<(Poly, u32)>) {
    let mut fixups = Vec::new();
    let mut kept = Vec::with_capacity(atoms.len());
    for (atom, e) in atoms {
        match atom {
            Atom::Recip(p) if e < 0 => fixups.push((*p, (-e) as u32)),
            other => kept.push((other, e)),
        }
    }
    (Monomial(kept), fixups)
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly::default()
    }

    pub(crate) fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub(crate) fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub(crate) fn var(name: &str) -> Self {
        Poly::atom(Atom::Var(name.to_string()), 1)
    }

    fn atom(atom: Atom, exp: i32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial(vec![(atom, exp)]), BigRational::one());
        Poly { terms }
    }

    /// Builds `c * m` where `m` may carry reciprocal atoms with negative exponents.
    fn from_term(m: Monomial, c: BigRational) -> Self {
        let (m, fixups) = split_negative_recips(m.0);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        let mut out = Poly { terms };
        for (p, e) in fixups {
            out = out.mul(&p.pow_u(e));
        }
        out
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) = if self.terms.len() >= other.terms.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub(crate) fn scale(&self, s: &BigRational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut out = Poly::zero();
        let mut deferred = Vec::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let (m, fixups) = ma.merge(mb);
                let c = ca * cb;
                if fixups.is_empty() {
                    out.add_term(m, c);
                } else {
                    deferred.push((m, c, fixups));
                }
            }
        }
        for (m, c, fixups) in deferred {
            let mut t = Poly::from_term(m, c);
            for (p, e) in fixups {
                t = t.mul(&p.pow_u(e));
            }
            out = out.add(&t);
        }
        out
    }

    fn pow_u(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub(crate) fn pow(&self, e: i32) -> Poly {
        if e >= 0 {
            self.pow_u(e as u32)
        } else {
            self.recip().pow_u(e.unsigned_abs())
        }
    }

    pub(crate) fn recip(&self) -> Poly {
        match self.terms.len() {
            0 => Poly::atom(Atom::Recip(Box::new(Poly::zero())), 1),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                let inv = Monomial(m.0.iter().map(|(a, e)| (a.clone(), -e)).collect());
                Poly::from_term(inv, c.recip())
            }
            _ => {
                let lead = self.terms.values().next().unwrap().clone();
                let monic = self.scale(&lead.recip());
                Poly::atom(Atom::Recip(Box::new(monic)), 1).scale(&lead.recip())
            }
        }
    }

    pub(crate) fn func(f: Func, arg: Poly) -> Poly {
        if let Some(c) = arg.as_constant() {
            match f {
                Func::Sin if c.is_zero() => return Poly::zero(),
                Func::Cos | Func::Exp if c.is_zero() => return Poly::one(),
                Func::Ln if c.is_one() => return Poly::zero(),
                _ => {}
            }
        }
        Poly::atom(Atom::Func(f, Box::new(arg)), 1)
    }

    pub(crate) fn diff(&self, var: &str) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (idx, (atom, e)) in m.0.iter().enumerate() {
                let da = atom_diff(atom, var);
                if da.is_zero() {
                    continue;
                }
                let mut rest = m.0.clone();
                if *e == 1 {
                    rest.remove(idx);
                } else {
                    rest[idx].1 = e - 1;
                }
                let coeff = c * BigRational::from_integer(BigInt::from(*e));
                let t = Poly::from_term(Monomial(rest), coeff).mul(&da);
                out = out.add(&t);
            }
        }
        out
    }

    pub(crate) fn to_expr(&self) -> Expr {
        if self.terms.is_empty() {
            return Expr::Num(BigRational::zero());
        }
        let mut terms: Vec<Expr> = self
            .terms
            .iter()
            .map(|(m, c)| term_to_expr(m, c))
            .collect();
        if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add(terms)
        }
    }
}

fn atom_diff(atom: &Atom, var: &str) -> Poly {
    match atom {
        Atom::Var(v) => {
            if v == var {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        Atom::Func(f, arg) => {
            let inner = arg.diff(var);
            if inner.is_zero() {
                return Poly::zero();
            }
            let outer = match f {
                Func::Sin => Poly::func(Func::Cos, (**arg).clone()),
                Func::Cos => Poly::func(Func::Sin, (**arg).clone()).neg(),
                Func::Exp => Poly::func(Func::Exp, (**arg).clone()),
                Func::Ln => arg.recip(),
            };
            outer.mul(&inner)
        }
        Atom::Recip(p) => {
            let inner = p.diff(var);
            if inner.is_zero() {
                return Poly::zero();
            }
            Poly::atom(atom.clone(), 2).mul(&inner).neg()
        }
    }
}

fn atom_to_expr(atom: &Atom, e: i32) -> Expr {
    let (base, e) = match atom {
        Atom::Var(v) => (Expr::Var(v.clone()), e),
        Atom::Func(f, arg) => (Expr::Func(*f, Box::new(arg.to_expr())), e),
        Atom::Recip(p) => (p.to_expr(), -e),
    };
    if e == 1 {
        base
    } else {
        Expr::Pow(Box::new(base), e)
    }
}

fn term_to_expr(m: &Monomial, c: &BigRational) -> Expr {
    if m.is_one() {
        return Expr::Num(c.clone());
    }
    let mut factors = Vec::with_capacity(m.0.len() + 1);
    if !c.is_one() {
        factors.push(Expr::Num(c.clone()));
    }
    factors.extend(m.0.iter().map(|(a, e)| atom_to_expr(a, *e)));
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Mul(factors)
    }
}

/// Converts an arbitrary tree into canonical form, optionally substituting
/// variables on the way.
pub(crate) fn to_poly(e: &Expr, subst: &dyn Fn(&str) -> Option<Poly>) -> Poly {
    match e {
        Expr::Num(c) => Poly::constant(c.clone()),
        Expr::Var(v) => subst(v).unwrap_or_else(|| Poly::var(v)),
        Expr::Add(xs) => xs
            .iter()
            .fold(Poly::zero(), |acc, x| acc.add(&to_poly(x, subst))),
        Expr::Mul(xs) => {
            let mut acc = Poly::one();
            for x in xs {
                acc = acc.mul(&to_poly(x, subst));
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Expr::Div(a, b) => to_poly(a, subst).mul(&to_poly(b, subst).recip()),
        Expr::Pow(b, n) => to_poly(b, subst).pow(*n),
        Expr::Func(f, a) => Poly::func(*f, to_poly(a, subst)),
    }
}

pub(crate) fn is_negative_leading(e: &Expr) -> bool {
    match e {
        Expr::Num(c) => c.is_negative(),
        Expr::Mul(xs) => matches!(xs.first(), Some(Expr::Num(c)) if c.is_negative()),
        _ => false,
    }
}
