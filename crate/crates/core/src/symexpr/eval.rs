use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{normalize, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln of non-positive value {0}")]
    LnDomain(f64),
    #[error("variable `{0}` has no value")]
    Unbound(String),
}

/// Variable name to value map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment(pub BTreeMap<String, f64>);

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

fn apply(f: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Ln => {
            if x <= 0.0 {
                return Err(EvalError::LnDomain(x));
            }
            x.ln()
        }
    })
}

fn powi(b: f64, e: i32) -> Result<f64, EvalError> {
    if e < 0 && b == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(b.powi(e))
}

pub(crate) fn eval(e: &Expr, a: &Assignment) -> Result<f64, EvalError> {
    match e {
        Expr::Num(c) => Ok(c.to_f64().unwrap_or(f64::NAN)),
        Expr::Var(v) => a.get(v).ok_or_else(|| EvalError::Unbound(v.clone())),
        Expr::Add(xs) => xs.iter().try_fold(0.0, |acc, x| Ok(acc + eval(x, a)?)),
        Expr::Mul(xs) => xs.iter().try_fold(1.0, |acc, x| Ok(acc * eval(x, a)?)),
        Expr::Div(n, d) => {
            let d = eval(d, a)?;
            if d == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            Ok(eval(n, a)? / d)
        }
        Expr::Pow(b, k) => powi(eval(b, a)?, *k),
        Expr::Func(f, x) => apply(*f, eval(x, a)?),
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Add(Vec<Node>),
    Mul(Vec<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Func(Func, Box<Node>),
}

/// Expression with variables resolved to positions in a value slice; used on
/// hot numeric paths (integration, grid residuals, sampling).
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
}

impl CompiledExpr {
    pub fn new(e: &Expr, slots: &[String]) -> Result<Self, EvalError> {
        fn go(e: &Expr, slots: &[String]) -> Result<Node, EvalError> {
            Ok(match e {
                Expr::Num(c) => Node::Const(c.to_f64().unwrap_or(f64::NAN)),
                Expr::Var(v) => Node::Slot(
                    slots
                        .iter()
                        .position(|s| s == v)
                        .ok_or_else(|| EvalError::Unbound(v.clone()))?,
                ),
                Expr::Add(xs) => Node::Add(xs.iter().map(|x| go(x, slots)).collect::<Result<_, _>>()?),
                Expr::Mul(xs) => Node::Mul(xs.iter().map(|x| go(x, slots)).collect::<Result<_, _>>()?),
                Expr::Div(a, b) => Node::Div(Box::new(go(a, slots)?), Box::new(go(b, slots)?)),
                Expr::Pow(b, k) => Node::Pow(Box::new(go(b, slots)?), *k),
                Expr::Func(f, x) => Node::Func(*f, Box::new(go(x, slots)?)),
            })
        }
        Ok(CompiledExpr { root: go(e, slots)? })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        fn go(n: &Node, v: &[f64]) -> Result<f64, EvalError> {
            match n {
                Node::Const(c) => Ok(*c),
                Node::Slot(i) => Ok(v[*i]),
                Node::Add(xs) => xs.iter().try_fold(0.0, |acc, x| Ok(acc + go(x, v)?)),
                Node::Mul(xs) => xs.iter().try_fold(1.0, |acc, x| Ok(acc * go(x, v)?)),
                Node::Div(a, b) => {
                    let d = go(b, v)?;
                    if d == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    Ok(go(a, v)? / d)
                }
                Node::Pow(b, k) => powi(go(b, v)?, *k),
                Node::Func(f, x) => apply(*f, go(x, v)?),
            }
        }
        go(&self.root, values)
    }
}

/// Seeded source of random sample points. The seed comes from
/// `GEOFIELD_SEED` when set, so probabilistic verdicts are reproducible.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

pub const DEFAULT_SEED: u64 = 0x6765_6f66_6965_6c64;

impl Sampler {
    pub fn from_seed(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_env() -> Self {
        let seed = std::env::var("GEOFIELD_SEED")
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .unwrap_or(DEFAULT_SEED);
        Sampler::from_seed(seed)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn point<'a, I: IntoIterator<Item = &'a String>>(&mut self, vars: I, lo: f64, hi: f64) -> Assignment {
        vars.into_iter()
            .map(|v| (v.clone(), self.rng.random_range(lo..hi)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualityVerdict {
    Equal,
    ProbablyEqual,
    NotEqual,
}

impl EqualityVerdict {
    pub fn holds(self) -> bool {
        !matches!(self, EqualityVerdict::NotEqual)
    }
}

const SAMPLE_POINTS: usize = 32;
const MAX_ATTEMPTS: usize = 256;
const REL_TOL: f64 = 1e-9;

/// Structural equality after normalization, falling back to randomized
/// evaluation on `[-2, 2]^n`.
pub fn equal(a: &Expr, b: &Expr) -> EqualityVerdict {
    equal_with(a, b, &mut Sampler::from_env())
}

pub fn equal_with(a: &Expr, b: &Expr, sampler: &mut Sampler) -> EqualityVerdict {
    let diff = normalize(&(a - b));
    if diff.is_zero() {
        return EqualityVerdict::Equal;
    }
    let mut vars: BTreeSet<String> = a.free_vars();
    vars.extend(b.free_vars());
    if vars.is_empty() {
        // both sides are closed forms; compare numerically once
        return match (a.eval(&Assignment::new()), b.eval(&Assignment::new())) {
            (Ok(x), Ok(y)) if close(x, y) => EqualityVerdict::ProbablyEqual,
            _ => EqualityVerdict::NotEqual,
        };
    }
    let slots: Vec<String> = vars.into_iter().collect();
    let (ca, cb) = match (CompiledExpr::new(a, &slots), CompiledExpr::new(b, &slots)) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return EqualityVerdict::NotEqual,
    };
    let mut good = 0;
    let mut values = vec![0.0; slots.len()];
    for _ in 0..MAX_ATTEMPTS {
        for v in values.iter_mut() {
            *v = sampler.uniform(-2.0, 2.0);
        }
        match (ca.eval(&values), cb.eval(&values)) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
                if !close(x, y) {
                    return EqualityVerdict::NotEqual;
                }
                good += 1;
                if good == SAMPLE_POINTS {
                    return EqualityVerdict::ProbablyEqual;
                }
            }
            _ => continue,
        }
    }
    EqualityVerdict::NotEqual
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= REL_TOL * x.abs().max(y.abs()).max(1.0)
}
