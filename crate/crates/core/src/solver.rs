//! Integral sections of k-vector fields on rectangular grids.
//!
//! Flows are composed axis by axis with classical RK4; lines along an axis
//! are independent once the previous axes are swept and run in parallel.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::forms::{KVectorField, Role};
use crate::symexpr::{Assignment, CompiledExpr, EvalError, Expr, Sampler};
use crate::theory::{jet2_symbol, jet_symbol, EquationSet, SymbolicSection};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("grid needs {k} axes, got {found}")]
    GridShape { k: usize, found: usize },
    #[error("initial value for {0} missing")]
    MissingInitial(String),
    #[error("X{a} has component {value} along t{b}; integration needs the identity block")]
    BaseBlock { a: usize, b: usize, value: String },
    #[error("non-finite state at node {node:?}")]
    NonFinite { node: Vec<usize> },
    #[error("step rejected at node {node:?} on axis {axis}: local error {estimate:.3e} exceeds guard {guard:.3e}")]
    StepRejected {
        node: Vec<usize>,
        axis: usize,
        estimate: f64,
        guard: f64,
    },
    #[error("cannot evaluate {0}")]
    Eval(String),
    #[error("equations use {0}, which the grid does not carry")]
    UnknownSymbol(String),
}

impl From<EvalError> for SolverError {
    fn from(e: EvalError) -> Self {
        SolverError::Eval(e.to_string())
    }
}

/// Axis `A` runs over `[0, steps[A]·h[A]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub steps: Vec<usize>,
    pub h: Vec<f64>,
}

impl GridSpec {
    pub fn uniform(k: usize, steps: usize, h: f64) -> Self {
        GridSpec {
            steps: vec![steps; k],
            h: vec![h; k],
        }
    }

    pub fn k(&self) -> usize {
        self.steps.len()
    }

    fn extents(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s + 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.extents().iter().product()
    }

    /// Row-major multi-index (last axis fastest).
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let ext = self.extents();
        let mut out = vec![0; ext.len()];
        for a in (0..ext.len()).rev() {
            out[a] = idx % ext[a];
            idx /= ext[a];
        }
        out
    }

    pub fn ravel(&self, node: &[usize]) -> usize {
        self.extents().iter().zip(node).fold(0, |acc, (e, i)| acc * e + i)
    }

    pub fn time(&self, node: &[usize]) -> Vec<f64> {
        node.iter().zip(&self.h).map(|(&i, h)| i as f64 * h).collect()
    }
}

/// Values of every non-base coordinate at every grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSolution {
    pub grid: GridSpec,
    pub names: Vec<String>,
    /// Node-major: `data[node · names.len() + c]`.
    pub data: Vec<f64>,
}

impl GridSolution {
    pub fn k(&self) -> usize {
        self.grid.k()
    }

    pub fn value(&self, node: &[usize], name: &str) -> Option<f64> {
        let c = self.names.iter().position(|n| n == name)?;
        Some(self.data[self.grid.ravel(node) * self.names.len() + c])
    }

    pub fn state(&self, node: &[usize]) -> &[f64] {
        let d = self.names.len();
        let i = self.grid.ravel(node);
        &self.data[i * d..(i + 1) * d]
    }

    /// CSV with header `t1,…,tk,<coords>`, one row per node in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header: Vec<String> = (1..=self.k()).map(|a| format!("t{a}")).collect();
        header.extend(self.names.iter().cloned());
        writeln!(w, "{}", header.join(","))?;
        for idx in 0..self.grid.node_count() {
            let node = self.grid.unravel(idx);
            let mut row: Vec<String> = self.grid.time(&node).iter().map(|t| t.to_string()).collect();
            row.extend(self.state(&node).iter().map(|v| v.to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }

    /// Builds a grid from an explicit section `t ↦ (coordinates)`.
    pub fn sample(section: &SymbolicSection, grid: &GridSpec) -> Result<GridSolution, SolverError> {
        let frame = section.frame();
        if grid.k() != frame.k() {
            return Err(SolverError::GridShape {
                k: frame.k(),
                found: grid.k(),
            });
        }
        let slots: Vec<String> = (1..=frame.k()).map(|a| format!("t{a}")).collect();
        let mut names = Vec::new();
        let mut exprs = Vec::new();
        for (name, e) in section.values() {
            names.push(name.clone());
            exprs.push(CompiledExpr::new(e, &slots)?);
        }
        let mut data = Vec::with_capacity(grid.node_count() * names.len());
        for idx in 0..grid.node_count() {
            let t = grid.time(&grid.unravel(idx));
            for e in &exprs {
                data.push(e.eval(&t)?);
            }
        }
        Ok(GridSolution {
            grid: grid.clone(),
            names,
            data,
        })
    }
}

/// Grid together with its integrability diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationOutcome {
    pub solution: GridSolution,
    /// Max `|[X_A, X_B]|` over sampled points of the visited region.
    pub commutator_residual: f64,
    /// Whether the residual is small enough to call the grid an integral section.
    pub integral_section: bool,
    /// Largest step-doubling error estimate seen.
    pub max_local_error: f64,
}

pub const INTEGRABILITY_TOL: f64 = 1e-6;

/// Right-hand sides `f_A(t, y)` of a k-vector field as compiled expressions.
struct Field {
    /// State coordinate names (non-base), in frame order.
    names: Vec<String>,
    /// `rhs[A][c]`, slots `t1..tk` then state.
    rhs: Vec<Vec<CompiledExpr>>,
}

impl Field {
    fn new(x: &KVectorField) -> Result<Self, SolverError> {
        let frame = x.frame().expect("non-empty k-vector field").clone();
        let k = x.len();
        let mut names = Vec::new();
        let mut state_idx = Vec::new();
        for i in 0..frame.dim() {
            if !matches!(frame.role(i), Role::Base(_)) {
                names.push(frame.name(i).to_string());
                state_idx.push(i);
            }
        }
        let mut slots: Vec<String> = (1..=k).map(|a| format!("t{a}")).collect();
        slots.extend(names.iter().cloned());
        let mut rhs = Vec::new();
        for (a, xa) in x.fields().iter().enumerate() {
            for b in 1..=k {
                if let Some(bi) = frame.base(b) {
                    let want = if a + 1 == b { Expr::one() } else { Expr::zero() };
                    if xa.component(bi) != &want {
                        return Err(SolverError::BaseBlock {
                            a: a + 1,
                            b,
                            value: xa.component(bi).to_string(),
                        });
                    }
                }
            }
            rhs.push(
                state_idx
                    .iter()
                    .map(|&i| CompiledExpr::new(xa.component(i), &slots))
                    .collect::<Result<_, _>>()?,
            );
        }
        Ok(Field { names, rhs })
    }

    fn eval(&self, axis: usize, t: &[f64], y: &[f64], out: &mut [f64], buf: &mut Vec<f64>) -> Result<(), EvalError> {
        buf.clear();
        buf.extend_from_slice(t);
        buf.extend_from_slice(y);
        for (o, e) in out.iter_mut().zip(&self.rhs[axis]) {
            *o = e.eval(buf)?;
        }
        Ok(())
    }

    fn rk4(&self, axis: usize, t: &[f64], y: &[f64], h: f64, buf: &mut Vec<f64>) -> Result<Vec<f64>, EvalError> {
        let d = y.len();
        let mut k1 = vec![0.0; d];
        let mut k2 = vec![0.0; d];
        let mut k3 = vec![0.0; d];
        let mut k4 = vec![0.0; d];
        let mut tt = t.to_vec();
        let mut tmp = vec![0.0; d];
        self.eval(axis, &tt, y, &mut k1, buf)?;
        tt[axis] = t[axis] + h / 2.0;
        for i in 0..d {
            tmp[i] = y[i] + h / 2.0 * k1[i];
        }
        self.eval(axis, &tt, &tmp, &mut k2, buf)?;
        for i in 0..d {
            tmp[i] = y[i] + h / 2.0 * k2[i];
        }
        self.eval(axis, &tt, &tmp, &mut k3, buf)?;
        tt[axis] = t[axis] + h;
        for i in 0..d {
            tmp[i] = y[i] + h * k3[i];
        }
        self.eval(axis, &tt, &tmp, &mut k4, buf)?;
        Ok((0..d)
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
}

/// Integrates along axes `1..k` in order.
pub fn integrate(x: &KVectorField, x0: &Assignment, grid: &GridSpec) -> Result<IntegrationOutcome, SolverError> {
    let order: Vec<usize> = (0..grid.k()).collect();
    integrate_in_order(x, x0, grid, &order)
}

/// One line: steps along `axis` from `start`, returning states at nodes `1..=n`.
fn sweep_line(
    field: &Field,
    grid: &GridSpec,
    axis: usize,
    start: &[usize],
    y0: &[f64],
) -> Result<(Vec<Vec<f64>>, f64), SolverError> {
    let h = grid.h[axis];
    let guard_scale = 1e3 * h.powi(5);
    let mut buf = Vec::new();
    let mut node = start.to_vec();
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(grid.steps[axis]);
    let mut worst: f64 = 0.0;
    for _ in 0..grid.steps[axis] {
        let t = grid.time(&node);
        let full = field.rk4(axis, &t, &y, h, &mut buf)?;
        let mut tm = t.clone();
        let half = field.rk4(axis, &t, &y, h / 2.0, &mut buf)?;
        tm[axis] += h / 2.0;
        let two = field.rk4(axis, &tm, &half, h / 2.0, &mut buf)?;
        let est = full.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0;
        let mag = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let guard = guard_scale * (1.0 + mag);
        node[axis] += 1;
        if full.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { node });
        }
        if est > guard {
            return Err(SolverError::StepRejected {
                node,
                axis: axis + 1,
                estimate: est,
                guard,
            });
        }
        worst = worst.max(est);
        y = full;
        out.push(y.clone());
    }
    Ok((out, worst))
}

/// Integrates along the given axis order (0-based indices).
pub fn integrate_in_order(
    x: &KVectorField,
    x0: &Assignment,
    grid: &GridSpec,
    order: &[usize],
) -> Result<IntegrationOutcome, SolverError> {
    let k = x.len();
    if grid.k() != k {
        return Err(SolverError::GridShape { k, found: grid.k() });
    }
    let field = Field::new(x)?;
    let d = field.names.len();
    let y0: Vec<f64> = field
        .names
        .iter()
        .map(|n| x0.get(n).ok_or_else(|| SolverError::MissingInitial(n.clone())))
        .collect::<Result<_, _>>()?;
    let mut data = vec![f64::NAN; grid.node_count() * d];
    data[..d].copy_from_slice(&y0);
    let mut swept: Vec<usize> = Vec::new();
    let mut max_err: f64 = 0.0;
    for &axis in order {
        // start nodes: all combinations over swept axes, zero elsewhere
        let mut starts = vec![vec![0usize; k]];
        for &s in &swept {
            starts = starts
                .into_iter()
                .flat_map(|n| {
                    (0..=grid.steps[s]).map(move |i| {
                        let mut m = n.clone();
                        m[s] = i;
                        m
                    })
                })
                .collect();
        }
        let lines: Vec<Result<(Vec<Vec<f64>>, f64), SolverError>> = starts
            .par_iter()
            .map(|s| {
                let i = grid.ravel(s);
                sweep_line(&field, grid, axis, s, &data[i * d..(i + 1) * d])
            })
            .collect();
        for (s, line) in starts.iter().zip(lines) {
            let (states, err) = line?;
            max_err = max_err.max(err);
            let mut node = s.clone();
            for st in states {
                node[axis] += 1;
                let i = grid.ravel(&node);
                data[i * d..(i + 1) * d].copy_from_slice(&st);
            }
        }
        swept.push(axis);
    }
    let solution = GridSolution {
        grid: grid.clone(),
        names: field.names.clone(),
        data,
    };
    let region = visited_box(&solution);
    let commutator = commutator_residual(x, &region, 64, &mut Sampler::from_seed(crate::symexpr::DEFAULT_SEED))?;
    Ok(IntegrationOutcome {
        solution,
        commutator_residual: commutator,
        integral_section: commutator <= INTEGRABILITY_TOL,
        max_local_error: max_err,
    })
}

/// Bounding box of every coordinate (base included) over a grid.
pub fn visited_box(sol: &GridSolution) -> BTreeMap<String, (f64, f64)> {
    let mut region = BTreeMap::new();
    for a in 0..sol.k() {
        region.insert(format!("t{}", a + 1), (0.0, sol.grid.steps[a] as f64 * sol.grid.h[a]));
    }
    let d = sol.names.len();
    for (c, name) in sol.names.iter().enumerate() {
        let (lo, hi) = sol
            .data
            .iter()
            .skip(c)
            .step_by(d.max(1))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        region.insert(name.clone(), (lo, hi));
    }
    region
}

/// Max absolute coefficient of `[X_A, X_B]` over random points of `region`
/// (coordinates missing from `region` are drawn from `[−2, 2]`).
pub fn commutator_residual(
    x: &KVectorField,
    region: &BTreeMap<String, (f64, f64)>,
    samples: usize,
    sampler: &mut Sampler,
) -> Result<f64, SolverError> {
    let Some(frame) = x.frame() else { return Ok(0.0) };
    let slots: Vec<String> = frame.names().map(String::from).collect();
    let mut brackets = Vec::new();
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let br = x.fields()[a]
                .lie_bracket(&x.fields()[b])
                .map_err(|e| SolverError::Eval(e.to_string()))?;
            for c in br.components() {
                if !c.is_zero() {
                    brackets.push(CompiledExpr::new(c, &slots)?);
                }
            }
        }
    }
    if brackets.is_empty() {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    let mut point = vec![0.0; slots.len()];
    for _ in 0..samples {
        for (p, name) in point.iter_mut().zip(&slots) {
            let (lo, hi) = region.get(name).copied().unwrap_or((-2.0, 2.0));
            *p = if hi > lo { sampler.uniform(lo, hi) } else { lo };
        }
        for e in &brackets {
            if let Ok(v) = e.eval(&point) {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Central differences, one-sided three-point at the boundary.
    #[default]
    Second,
    /// Five-point central, one-sided five-point at the boundary.
    Fourth,
}

/// Weights for `f'` at offset positions relative to the node (spacing 1).
fn first_derivative_weights(stencil: Stencil, i: usize, n: usize) -> Vec<(isize, f64)> {
    let last = n - 1;
    match stencil {
        Stencil::Second if n >= 3 => {
            if i == 0 {
                vec![(0, -1.5), (1, 2.0), (2, -0.5)]
            } else if i == last {
                vec![(0, 1.5), (-1, -2.0), (-2, 0.5)]
            } else {
                vec![(-1, -0.5), (1, 0.5)]
            }
        }
        Stencil::Fourth if n >= 5 => {
            // position of the node within a 5-point window
            let s: isize = if i < 2 {
                i as isize
            } else if i + 2 > last {
                4 - (last - i) as isize
            } else {
                2
            };
            let w: [f64; 5] = match s {
                0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
                1 => [-3.0, -10.0, 18.0, -6.0, 1.0],
                2 => [1.0, -8.0, 0.0, 8.0, -1.0],
                3 => [-1.0, 6.0, -18.0, 10.0, 3.0],
                _ => [3.0, -16.0, 36.0, -48.0, 25.0],
            };
            (0..5).map(|j| (j as isize - s, w[j as usize] / 12.0)).collect()
        }
        _ if n >= 2 => {
            if i == last {
                vec![(0, 1.0), (-1, -1.0)]
            } else {
                vec![(0, -1.0), (1, 1.0)]
            }
        }
        _ => vec![],
    }
}

/// Weights for `f''` (second order everywhere).
fn second_derivative_weights(i: usize, n: usize) -> Vec<(isize, f64)> {
    if n == 3 {
        let c = 1 - i as isize;
        return vec![(c - 1, 1.0), (c, -2.0), (c + 1, 1.0)];
    }
    if n < 3 {
        return vec![];
    }
    if i == 0 {
        vec![(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)]
    } else if i == n - 1 {
        vec![(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)]
    } else {
        vec![(-1, 1.0), (0, -2.0), (1, 1.0)]
    }
}

enum Slot {
    Base(usize),
    Coord(usize),
    D(usize, usize),
    DD(usize, usize, usize),
}

/// Max absolute residual of a jet-alphabet equation set over all grid nodes,
/// with derivatives by finite differences.
pub fn grid_residual(eqs: &EquationSet, sol: &GridSolution, stencil: Stencil) -> Result<f64, SolverError> {
    let k = sol.k();
    let mut lookup: BTreeMap<String, Slot> = BTreeMap::new();
    for a in 0..k {
        lookup.insert(format!("t{}", a + 1), Slot::Base(a));
    }
    for (c, name) in sol.names.iter().enumerate() {
        lookup.insert(name.clone(), Slot::Coord(c));
        for a in 0..k {
            lookup.insert(jet_symbol(name, a + 1), Slot::D(c, a));
            for b in a..k {
                lookup.insert(jet2_symbol(name, a + 1, b + 1), Slot::DD(c, a, b));
            }
        }
    }
    let mut used: Vec<String> = Vec::new();
    for r in eqs.residuals() {
        for v in r.free_vars() {
            if !lookup.contains_key(&v) {
                return Err(SolverError::UnknownSymbol(v));
            }
            if !used.contains(&v) {
                used.push(v);
            }
        }
    }
    let compiled: Vec<CompiledExpr> = eqs
        .residuals()
        .map(|r| CompiledExpr::new(r, &used))
        .collect::<Result<_, _>>()?;
    let ext: Vec<usize> = sol.grid.steps.iter().map(|s| s + 1).collect();
    let d = sol.names.len();
    let value_at = |node: &[usize], c: usize| sol.data[sol.grid.ravel(node) * d + c];
    let first = |node: &[usize], c: usize, a: usize| -> f64 {
        let w = first_derivative_weights(stencil, node[a], ext[a]);
        let mut m = node.to_vec();
        w.iter()
            .map(|&(o, wt)| {
                m[a] = (node[a] as isize + o) as usize;
                wt * value_at(&m, c)
            })
            .sum::<f64>()
            / sol.grid.h[a]
    };
    let per_node: Vec<f64> = (0..sol.grid.node_count())
        .into_par_iter()
        .map(|idx| {
            let node = sol.grid.unravel(idx);
            let t = sol.grid.time(&node);
            let vals: Vec<f64> = used
                .iter()
                .map(|v| match lookup[v] {
                    Slot::Base(a) => t[a],
                    Slot::Coord(c) => value_at(&node, c),
                    Slot::D(c, a) => first(&node, c, a),
                    Slot::DD(c, a, b) if a == b => {
                        let w = second_derivative_weights(node[a], ext[a]);
                        let mut m = node.clone();
                        w.iter()
                            .map(|&(o, wt)| {
                                m[a] = (node[a] as isize + o) as usize;
                                wt * value_at(&m, c)
                            })
                            .sum::<f64>()
                            / (sol.grid.h[a] * sol.grid.h[a])
                    }
                    Slot::DD(c, a, b) => {
                        // derivative along b of the first derivative along a
                        let w = first_derivative_weights(Stencil::Second, node[b], ext[b]);
                        let mut m = node.clone();
                        w.iter()
                            .map(|&(o, wt)| {
                                m[b] = (node[b] as isize + o) as usize;
                                wt * first(&m, c, a)
                            })
                            .sum::<f64>()
                            / sol.grid.h[b]
                    }
                })
                .collect();
            compiled
                .iter()
                .map(|e| e.eval(&vals).map(f64::abs).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(per_node.into_iter().fold(0.0, f64::max))
}
