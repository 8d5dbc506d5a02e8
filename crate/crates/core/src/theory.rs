//! Field theories, residual equation sets and symbolic sections.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::forms::{
    base_name, config_name, BundleKind, CoordinateFrame, DifferentialForm, FormError, Frame, KVectorField, Role,
    VectorField,
};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::symexpr::{equal, sum, EqualityVerdict, Expr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    KSymHam,
    KCosymHam,
    KSymLag,
    KCosymLag,
    MsHamSection,
    MsLag,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::KSymHam,
        Variant::KCosymHam,
        Variant::KSymLag,
        Variant::KCosymLag,
        Variant::MsHamSection,
        Variant::MsLag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::KSymHam => "ksymplectic-hamiltonian",
            Variant::KCosymHam => "kcosymplectic-hamiltonian",
            Variant::KSymLag => "ksymplectic-lagrangian",
            Variant::KCosymLag => "kcosymplectic-lagrangian",
            Variant::MsHamSection => "multisymplectic-hamiltonian",
            Variant::MsLag => "multisymplectic-lagrangian",
        }
    }

    pub fn from_name(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }

    pub fn is_hamiltonian(self) -> bool {
        matches!(self, Variant::KSymHam | Variant::KCosymHam | Variant::MsHamSection)
    }

    pub fn is_lagrangian(self) -> bool {
        !self.is_hamiltonian()
    }

    /// Whether the generating function may depend on `tᴬ`.
    pub fn has_base(self) -> bool {
        !matches!(self, Variant::KSymHam | Variant::KSymLag)
    }

    /// Chart on which the generating function lives. Hamiltonian sections live
    /// on `J¹π* ≅ ℝᵏ × (T¹ₖ)*Q`, multisymplectic Lagrangians on `J¹π ≅ ℝᵏ × T¹ₖQ`.
    pub fn bundle(self) -> BundleKind {
        match self {
            Variant::KSymHam => BundleKind::KCovelocities,
            Variant::KCosymHam | Variant::MsHamSection => BundleKind::ExtKCovelocities,
            Variant::KSymLag => BundleKind::KVelocities,
            Variant::KCosymLag | Variant::MsLag => BundleKind::ExtKVelocities,
        }
    }

    pub fn frame_label(self) -> &'static str {
        if self.is_hamiltonian() {
            "Hamiltonian"
        } else {
            "Lagrangian"
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error("{var} not in {frame} frame")]
    ForeignVariable { var: String, frame: &'static str },
    #[error("k and n must be at least 1 (got k={k}, n={n})")]
    BadDimensions { k: usize, n: usize },
    #[error("operation needs a {expected} system, got {found}")]
    WrongVariant { expected: &'static str, found: Variant },
    #[error("section depends on {0}, which is not a base variable")]
    SectionNotOnBase(String),
    #[error("section is missing a value for {0}")]
    SectionIncomplete(String),
    #[error("section assigns {0}, which is not a fibre coordinate of the frame")]
    SectionForeign(String),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// A system: variant, dimensions and generating function (H, 𝓗, L or 𝓛).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTheory {
    variant: Variant,
    frame: Frame,
    generator: Expr,
}

impl FieldTheory {
    pub fn new(variant: Variant, k: usize, n: usize, generator: Expr) -> Result<Self, TheoryError> {
        if k == 0 || n == 0 {
            return Err(TheoryError::BadDimensions { k, n });
        }
        let frame = CoordinateFrame::new(variant.bundle(), k, n);
        if let Some(var) = generator.free_vars().into_iter().find(|v| !frame.contains(v)) {
            return Err(TheoryError::ForeignVariable {
                var,
                frame: variant.frame_label(),
            });
        }
        Ok(FieldTheory {
            variant,
            frame,
            generator: generator.normalize(),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn k(&self) -> usize {
        self.frame.k()
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn generator(&self) -> &Expr {
        &self.generator
    }

    pub(crate) fn expect(&self, ok: &[Variant], expected: &'static str) -> Result<(), TheoryError> {
        if ok.contains(&self.variant) {
            Ok(())
        } else {
            Err(TheoryError::WrongVariant {
                expected,
                found: self.variant,
            })
        }
    }
}

/// `∂ψᶜ/∂tᴮ` for coordinate `c`, e.g. `Dq1_2`, `Dp2_1_1`.
pub fn jet_symbol(coord: &str, b: usize) -> String {
    format!("D{coord}_{b}")
}

/// `∂²ψᶜ/∂tᴬ∂tᴮ`, indices sorted, e.g. `DDq1_1_2`.
pub fn jet2_symbol(coord: &str, a: usize, b: usize) -> String {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    format!("DD{coord}_{a}_{b}")
}

/// Component `(X_A)ᶜ` of the A-th field along coordinate `c`, e.g. `X2_p1_1`.
pub fn component_symbol(a: usize, coord: &str) -> String {
    format!("X{a}_{coord}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alphabet {
    /// Section equations in the coordinates and their `D…` jet symbols.
    Jet,
    /// k-vector-field equations in `X{A}_{coord}` component symbols.
    Components,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub label: String,
    pub residual: Expr,
}

/// Residual system `residual = 0` over a declared unknown alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationSet {
    pub name: String,
    pub alphabet: Alphabet,
    pub unknowns: Vec<String>,
    pub equations: Vec<Equation>,
}

impl EquationSet {
    pub fn new(name: impl Into<String>, alphabet: Alphabet, unknowns: Vec<String>) -> Self {
        EquationSet {
            name: name.into(),
            alphabet,
            unknowns,
            equations: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, residual: Expr) {
        self.equations.push(Equation {
            label: label.into(),
            residual: residual.normalize(),
        });
    }

    pub fn residuals(&self) -> impl Iterator<Item = &Expr> {
        self.equations.iter().map(|e| &e.residual)
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Drops rows that are identically zero.
    pub fn pruned(mut self) -> Self {
        self.equations.retain(|e| !e.residual.is_zero());
        self
    }

    /// Substitutes into every residual.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> EquationSet {
        EquationSet {
            name: self.name.clone(),
            alphabet: self.alphabet,
            unknowns: self.unknowns.clone(),
            equations: self
                .equations
                .iter()
                .map(|e| Equation {
                    label: e.label.clone(),
                    residual: e.residual.substitute(map),
                })
                .collect(),
        }
    }

    /// Renames unknowns (used to unify alphabets before comparison).
    pub fn rename(&self, renames: &BTreeMap<String, String>) -> EquationSet {
        let map: BTreeMap<String, Expr> = renames.iter().map(|(a, b)| (a.clone(), Expr::var(b))).collect();
        let mut out = self.substitute(&map);
        out.unknowns = self
            .unknowns
            .iter()
            .map(|u| renames.get(u).cloned().unwrap_or_else(|| u.clone()))
            .collect();
        out
    }

    /// Whether any residual is nonlinear in the unknowns.
    pub fn is_linear(&self) -> bool {
        self.residuals().all(|r| {
            self.unknowns
                .iter()
                .all(|u| self.unknowns.iter().all(|w| r.diff(u).diff(w).is_zero()))
        })
    }

    /// Rows in "solved" rendering where a unit-coefficient unknown can be
    /// isolated, e.g. `Dq1_1 = p1_1`; otherwise `residual = 0`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.equations {
            out.push_str(&format!("{}: {}\n", e.label, render_row(&e.residual, &self.unknowns)));
        }
        out
    }
}

fn render_row(r: &Expr, unknowns: &[String]) -> String {
    let present: Vec<&String> = unknowns.iter().filter(|u| r.depends_on(u)).collect();
    if present.len() == 1 {
        let u = present[0];
        let c = r.diff(u);
        let rest = (r - &(&c * &Expr::var(u.as_str()))).normalize();
        if c.is_one() {
            return format!("{u} = {}", (-rest));
        }
        if c == Expr::int(-1) {
            return format!("{u} = {rest}");
        }
    }
    format!("{r} = 0")
}

impl fmt::Display for EquationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.name)?;
        f.write_str(&self.render())
    }
}

/// Section `ℝᵏ → E` given by expressions in `t1..tk`, one per fibre
/// coordinate of `frame`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicSection {
    frame: Frame,
    values: BTreeMap<String, Expr>,
}

impl SymbolicSection {
    pub fn new(frame: &Frame, values: BTreeMap<String, Expr>) -> Result<Self, TheoryError> {
        let base: BTreeSet<String> = (1..=frame.k()).map(base_name).collect();
        for (name, e) in &values {
            let idx = frame
                .index_of(name)
                .ok_or_else(|| TheoryError::SectionForeign(name.clone()))?;
            if matches!(frame.role(idx), Role::Base(_)) {
                return Err(TheoryError::SectionForeign(name.clone()));
            }
            if let Some(v) = e.free_vars().into_iter().find(|v| !base.contains(v)) {
                return Err(TheoryError::SectionNotOnBase(v));
            }
        }
        for i in frame.fibre_indices() {
            if !values.contains_key(frame.name(i)) {
                return Err(TheoryError::SectionIncomplete(frame.name(i).to_string()));
            }
        }
        Self::unchecked(frame, values)
    }

    /// Base map `φ: ℝᵏ → Q`: values for exactly the configuration coordinates.
    pub fn on_config(frame: &Frame, values: BTreeMap<String, Expr>) -> Result<Self, TheoryError> {
        let base: BTreeSet<String> = (1..=frame.k()).map(base_name).collect();
        for (name, e) in &values {
            if !(1..=frame.n()).any(|i| config_name(i) == *name) {
                return Err(TheoryError::SectionForeign(name.clone()));
            }
            if let Some(v) = e.free_vars().into_iter().find(|v| !base.contains(v)) {
                return Err(TheoryError::SectionNotOnBase(v));
            }
        }
        for i in 1..=frame.n() {
            if !values.contains_key(&config_name(i)) {
                return Err(TheoryError::SectionIncomplete(config_name(i)));
            }
        }
        Self::unchecked(frame, values)
    }

    fn unchecked(frame: &Frame, values: BTreeMap<String, Expr>) -> Result<Self, TheoryError> {
        let values = values.into_iter().map(|(k, v)| (k, v.normalize())).collect();
        Ok(SymbolicSection {
            frame: frame.clone(),
            values,
        })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn k(&self) -> usize {
        self.frame.k()
    }

    pub fn values(&self) -> &BTreeMap<String, Expr> {
        &self.values
    }

    pub fn value(&self, name: &str) -> Option<&Expr> {
        self.values.get(name)
    }

    /// Substitution for coordinates and their first and second jet symbols.
    pub fn jet_substitution(&self) -> BTreeMap<String, Expr> {
        let k = self.k();
        let mut map = BTreeMap::new();
        for (name, e) in &self.values {
            map.insert(name.clone(), e.clone());
            for b in 1..=k {
                let d = e.diff(&base_name(b));
                for a in 1..=b {
                    map.insert(jet2_symbol(name, a, b), d.diff(&base_name(a)));
                }
                map.insert(jet_symbol(name, b), d);
            }
        }
        map
    }
}

impl fmt::Display for SymbolicSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Total derivative `d/dtᴬ` of a function of `t`, `qⁱ` and first jet
/// symbols `Dqj_B` along a holonomic section.
pub(crate) fn total_derivative(f: &Expr, n: usize, a: usize) -> Expr {
    let mut terms = vec![f.diff(&base_name(a))];
    for i in 1..=n {
        let q = crate::forms::config_name(i);
        terms.push(f.diff(&q) * Expr::var(jet_symbol(&q, a)));
    }
    for s in f.free_vars() {
        let Some(rest) = s.strip_prefix('D') else { continue };
        if rest.starts_with('D') {
            continue;
        }
        if let Some((coord, b)) = rest.rsplit_once('_') {
            if let Ok(b) = b.parse::<usize>() {
                terms.push(f.diff(&s) * Expr::var(jet2_symbol(coord, a, b)));
            }
        }
    }
    sum(terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// One residual after substituting a candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRow {
    pub label: String,
    pub residual: Expr,
    pub verdict: EqualityVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionReport {
    pub equations: String,
    pub rows: Vec<ResidualRow>,
    pub verdict: Verdict,
    /// Assumptions the check relies on but does not establish.
    pub assumptions: Vec<String>,
}

impl SectionReport {
    pub fn failing(&self) -> impl Iterator<Item = &ResidualRow> {
        self.rows.iter().filter(|r| !r.verdict.holds())
    }
}

pub(crate) const ADMISSIBILITY_NOTE: &str =
    "admissibility (image is a closed embedded submanifold) is assumed, not checked";

/// Substitutes a section and its jets into a jet-alphabet equation set.
pub fn check_section(eqs: &EquationSet, section: &SymbolicSection) -> SectionReport {
    let map = section.jet_substitution();
    let rows: Vec<ResidualRow> = eqs
        .equations
        .iter()
        .map(|e| {
            let r = e.residual.substitute(&map);
            let verdict = equal(&r, &Expr::zero());
            ResidualRow {
                label: e.label.clone(),
                residual: r,
                verdict,
            }
        })
        .collect();
    let verdict = if rows.iter().all(|r| r.verdict.holds()) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    SectionReport {
        equations: eqs.name.clone(),
        rows,
        verdict,
        assumptions: vec![ADMISSIBILITY_NOTE.to_string()],
    }
}

/// Exact rank of the coefficient matrix of a linear system whose unknown
/// coefficients are rational constants; `None` otherwise.
pub fn constant_linear_rank(eqs: &EquationSet) -> Option<usize> {
    let mut m: Vec<Vec<BigRational>> = Vec::new();
    for r in eqs.residuals() {
        let row = eqs
            .unknowns
            .iter()
            .map(|u| r.diff(u).as_rational().cloned())
            .collect::<Option<Vec<_>>>()?;
        m.push(row);
    }
    Some(rational_rank(m))
}

pub(crate) fn rational_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(rank, p);
        let inv = BigRational::one() / m[rank][c].clone();
        let pivot_row: Vec<BigRational> = m[rank].iter().map(|x| x * &inv).collect();
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        m[rank] = pivot_row;
        rank += 1;
    }
    rank
}

/// All component symbols `X{A}_{coord}` of a k-vector field on `frame`.
pub fn component_unknowns(frame: &Frame) -> Vec<String> {
    (1..=frame.k())
        .flat_map(|a| frame.names().map(move |c| component_symbol(a, c)).collect::<Vec<_>>())
        .collect()
}

/// k-vector field whose components are the bare symbols `X{A}_{coord}`,
/// except where `fixed` supplies an expression for a symbol.
pub fn symbolic_kvector(frame: &Frame, fixed: &BTreeMap<String, Expr>) -> KVectorField {
    let fields = (1..=frame.k())
        .map(|a| {
            let comps = frame
                .names()
                .map(|c| {
                    let s = component_symbol(a, c);
                    fixed.get(&s).cloned().unwrap_or_else(|| Expr::var(s))
                })
                .collect();
            VectorField::new(frame, comps).expect("frame-sized")
        })
        .collect();
    KVectorField::tuple(fields).expect("same frame")
}

/// Substitution sending component symbols to the components of `x`.
pub fn component_substitution(x: &KVectorField) -> BTreeMap<String, Expr> {
    let mut map = BTreeMap::new();
    for (a, f) in x.fields().iter().enumerate() {
        for (i, c) in f.components().iter().enumerate() {
            map.insert(component_symbol(a + 1, f.frame().name(i)), c.clone());
        }
    }
    map
}

/// Appends one row per nonzero coefficient of `form`, labelled by its basis
/// monomial.
pub(crate) fn push_form_rows(set: &mut EquationSet, form: &DifferentialForm) {
    let frame = form.frame().clone();
    for (idx, c) in form.terms() {
        let label = idx
            .iter()
            .map(|&i| format!("d{}", frame.name(i)))
            .collect::<Vec<_>>()
            .join("∧");
        set.push(label, c.clone());
    }
}

/// `(X̄_A)ᴮ − δᴮ_A` rows.
pub(crate) fn push_normalization_rows(set: &mut EquationSet, frame: &Frame) {
    for a in 1..=frame.k() {
        for b in 1..=frame.k() {
            let delta = if a == b { Expr::one() } else { Expr::zero() };
            set.push(
                format!("eta{b}(X{a})"),
                Expr::var(component_symbol(a, &base_name(b))) - delta,
            );
        }
    }
}
