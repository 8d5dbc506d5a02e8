//! Symbolic exterior calculus and the k-symplectic, k-cosymplectic and
//! multisymplectic descriptions of first-order classical field theories.

pub(crate) mod algebra;
pub mod bridges;
pub mod canonical;
pub mod forms;
pub mod hamiltonian;
pub mod lagrangian;
pub mod multisym;
pub mod solver;
pub(crate) mod numeric;
pub mod symexpr;
pub mod theory;

pub use forms::{
    contract_k, BundleKind, CoordinateFrame, DifferentialForm, FormError, Frame, KVectorField, OneOneTensor, Role,
    SmoothMap, VectorField,
};
pub use symexpr::{equal, parse, Assignment, EqualityVerdict, Expr};
pub use symexpr::Sampler;
pub use theory::{EquationSet, FieldTheory, SymbolicSection, Variant};
pub use solver::{GridSolution, GridSpec, IntegrationOutcome, Stencil};
