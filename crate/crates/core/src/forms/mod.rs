//! Exterior calculus on a single global chart.

mod form;
mod frame;
mod map;
mod tensor;
mod vector;


use thiserror::Error;

pub use form::DifferentialForm;
pub use frame::{
    base_name, config_name, momentum_name, velocity_name, BundleKind, Coordinate, CoordinateFrame, Frame, Role,
    AFFINE_NAME,
};
pub use map::SmoothMap;
pub use tensor::{apply_tensor, OneOneTensor};
pub use vector::{KVectorField, VectorField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("objects live on different frames: {0} vs {1}")]
    FrameMismatch(String, String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("degree {found} too small, need at least {needed}")]
    DegreeTooSmall { needed: usize, found: usize },
    #[error("expected degree {expected}, found {found}")]
    WrongDegree { expected: usize, found: usize },
    #[error("expected {expected} components, found {found}")]
    Arity { expected: usize, found: usize },
}

pub(crate) fn same_frame(a: &Frame, b: &Frame) -> Result<(), FormError> {
    if std::sync::Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(FormError::FrameMismatch(a.describe(), b.describe()))
    }
}

/// Tensorial contraction `α(X₁, …, X_r, ·)`: `X₁` fills the first slot, so
/// `contract_k((∂/∂t¹, …, ∂/∂tᵏ), dᵏt) = 1`.
pub fn contract_k(alpha: &DifferentialForm, fields: &[VectorField]) -> Result<DifferentialForm, FormError> {
    if alpha.degree() < fields.len() {
        return Err(FormError::DegreeTooSmall {
            needed: fields.len(),
            found: alpha.degree(),
        });
    }
    let mut acc = alpha.clone();
    for x in fields {
        acc = acc.interior(x)?;
    }
    Ok(acc)
}
