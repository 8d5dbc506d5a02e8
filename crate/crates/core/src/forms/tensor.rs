use crate::symexpr::{sum, Expr};

use super::{same_frame, DifferentialForm, FormError, Frame, VectorField};

/// (1,1)-tensor given by its action on coordinate fields:
/// `S(∂/∂x_col) = Σ_row M[row][col] ∂/∂x_row`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneOneTensor {
    frame: Frame,
    matrix: Vec<Vec<Expr>>,
}

impl OneOneTensor {
    pub fn zero(frame: &Frame) -> Self {
        let d = frame.dim();
        OneOneTensor {
            frame: frame.clone(),
            matrix: vec![vec![Expr::zero(); d]; d],
        }
    }

    /// `∂/∂x_row ⊗ dx_col` added with coefficient `c`.
    pub fn add_entry(&mut self, row: usize, col: usize, c: Expr) {
        let prev = std::mem::replace(&mut self.matrix[row][col], Expr::zero());
        self.matrix[row][col] = prev + c;
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn entry(&self, row: usize, col: usize) -> &Expr {
        &self.matrix[row][col]
    }

    pub fn apply_vector(&self, x: &VectorField) -> Result<VectorField, FormError> {
        same_frame(&self.frame, x.frame())?;
        let d = self.frame.dim();
        let comps = (0..d)
            .map(|row| sum((0..d).map(|col| &self.matrix[row][col] * x.component(col))))
            .collect();
        VectorField::new(&self.frame, comps)
    }

    /// `S ∘ T` as endomorphisms.
    pub fn compose(&self, other: &Self) -> Result<Self, FormError> {
        same_frame(&self.frame, other.frame())?;
        let d = self.frame.dim();
        let mut out = Self::zero(&self.frame);
        for r in 0..d {
            for c in 0..d {
                out.matrix[r][c] = sum((0..d).map(|m| &self.matrix[r][m] * &other.matrix[m][c]));
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(Expr::is_zero)
    }
}

/// Transpose action on 1-forms: `(η ∘ S)(∂_col) = Σ_row M[row][col] η_row`.
pub fn apply_tensor(s: &OneOneTensor, eta: &DifferentialForm) -> Result<DifferentialForm, FormError> {
    same_frame(s.frame(), eta.frame())?;
    if eta.degree() != 1 {
        return Err(FormError::WrongDegree {
            expected: 1,
            found: eta.degree(),
        });
    }
    let d = s.frame().dim();
    let terms = (0..d).map(|col| {
        let c = sum((0..d).map(|row| s.entry(row, col) * eta.coefficient(&[row])));
        (vec![col], c)
    });
    Ok(DifferentialForm::from_terms(s.frame(), 1, terms))
}
