//! Existence test for a stabilizing static output-feedback gain.
//!
//! A gain `K` with `Psi + B K C + (B K C)^T < 0`, `Psi = A^T + A`, exists
//! iff `Psi` is negative definite on `null(B^T)` and on `null(C)`. An empty
//! null space makes its condition hold vacuously.

use nalgebra::DMatrix;

use crate::linalg::{null_space, top_eigenvalue};
use crate::model::LtiPlant;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<T: Real> {
    /// Orthonormal basis of `null(B^T)`, `n x m_B`.
    pub u_b: DMatrix<T>,
    /// Orthonormal basis of `null(C)`, `n x m_C`.
    pub u_c: DMatrix<T>,
    /// `lambda_max(U_B^T (A^T + A) U_B)`, `-inf` when `m_B = 0`.
    pub lambda_b: T,
    /// `lambda_max(U_C^T (A^T + A) U_C)`, `-inf` when `m_C = 0`.
    pub lambda_c: T,
    /// Margin the test values had to clear: a condition holds iff its
    /// value is `< -strict_margin`.
    pub strict_margin: T,
    pub feasible: bool,
}

impl<T: Real> FeasibilityReport<T> {
    pub fn m_b(&self) -> usize {
        self.u_b.ncols()
    }

    pub fn m_c(&self) -> usize {
        self.u_c.ncols()
    }

    /// Distance of the deciding test value from zero: for a feasible plant
    /// `min(-lambda_B, -lambda_C)`, otherwise `max(lambda_B, lambda_C)`.
    /// Infinite when both conditions are vacuous.
    pub fn margin(&self) -> T {
        self.lambda_b.max(self.lambda_c).abs()
    }
}

/// Restricted test value `lambda_max(U^T Psi U)`, `-inf` for an empty basis.
pub fn restricted_lambda<T: Real>(psi: &DMatrix<T>, basis: &DMatrix<T>) -> T {
    if basis.ncols() == 0 {
        return -T::one() / T::zero();
    }
    let restricted = basis.transpose() * psi * basis;
    top_eigenvalue(&crate::linalg::symmetrize(&restricted))
}

/// Projection conditions with the default strictness margin of zero.
pub fn projection_conditions<T: Real>(plant: &LtiPlant<T>) -> FeasibilityReport<T> {
    projection_conditions_with_margin(plant, T::zero())
}

pub fn projection_conditions_with_margin<T: Real>(plant: &LtiPlant<T>, strict_margin: T) -> FeasibilityReport<T> {
    let a = plant.a();
    let psi = a + a.transpose();
    let u_b = null_space(&plant.b().transpose(), None);
    let u_c = null_space(plant.c(), None);
    let lambda_b = restricted_lambda(&psi, &u_b);
    let lambda_c = restricted_lambda(&psi, &u_c);
    let feasible = lambda_b < -strict_margin && lambda_c < -strict_margin;
    FeasibilityReport { u_b, u_c, lambda_b, lambda_c, strict_margin, feasible }
}
