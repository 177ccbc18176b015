//! Verification of the Lyapunov certificates.
//!
//! The quadratic-constraint condition for `V = x^T P x` reads
//!
//! ```text
//! [ G^T P + P G + eps P   P + xi I ]
//! [ P + xi I              0        ]  <= 0,      G = A + B K C
//! ```
//!
//! The zero lower-right block forces the off-diagonal block to vanish, so
//! `P = -xi I`; rescaling gives `P = I`, `xi = -1` and the reduced
//! condition `G + G^T + eps I <= 0`. Both forms are checked here.

use nalgebra::DMatrix;

use crate::error::{Result, SofError};
use crate::linalg::{asymmetry, is_nsd, max_abs, symmetrize, top_eigenvalue};
use crate::model::LtiPlant;
use crate::scalar::{representation_tol, to_f64, Real};
use crate::sim::Trajectory;
use crate::synthesis::closed_loop_sym;

/// Certificate for `V(x) = x^T x` with multiplier `xi_o = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T: Real> {
    /// Always the identity.
    pub p: DMatrix<T>,
    /// Always `-1`.
    pub xi_o: T,
    pub epsilon: T,
    /// `lambda_max((A + B K C) + (A + B K C)^T)`.
    pub lambda_max_reduced: T,
    /// `lambda_max` of the assembled block matrix.
    pub lambda_max_bmi: T,
    pub valid: bool,
}

/// Block matrix of the closed-loop quadratic-constraint inequality with the
/// right-hand side moved over; the inequality holds iff this matrix is
/// negative semidefinite.
pub fn assemble_bmi<T: Real>(
    plant: &LtiPlant<T>,
    k: &DMatrix<T>,
    p: &DMatrix<T>,
    xi_o: T,
    epsilon: T,
) -> Result<DMatrix<T>> {
    let n = plant.n();
    if p.shape() != (n, n) {
        return Err(SofError::Dimension(format!("P must be {}x{}, got {}x{}", n, n, p.nrows(), p.ncols())));
    }
    let skew = asymmetry(p);
    if skew > representation_tol::<T>() * (T::one() + max_abs(p)) {
        return Err(SofError::NotSymmetric { violation: to_f64(skew) });
    }
    let g = plant.closed_loop(Some(k))?;
    let top_left = g.transpose() * p + p * &g + p * epsilon;
    let off = p + DMatrix::identity(n, n) * xi_o;

    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&top_left);
    m.view_mut((0, n), (n, n)).copy_from(&off);
    m.view_mut((n, 0), (n, n)).copy_from(&off.transpose());
    Ok(symmetrize(&m))
}

/// Checks `(A + B K C) + (A + B K C)^T + eps I <= 0` and evaluates the
/// full block inequality at `P = I`, `xi_o = -1`.
pub fn verify_sof<T: Real>(plant: &LtiPlant<T>, k: &DMatrix<T>, epsilon: T) -> Result<Certificate<T>> {
    if !(epsilon.is_finite() && epsilon > T::zero()) {
        return Err(SofError::InvalidOption(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = plant.n();
    let lambda_max_reduced = top_eigenvalue(&closed_loop_sym(plant, k)?);
    let p = DMatrix::identity(n, n);
    let xi_o = -T::one();
    let bmi = assemble_bmi(plant, k, &p, xi_o, epsilon)?;
    let (_, lambda_max_bmi) = is_nsd(&bmi);
    Ok(Certificate { p, xi_o, epsilon, lambda_max_reduced, lambda_max_bmi, valid: lambda_max_reduced <= -epsilon })
}

/// Open-loop condition `A^T + A + eps I <= 0`, i.e. [`verify_sof`] at `K = 0`.
pub fn verify_open_loop<T: Real>(plant: &LtiPlant<T>, epsilon: T) -> Result<Certificate<T>> {
    verify_sof(plant, &DMatrix::zeros(plant.q(), plant.p()), epsilon)
}

/// True iff `||x(t_i)||^2 <= ||x(0)||^2 exp(-eps t_i) (1 + slack)` at every
/// sample.
pub fn decay_check<T: Real>(traj: &Trajectory<T>, epsilon: T, slack: T) -> Result<bool> {
    if traj.is_empty() {
        return Err(SofError::EmptyTrajectory);
    }
    let v0 = traj.states[0].norm_squared();
    let t0 = traj.times[0];
    let factor = T::one() + slack;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .all(|(t, x)| x.norm_squared() <= v0 * (-(epsilon * (*t - t0))).exp() * factor))
}
