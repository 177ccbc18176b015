//! Dense linear-algebra helpers: numerical null spaces and symmetric
//! top-eigenpair extraction.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Result, SofError};
use crate::scalar::{from_usize, lit, representation_tol, to_f64, Real};

/// Largest absolute entry.
pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// `max |M - M^T|` for a square matrix.
pub fn asymmetry<T: Real>(m: &DMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

pub fn check_finite<T: Real>(what: &str, m: &DMatrix<T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(SofError::NonFinite { what: what.to_string(), row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    SVD::new(m.clone(), false, false).singular_values.iter().fold(T::zero(), |acc, s| acc.max(*s))
}

/// Flips `v` so that its first entry of non-negligible magnitude is positive.
fn orient<T: Real>(v: &mut DVector<T>) {
    let scale = v.amax();
    if scale == T::zero() {
        return;
    }
    let cutoff = scale * lit(1e-9);
    if let Some(first) = v.iter().find(|x| x.abs() > cutoff) {
        if *first < T::zero() {
            v.neg_mut();
        }
    }
}

/// Orthonormal basis of the right null space of `m`, one basis vector per
/// column.
///
/// Singular values at or below `rank_tol` count as zero. The default is
/// `max(rows, cols) * eps * sigma_max`. A full-column-rank input yields a
/// basis with zero columns; the zero matrix yields the identity. Basis
/// vectors are oriented so their first significant entry is positive.
pub fn null_space<T: Real>(m: &DMatrix<T>, rank_tol: Option<T>) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if max_abs(m) == T::zero() {
        return DMatrix::identity(cols, cols);
    }

    // Zero rows leave the right null space unchanged but make the SVD
    // return a complete cols x cols right factor.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };

    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().fold(T::zero(), |acc, s| acc.max(*s));
    let tol = rank_tol.unwrap_or_else(|| from_usize::<T>(rows.max(cols)) * T::default_epsilon() * sigma_max);

    let mut basis: Vec<DVector<T>> = Vec::new();
    for i in 0..cols {
        // v_t has exactly `cols` rows here since the padded matrix is tall.
        let s = if i < sigma.len() { sigma[i] } else { T::zero() };
        if s <= tol {
            let mut v: DVector<T> = v_t.row(i).transpose();
            orient(&mut v);
            basis.push(v);
        }
    }
    if basis.is_empty() {
        return DMatrix::zeros(cols, 0);
    }
    DMatrix::from_columns(&basis)
}

/// Largest eigenvalue of a symmetric matrix together with a unit
/// eigenvector whose first significant entry is positive.
pub fn lambda_max_sym<T: Real>(m: &DMatrix<T>) -> Result<(T, DVector<T>)> {
    if !m.is_square() {
        return Err(SofError::Dimension(format!(
            "symmetric eigensolve needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(SofError::Dimension("empty matrix".into()));
    }
    check_finite("matrix", m)?;
    let skew = asymmetry(m);
    if skew > representation_tol::<T>() * (T::one() + max_abs(m)) {
        return Err(SofError::NotSymmetric { violation: to_f64(skew) });
    }
    Ok(top_eigenpair(&symmetrize(m)))
}

/// Top eigenpair of an already-symmetric matrix.
pub(crate) fn top_eigenpair<T: Real>(m: &DMatrix<T>) -> (T, DVector<T>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut v: DVector<T> = eig.eigenvectors.column(best).into_owned();
    let norm = v.norm();
    if norm > T::zero() {
        v /= norm;
    }
    orient(&mut v);
    (eig.eigenvalues[best], v)
}

/// Largest eigenvalue of an already-symmetric matrix.
pub(crate) fn top_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// Negative-semidefiniteness test with the rounding allowance
/// `lambda_max <= tol * (1 + ||M||_F)`; returns the verdict and `lambda_max`.
pub fn is_nsd<T: Real>(m: &DMatrix<T>) -> (bool, T) {
    let lam = top_eigenvalue(&symmetrize(m));
    let allowance = representation_tol::<T>() * (T::one() + m.norm());
    (lam <= allowance, lam)
}
