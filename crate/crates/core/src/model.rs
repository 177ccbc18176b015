//! Plant, lossless nonlinearity and the open/closed-loop vector fields.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Result, SofError};
use crate::linalg::{check_finite, max_abs};
use crate::scalar::{lit, representation_tol, to_f64, Real};

/// Linear plant `x' = A x + B u`, `y = C x` with `n` states, `q` inputs and
/// `p` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiPlant<T: Real> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
}

impl<T: Real> LtiPlant<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(SofError::Dimension("A must have at least one row".into()));
        }
        if a.ncols() != n {
            return Err(SofError::Dimension(format!("A must be square, got {}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(SofError::Dimension(format!("B must have {} rows to match A, got {}", n, b.nrows())));
        }
        if b.ncols() == 0 {
            return Err(SofError::Dimension("B must have at least one column".into()));
        }
        if c.ncols() != n {
            return Err(SofError::Dimension(format!("C must have {} columns to match A, got {}", n, c.ncols())));
        }
        if c.nrows() == 0 {
            return Err(SofError::Dimension("C must have at least one row".into()));
        }
        check_finite("A", &a)?;
        check_finite("B", &b)?;
        check_finite("C", &c)?;
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn q(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Rejects gains that are not `q x p` or contain non-finite entries.
    pub fn check_gain(&self, k: &DMatrix<T>) -> Result<()> {
        if k.shape() != (self.q(), self.p()) {
            return Err(SofError::Dimension(format!(
                "gain must be {}x{}, got {}x{}",
                self.q(),
                self.p(),
                k.nrows(),
                k.ncols()
            )));
        }
        check_finite("K", k)
    }

    /// `A + B K C`, or `A` when no gain is given.
    pub fn closed_loop(&self, k: Option<&DMatrix<T>>) -> Result<DMatrix<T>> {
        match k {
            None => Ok(self.a.clone()),
            Some(k) => {
                self.check_gain(k)?;
                Ok(&self.a + &self.b * k * &self.c)
            }
        }
    }

    /// Converts every matrix to another scalar type.
    pub fn cast<U: Real>(&self) -> LtiPlant<U> {
        let conv = |m: &DMatrix<T>| m.map(|v| lit::<U>(to_f64(v)));
        LtiPlant { a: conv(&self.a), b: conv(&self.b), c: conv(&self.c) }
    }
}

/// State-affine lossless nonlinearity `z = N(x) x` with
/// `N(x) = sum_k x_k S_k` and every `S_k` skew-symmetric, so `x^T z = 0`
/// holds identically.
#[derive(Debug, Clone, PartialEq)]
pub struct LosslessNonlinearity<T: Real> {
    terms: Vec<DMatrix<T>>,
}

impl<T: Real> LosslessNonlinearity<T> {
    pub fn new(terms: Vec<DMatrix<T>>) -> Result<Self> {
        let n = terms.len();
        if n == 0 {
            return Err(SofError::Dimension("nonlinearity needs one term per state".into()));
        }
        for (k, s) in terms.iter().enumerate() {
            if s.shape() != (n, n) {
                return Err(SofError::Dimension(format!(
                    "S[{}] must be {}x{}, got {}x{}",
                    k,
                    n,
                    n,
                    s.nrows(),
                    s.ncols()
                )));
            }
            check_finite(&format!("S[{k}]"), s)?;
            let violation = max_abs(&(s + s.transpose()));
            if violation > representation_tol::<T>() {
                return Err(SofError::NotSkew { index: k, violation: to_f64(violation) });
            }
        }
        Ok(Self { terms })
    }

    /// Builds a nonlinearity without the skew check. Only shapes are
    /// validated; used to probe [`check_lossless`] with corrupted terms.
    pub fn new_unchecked(terms: Vec<DMatrix<T>>) -> Result<Self> {
        let n = terms.len();
        if n == 0 || terms.iter().any(|s| s.shape() != (n, n)) {
            return Err(SofError::Dimension("nonlinearity terms must be n matrices of n x n".into()));
        }
        Ok(Self { terms })
    }

    /// The identically-zero nonlinearity on `n` states.
    pub fn zero(n: usize) -> Self {
        Self { terms: vec![DMatrix::zeros(n, n); n] }
    }

    pub fn n(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[DMatrix<T>] {
        &self.terms
    }

    /// `N(x) = sum_k x_k S_k`.
    pub fn matrix_at(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_state(x)?;
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (xk, s) in x.iter().zip(&self.terms) {
            m += s * *xk;
        }
        Ok(m)
    }

    /// `z = N(x) x`.
    pub fn eval_z(&self, x: &DVector<T>) -> Result<DVector<T>> {
        self.check_state(x)?;
        Ok(self.apply(x))
    }

    pub(crate) fn apply(&self, x: &DVector<T>) -> DVector<T> {
        let n = self.n();
        let mut z = DVector::zeros(n);
        for (xk, s) in x.iter().zip(&self.terms) {
            if *xk != T::zero() {
                z.gemv(*xk, s, x, T::one());
            }
        }
        z
    }

    fn check_state(&self, x: &DVector<T>) -> Result<()> {
        if x.len() != self.n() {
            return Err(SofError::Dimension(format!("state must have length {}, got {}", self.n(), x.len())));
        }
        Ok(())
    }
}

/// Outcome of [`check_lossless`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosslessReport<T> {
    pub max_violation: T,
    pub pass: bool,
}

/// Samples `num_samples` states uniformly from the unit ball (seeded) and
/// reports the largest `|x^T z(x)|`.
pub fn check_lossless<T: Real>(
    nl: &LosslessNonlinearity<T>,
    num_samples: usize,
    seed: u64,
    tol: T,
) -> LosslessReport<T> {
    let n = nl.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..num_samples.max(1) {
        let x = sample_unit_ball::<T>(n, &mut rng);
        let z = nl.apply(&x);
        worst = worst.max(x.dot(&z).abs());
    }
    LosslessReport { max_violation: worst, pass: worst <= tol }
}

/// Uniform draw from the closed unit ball in `R^n`.
pub(crate) fn sample_unit_ball<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> DVector<T> {
    loop {
        let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = Uniform::new(0.0, 1.0).expect("valid range").sample(rng);
        let r = u.powf(1.0 / n as f64);
        return DVector::from_iterator(n, dir.iter().map(|v| lit::<T>(v / norm * r)));
    }
}

/// Plant plus optional lossless nonlinearity (absent means `z = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDef<T: Real> {
    pub plant: LtiPlant<T>,
    pub nonlinearity: Option<LosslessNonlinearity<T>>,
}

impl<T: Real> SystemDef<T> {
    pub fn new(plant: LtiPlant<T>, nonlinearity: Option<LosslessNonlinearity<T>>) -> Result<Self> {
        if let Some(nl) = &nonlinearity {
            if nl.n() != plant.n() {
                return Err(SofError::Dimension(format!(
                    "nonlinearity has {} states but the plant has {}",
                    nl.n(),
                    plant.n()
                )));
            }
        }
        Ok(Self { plant, nonlinearity })
    }

    pub fn linear(plant: LtiPlant<T>) -> Self {
        Self { plant, nonlinearity: None }
    }

    pub fn n(&self) -> usize {
        self.plant.n()
    }

    /// `(A + B K C) x + z(x)`; with `k = None` the loop is open (`u = 0`).
    pub fn closed_loop_field(&self, k: Option<&DMatrix<T>>, x: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.n() {
            return Err(SofError::Dimension(format!("state must have length {}, got {}", self.n(), x.len())));
        }
        let a_cl = self.plant.closed_loop(k)?;
        Ok(self.field_with(&a_cl, x))
    }

    /// Vector field with a precomputed closed-loop matrix.
    pub(crate) fn field_with(&self, a_cl: &DMatrix<T>, x: &DVector<T>) -> DVector<T> {
        let mut dx = a_cl * x;
        if let Some(nl) = &self.nonlinearity {
            dx += nl.apply(x);
        }
        dx
    }
}
