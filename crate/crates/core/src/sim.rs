//! Fixed-step RK4 simulation of the open or closed loop and
//! phase-portrait batches.

// `!(x > y)` forms also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Result, SofError};
use crate::model::SystemDef;
use crate::scalar::{from_usize, lit, Real};

/// Sampled state trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    pub norms: Vec<T>,
    /// Set when the state reached the escape radius or stopped being finite.
    pub diverged: bool,
    /// Time of the first escaped sample; integration stops there.
    pub escape_time: Option<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&DVector<T>> {
        self.states.last()
    }

    pub fn final_norm(&self) -> Option<T> {
        self.norms.last().copied()
    }

    pub fn max_norm(&self) -> T {
        self.norms.iter().fold(T::zero(), |acc, v| acc.max(*v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions<T> {
    pub dt: T,
    pub t_final: T,
    pub escape_radius: T,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self { dt: lit(1e-3), t_final: lit(20.0), escape_radius: lit(50.0) }
    }
}

impl<T: Real> IntegratorOptions<T> {
    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > T::zero()) {
            return Err(SofError::InvalidOption(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(SofError::InvalidOption(format!(
                "t_final must be at least dt, got {} with dt {}",
                self.t_final, self.dt
            )));
        }
        if !(self.escape_radius > T::zero()) {
            return Err(SofError::InvalidOption(format!("escape radius must be positive, got {}", self.escape_radius)));
        }
        Ok(())
    }
}

/// Integrates `x' = (A + B K C) x + z(x)` from `x0` with classic RK4 at a
/// fixed step, recording every step. The last step is shortened so the
/// final sample lands on `t_final`.
pub fn integrate<T: Real>(
    sys: &SystemDef<T>,
    k: Option<&DMatrix<T>>,
    x0: &DVector<T>,
    opts: &IntegratorOptions<T>,
) -> Result<Trajectory<T>> {
    opts.validate()?;
    if x0.len() != sys.n() {
        return Err(SofError::Dimension(format!("initial state must have length {}, got {}", sys.n(), x0.len())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SofError::InvalidInput("initial state must be finite".into()));
    }
    let x0_norm = x0.norm();
    if !(opts.escape_radius > x0_norm) {
        return Err(SofError::InvalidOption(format!(
            "escape radius {} must exceed the initial norm {}",
            opts.escape_radius, x0_norm
        )));
    }
    let a_cl = sys.plant.closed_loop(k)?;
    let f = |x: &DVector<T>| sys.field_with(&a_cl, x);

    let ratio = opts.t_final / opts.dt;
    let steps = {
        let r = ratio.round();
        // t_final that is a multiple of dt up to rounding keeps uniform steps
        let s = if (ratio - r).abs() <= lit::<T>(1e-9) * (T::one() + r) { r } else { ratio.ceil() };
        s.to_usize().unwrap_or(0)
    };

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        norms: Vec::with_capacity(steps + 1),
        diverged: false,
        escape_time: None,
    };
    traj.times.push(T::zero());
    traj.states.push(x0.clone());
    traj.norms.push(x0_norm);

    let half = lit::<T>(0.5);
    let sixth = T::one() / lit(6.0);
    let two = lit::<T>(2.0);
    let mut x = x0.clone();
    let mut t_prev = T::zero();
    for i in 1..=steps {
        let t = if i == steps { opts.t_final } else { from_usize::<T>(i) * opts.dt };
        let h = t - t_prev;
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (h * half)));
        let k3 = f(&(&x + &k2 * (h * half)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * two + k3 * two + k4) * (h * sixth);
        let norm = x.norm();
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.norms.push(norm);
        if !norm.is_finite() || norm >= opts.escape_radius {
            traj.diverged = true;
            traj.escape_time = Some(t);
            break;
        }
        t_prev = t;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPattern<T> {
    /// `count` points evenly spaced on the circle of `radius` in the
    /// `(x1, x2)` plane, starting on the positive `x1` axis.
    Circle { radius: T, count: usize },
    /// `nx x ny` lattice over `[-bound, bound]^2` in the `(x1, x2)` plane,
    /// enumerated with `x1` varying slowest.
    Box { bound: T, nx: usize, ny: usize },
}

/// Initial-condition set for a phase portrait. Remaining states are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub pattern: GridPattern<T>,
    /// When set, each point is moved by up to 1% of the grid scale per
    /// coordinate, reproducibly.
    pub jitter_seed: Option<u64>,
}

impl<T: Real> GridSpec<T> {
    pub fn circle(radius: T, count: usize) -> Self {
        Self { pattern: GridPattern::Circle { radius, count }, jitter_seed: None }
    }

    pub fn box_grid(bound: T, nx: usize, ny: usize) -> Self {
        Self { pattern: GridPattern::Box { bound, nx, ny }, jitter_seed: None }
    }

    pub fn count(&self) -> usize {
        match self.pattern {
            GridPattern::Circle { count, .. } => count,
            GridPattern::Box { nx, ny, .. } => nx * ny,
        }
    }

    fn scale(&self) -> T {
        match self.pattern {
            GridPattern::Circle { radius, .. } => radius,
            GridPattern::Box { bound, .. } => bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count() == 0 {
            return Err(SofError::InvalidOption("grid must contain at least one point".into()));
        }
        let s = self.scale();
        if !(s.is_finite() && s >= T::zero()) {
            return Err(SofError::InvalidOption(format!("grid radius or bound must be non-negative, got {s}")));
        }
        Ok(())
    }

    /// Initial conditions in enumeration order.
    pub fn initial_conditions(&self, n: usize) -> Result<Vec<DVector<T>>> {
        self.validate()?;
        if n < 2 {
            return Err(SofError::Dimension("phase-portrait grids need at least two states".into()));
        }
        let planar: Vec<(T, T)> = match self.pattern {
            GridPattern::Circle { radius, count } => (0..count)
                .map(|i| {
                    let theta = T::two_pi() * from_usize::<T>(i) / from_usize::<T>(count);
                    (radius * theta.cos(), radius * theta.sin())
                })
                .collect(),
            GridPattern::Box { bound, nx, ny } => {
                let axis = |m: usize, i: usize| {
                    if m == 1 {
                        T::zero()
                    } else {
                        -bound + lit::<T>(2.0) * bound * from_usize::<T>(i) / from_usize::<T>(m - 1)
                    }
                };
                (0..nx).flat_map(|i| (0..ny).map(move |j| (axis(nx, i), axis(ny, j)))).collect()
            }
        };
        let mut rng = self.jitter_seed.map(ChaCha8Rng::seed_from_u64);
        let unit = Uniform::new_inclusive(-1.0f64, 1.0).expect("valid range");
        let amp = self.scale() * lit(0.01);
        Ok(planar
            .into_iter()
            .map(|(a, b)| {
                let mut x = DVector::zeros(n);
                x[0] = a;
                x[1] = b;
                if let Some(rng) = rng.as_mut() {
                    x[0] += amp * lit(unit.sample(rng));
                    x[1] += amp * lit(unit.sample(rng));
                }
                x
            })
            .collect())
    }
}

/// One trajectory per grid point, in enumeration order. Divergence of one
/// trajectory is recorded on it and does not stop the batch.
pub fn phase_portrait<T: Real>(
    sys: &SystemDef<T>,
    k: Option<&DMatrix<T>>,
    grid: &GridSpec<T>,
    opts: &IntegratorOptions<T>,
) -> Result<Vec<Trajectory<T>>> {
    let starts = grid.initial_conditions(sys.n())?;
    opts.validate()?;
    sys.plant.closed_loop(k)?;
    if let Some(x) = starts.iter().find(|x| !(x.norm() < opts.escape_radius)) {
        return Err(SofError::InvalidOption(format!(
            "grid point with norm {} is outside the escape radius {}",
            x.norm(),
            opts.escape_radius
        )));
    }
    starts.iter().map(|x0| integrate(sys, k, x0, opts)).collect()
}

/// Largest mismatch between the centered difference of `||x||^2` and the
/// quadratic form `x^T (G + G^T) x`, `G = A + B K C`, over interior samples.
/// The lossless term does not enter the energy rate, so the residual only
/// measures integration and differencing error.
pub fn energy_rate_residual<T: Real>(sys: &SystemDef<T>, k: Option<&DMatrix<T>>, traj: &Trajectory<T>) -> Result<T> {
    if traj.len() < 3 {
        return Err(SofError::InvalidInput(format!(
            "energy-rate residual needs at least 3 samples, got {}",
            traj.len()
        )));
    }
    let g = sys.plant.closed_loop(k)?;
    let m = &g + g.transpose();
    let mut worst = T::zero();
    for i in 1..traj.len() - 1 {
        let dt = traj.times[i + 1] - traj.times[i - 1];
        let fd = (traj.states[i + 1].norm_squared() - traj.states[i - 1].norm_squared()) / dt;
        let x = &traj.states[i];
        let q = x.dot(&(&m * x));
        worst = worst.max((fd - q).abs());
    }
    Ok(worst)
}
