//! Gain synthesis by minimizing the top eigenvalue of the symmetrized
//! closed loop.
//!
//! With `P = I` the certificate condition is
//! `M(K) = (A + B K C) + (A + B K C)^T <= -eps I`, so a gain exists iff
//! `f(K) = lambda_max(M(K))` can be pushed to `-eps`. `M` is affine in `K`,
//! which makes `f` convex; it is nonsmooth where the top eigenvalue is
//! repeated. A unit top eigenvector `u` gives the subgradient
//! `2 (B^T u)(C u)^T`.
//!
//! [`synthesize`] runs Polyak-step subgradient descent toward the level
//! `-eps - delta` starting at `K = 0`, then from seeded random restarts.
//! [`optimal_decay`] keeps going past the first certificate with an
//! adaptive level to estimate the largest rate certified by `P = I`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SofError};
use crate::feasibility::{projection_conditions, FeasibilityReport};
use crate::linalg::{spectral_norm, top_eigenpair};
use crate::model::LtiPlant;
use crate::scalar::{lit, Real};

/// Best-so-far values within this distance count as ties.
const TIE_TOL: f64 = 1e-12;
/// Iterations without `tol` improvement before a run is abandoned.
const STALL_WINDOW: usize = 500;
/// Non-improving Polyak iterations before the target offset is halved.
const RAISE_WINDOW: usize = 50;
/// `f` below this value is taken as unbounded below.
const UNBOUNDED_LEVEL: f64 = -1e6;

/// Static output-feedback gain with its achieved eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SofGain<T: Real> {
    /// `q x p` gain.
    pub k: DMatrix<T>,
    /// `lambda_max((A + B K C) + (A + B K C)^T)`.
    pub achieved_lambda: T,
    /// Decay-rate target the gain was synthesized for.
    pub epsilon: T,
}

impl<T: Real> SofGain<T> {
    pub fn certified(&self) -> bool {
        self.achieved_lambda <= -self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule<T> {
    /// Polyak step `(f(K) - f_target) / ||g||^2` with
    /// `f_target = -eps - offset`. `None` uses `offset = 0.1 eps + 0.01`.
    Polyak { offset: Option<T> },
    /// Normalized diminishing step `initial / sqrt(k + 1)` along `-g/||g||`.
    Diminishing { initial: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions<T> {
    /// Decay-rate target; the certificate requires `f(K) <= -epsilon`.
    pub epsilon: T,
    /// Iteration budget per start.
    pub max_iters: usize,
    /// Random starts tried after `K = 0`.
    pub num_restarts: usize,
    pub seed: u64,
    pub step_rule: StepRule<T>,
    /// Stagnation tolerance on best-so-far improvement.
    pub tol: T,
}

impl<T: Real> Default for SynthesisOptions<T> {
    fn default() -> Self {
        Self {
            epsilon: lit(1e-6),
            max_iters: 5000,
            num_restarts: 8,
            seed: 0,
            step_rule: StepRule::Polyak { offset: None },
            tol: lit(1e-10),
        }
    }
}

impl<T: Real> SynthesisOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > T::zero()) {
            return Err(SofError::InvalidOption(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(SofError::InvalidOption("max_iters must be at least 1".into()));
        }
        if self.num_restarts == 0 {
            return Err(SofError::InvalidOption("num_restarts must be at least 1".into()));
        }
        if !(self.tol.is_finite() && self.tol >= T::zero()) {
            return Err(SofError::InvalidOption(format!("tol must be non-negative, got {}", self.tol)));
        }
        match self.step_rule {
            StepRule::Polyak { offset: Some(d) } if !(d.is_finite() && d > T::zero()) => {
                Err(SofError::InvalidOption(format!("Polyak offset must be positive, got {d}")))
            }
            StepRule::Diminishing { initial } if !(initial.is_finite() && initial > T::zero()) => {
                Err(SofError::InvalidOption(format!("initial step must be positive, got {initial}")))
            }
            _ => Ok(()),
        }
    }

    fn polyak_offset(&self) -> T {
        match self.step_rule {
            StepRule::Polyak { offset: Some(d) } => d,
            _ => self.epsilon * lit(0.1) + lit(0.01),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisStatus {
    Certified,
    Infeasible,
    MaxIterations,
}

impl SynthesisStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SynthesisStatus::Certified => "Certified",
            SynthesisStatus::Infeasible => "Infeasible",
            SynthesisStatus::MaxIterations => "MaxIterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult<T: Real> {
    pub status: SynthesisStatus,
    /// Certified gain, or the best gain found when the budget ran out.
    pub gain: Option<SofGain<T>>,
    /// Subgradient updates performed over all starts.
    pub iterations_used: usize,
    pub feasibility: FeasibilityReport<T>,
    /// Best objective value seen after each evaluation, across all starts.
    pub best_history: Vec<T>,
}

/// `M(K) = (A + B K C) + (A + B K C)^T`, exactly symmetric.
pub fn closed_loop_sym<T: Real>(plant: &LtiPlant<T>, k: &DMatrix<T>) -> Result<DMatrix<T>> {
    let g = plant.closed_loop(Some(k))?;
    Ok(&g + g.transpose())
}

/// Objective `f(K) = lambda_max(M(K))` and a unit top eigenvector.
fn objective<T: Real>(plant: &LtiPlant<T>, k: &DMatrix<T>) -> (T, nalgebra::DVector<T>) {
    let g = plant.a() + plant.b() * k * plant.c();
    top_eigenpair(&(&g + g.transpose()))
}

fn subgradient_from<T: Real>(plant: &LtiPlant<T>, u: &nalgebra::DVector<T>) -> DMatrix<T> {
    let bu = plant.b().transpose() * u;
    let cu = plant.c() * u;
    (bu * cu.transpose()) * lit::<T>(2.0)
}

/// Subgradient `2 (B^T u)(C u)^T` of `K -> lambda_max(M(K))`, where `u` is a
/// unit top eigenvector of `M(K)`. It is the gradient whenever the top
/// eigenvalue is simple.
pub fn subgradient<T: Real>(plant: &LtiPlant<T>, k: &DMatrix<T>) -> Result<DMatrix<T>> {
    plant.check_gain(k)?;
    let (_, u) = objective(plant, k);
    Ok(subgradient_from(plant, &u))
}

struct RunOutcome<T: Real> {
    best_k: DMatrix<T>,
    best_f: T,
    iterations: usize,
    certified: bool,
}

fn descend<T: Real>(
    plant: &LtiPlant<T>,
    k0: DMatrix<T>,
    opts: &SynthesisOptions<T>,
    history: &mut Vec<T>,
) -> RunOutcome<T> {
    let mut offset = opts.polyak_offset();
    let mut k = k0;
    let (mut f, mut u) = objective(plant, &k);
    let mut best_k = k.clone();
    let mut best_f = f;
    let mut last_progress = best_f;
    let mut since_progress = 0;
    let mut since_improved = 0;
    let mut global_best = history.last().copied().unwrap_or(f).min(f);
    history.push(global_best);

    let mut it = 0;
    while best_f > -opts.epsilon && it < opts.max_iters {
        let g = subgradient_from(plant, &u);
        let g2 = g.norm_squared();
        if g2 == T::zero() {
            break;
        }
        let step = match opts.step_rule {
            StepRule::Polyak { .. } => (f - (-opts.epsilon - offset)) / g2,
            StepRule::Diminishing { initial } => initial / (lit::<T>(it as f64 + 1.0).sqrt() * g2.sqrt()),
        };
        k -= &g * step;
        it += 1;
        (f, u) = objective(plant, &k);
        if f < best_f {
            best_f = f;
            best_k = k.clone();
            since_improved = 0;
        } else {
            since_improved += 1;
            // A level below the optimum makes Polyak steps overshoot; pull the
            // level up toward -eps and resume from the best point.
            if since_improved >= RAISE_WINDOW {
                since_improved = 0;
                offset *= lit(0.5);
                k = best_k.clone();
                (f, u) = objective(plant, &k);
            }
        }
        global_best = global_best.min(f);
        history.push(global_best);

        if last_progress - best_f > opts.tol {
            last_progress = best_f;
            since_progress = 0;
        } else {
            since_progress += 1;
            if since_progress >= STALL_WINDOW {
                break;
            }
        }
    }
    RunOutcome { best_k, best_f, iterations: it, certified: best_f <= -opts.epsilon }
}

/// Random starting gains: standard normal entries scaled by
/// `1 / (||B|| ||C||)`.
fn restart_gains<T: Real>(plant: &LtiPlant<T>, opts: &SynthesisOptions<T>) -> Vec<DMatrix<T>> {
    let scale = spectral_norm(plant.b()) * spectral_norm(plant.c());
    let scale = if scale > T::zero() { T::one() / scale } else { T::one() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.num_restarts)
        .map(|_| {
            DMatrix::from_fn(plant.q(), plant.p(), |_, _| {
                let v: f64 = StandardNormal.sample(&mut rng);
                lit::<T>(v) * scale
            })
        })
        .collect()
}

/// Searches for a gain with `lambda_max(M(K)) <= -epsilon`.
///
/// Returns `Infeasible` without iterating when the projection conditions
/// fail. Otherwise starts from `K = 0` and then from `num_restarts` random
/// gains, stopping at the first certified gain. If none certifies, the
/// lowest `f` wins (ties within `1e-12` go to the earlier start) and the
/// status is `MaxIterations`.
pub fn synthesize<T: Real>(plant: &LtiPlant<T>, opts: &SynthesisOptions<T>) -> Result<SynthesisResult<T>> {
    opts.validate()?;
    let feasibility = projection_conditions(plant);
    if !feasibility.feasible {
        return Ok(SynthesisResult {
            status: SynthesisStatus::Infeasible,
            gain: None,
            iterations_used: 0,
            feasibility,
            best_history: Vec::new(),
        });
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut best: Option<RunOutcome<T>> = None;
    let starts = std::iter::once(DMatrix::zeros(plant.q(), plant.p())).chain(restart_gains(plant, opts));
    for k0 in starts {
        let run = descend(plant, k0, opts, &mut history);
        iterations += run.iterations;
        let certified = run.certified;
        let better = match &best {
            None => true,
            Some(b) => run.best_f < b.best_f - lit(TIE_TOL),
        };
        if better {
            best = Some(run);
        }
        if certified {
            break;
        }
    }

    let best = best.expect("at least one start");
    let gain = SofGain { k: best.best_k, achieved_lambda: best.best_f, epsilon: opts.epsilon };
    let status = if gain.certified() { SynthesisStatus::Certified } else { SynthesisStatus::MaxIterations };
    Ok(SynthesisResult { status, gain: Some(gain), iterations_used: iterations, feasibility, best_history: history })
}

/// Largest decay rate certified with `P = I`, and a gain attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayBound<T: Real> {
    pub k: DMatrix<T>,
    /// `-f(K)`; `+inf` when `f` is unbounded below.
    pub epsilon_star: T,
    pub unbounded: bool,
    pub iterations: usize,
}

fn level_descent<T: Real>(plant: &LtiPlant<T>, k0: DMatrix<T>, opts: &SynthesisOptions<T>) -> RunOutcome<T> {
    const STALL: usize = 25;
    let unbounded = lit::<T>(UNBOUNDED_LEVEL);
    let mut k = k0;
    let (mut f, mut u) = objective(plant, &k);
    let mut best_k = k.clone();
    let mut best_f = f;
    let mut delta = lit::<T>(0.1) * (T::one() + f.abs());
    let mut stall = 0;
    let mut it = 0;

    while it < opts.max_iters && best_f > unbounded {
        let g = subgradient_from(plant, &u);
        let g2 = g.norm_squared();
        if g2 == T::zero() {
            break;
        }
        let level = best_f - delta;
        k -= &g * ((f - level) / g2);
        it += 1;
        (f, u) = objective(plant, &k);

        if f <= best_f - delta * lit(0.5) {
            best_f = f;
            best_k = k.clone();
            delta *= lit(2.0);
            stall = 0;
        } else {
            if f < best_f {
                best_f = f;
                best_k = k.clone();
            }
            stall += 1;
            if stall >= STALL {
                delta *= lit(0.5);
                stall = 0;
                k = best_k.clone();
                (f, u) = objective(plant, &k);
            }
        }
        if delta <= opts.tol * (T::one() + best_f.abs()) {
            break;
        }
    }
    RunOutcome { best_k, best_f, iterations: it, certified: false }
}

/// Runs the minimization to stagnation and reports `epsilon_star = -f(K)`.
///
/// The estimate comes from a nonsmooth first-order method and may be
/// conservative. When `f` drops below `-1e6` the problem is treated as
/// unbounded and `epsilon_star` is `+inf`.
pub fn optimal_decay<T: Real>(plant: &LtiPlant<T>, opts: &SynthesisOptions<T>) -> Result<DecayBound<T>> {
    opts.validate()?;
    if !projection_conditions(plant).feasible {
        return Err(SofError::Infeasible);
    }
    let unbounded = lit::<T>(UNBOUNDED_LEVEL);
    let mut best: Option<RunOutcome<T>> = None;
    let mut iterations = 0;
    let starts = std::iter::once(DMatrix::zeros(plant.q(), plant.p())).chain(restart_gains(plant, opts));
    for k0 in starts {
        let run = level_descent(plant, k0, opts);
        iterations += run.iterations;
        let stop = run.best_f <= unbounded;
        let better = match &best {
            None => true,
            Some(b) => run.best_f < b.best_f - lit(TIE_TOL),
        };
        if better {
            best = Some(run);
        }
        if stop {
            break;
        }
    }
    let best = best.expect("at least one start");
    let is_unbounded = best.best_f <= unbounded;
    let epsilon_star = if is_unbounded { T::one() / T::zero() } else { -best.best_f };
    Ok(DecayBound { k: best.best_k, epsilon_star, unbounded: is_unbounded, iterations })
}
