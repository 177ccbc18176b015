//! Static output-feedback (SOF) synthesis and certification for linear
//! time-invariant plants in feedback with lossless nonlinearities.
//!
//! The plant is
//!
//! ```text
//! x' = A x + B u + z,   y = C x,   z = N(x) x,   <x, z> = 0
//! ```
//!
//! and the controller is a static gain `u = K y`. Because the nonlinearity
//! neither creates nor dissipates energy, the quadratic-constraint Lyapunov
//! inequality collapses to the convex condition
//!
//! ```text
//! (A + B K C) + (A + B K C)^T + eps I <= 0
//! ```
//!
//! with `P = I` as the Lyapunov certificate. This crate provides:
//!
//! * [`model`]: plant, skew-parameterized nonlinearity and vector fields;
//! * [`feasibility`]: null-space tests deciding whether any gain exists;
//! * [`synthesis`]: subgradient minimization of the top eigenvalue of the
//!   symmetrized closed loop;
//! * [`certify`]: verification of the reduced inequality and of the full
//!   block inequality with the multiplier folded in;
//! * [`sim`]: fixed-step RK4 simulation and phase-portrait batches;
//! * [`io`]: JSON and CSV interchange formats.
//!
//! All numerical code is generic over the scalar type through [`Real`];
//! the aliases at the crate root fix it to `f64` (or `f32`).

pub mod certify;
pub mod error;
pub mod feasibility;
pub mod io;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod sim;
pub mod synthesis;

pub use error::{Result, SofError};
pub use scalar::Real;

pub use certify::{assemble_bmi, decay_check, verify_open_loop, verify_sof, Certificate};
pub use feasibility::{projection_conditions, projection_conditions_with_margin, FeasibilityReport};
pub use linalg::{lambda_max_sym, null_space};
pub use model::{check_lossless, LosslessNonlinearity, LosslessReport, LtiPlant, SystemDef};
pub use sim::{energy_rate_residual, integrate, phase_portrait, GridPattern, GridSpec, IntegratorOptions, Trajectory};
pub use synthesis::{
    closed_loop_sym, optimal_decay, subgradient, synthesize, DecayBound, SofGain, StepRule, SynthesisOptions,
    SynthesisResult, SynthesisStatus,
};

/// Dense matrix with `f64` entries.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense vector with `f64` entries.
pub type Vector = nalgebra::DVector<f64>;

pub type Plant = LtiPlant<f64>;
pub type Nonlinearity = LosslessNonlinearity<f64>;
pub type System = SystemDef<f64>;
pub type Gain = SofGain<f64>;
pub type Options = SynthesisOptions<f64>;
pub type Outcome = SynthesisResult<f64>;
pub type Report = FeasibilityReport<f64>;
pub type Cert = Certificate<f64>;
pub type Traj = Trajectory<f64>;
pub type Grid = GridSpec<f64>;

/// Single-precision variants, mostly useful for cross-checking rounding
/// sensitivity of a result.
pub mod f32 {
    pub type Plant = super::LtiPlant<f32>;
    pub type Nonlinearity = super::LosslessNonlinearity<f32>;
    pub type System = super::SystemDef<f32>;
    pub type Gain = super::SofGain<f32>;
    pub type Options = super::SynthesisOptions<f32>;
    pub type Outcome = super::SynthesisResult<f32>;
    pub type Report = super::FeasibilityReport<f32>;
    pub type Traj = super::Trajectory<f32>;
}
