//! Simulation and stability-margin analysis for the L1 adaptive controller.
//!
//! The crate is split the same way the analysis is:
//!
//! - [`linsys`]: dense LTI numerics (state space, rational transfer functions,
//!   impulse response, L1 gain, Lyapunov and eigenvalue solves).
//! - [`l1ctrl`]: the adaptive controller itself (companion model, projection
//!   adaptive laws, low-pass control law).
//! - [`simulate`]: fixed-step closed-loop engines, with output delay and
//!   loop-gain perturbation, plus the reference and delayed-LTI systems.
//! - [`margins`]: frequency-domain margins of the equivalent LTI loop and the
//!   transient bound evaluators.

pub mod error;
pub mod l1ctrl;
pub mod linsys;
pub mod margins;
pub mod ode;
pub mod simulate;

pub use error::{Error, Result};
