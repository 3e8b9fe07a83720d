//! Closed-loop simulation: the adaptive loop under output delay and loop-gain
//! perturbation, the reference system, the delayed LTI system and the
//! empirical equivalence and margin probes.
//!
//! Every run is serial and a pure function of its [`Scenario`]; sweeps may run
//! scenarios concurrently.

mod delay;
mod engine;
pub mod presets;
mod probe;
mod scenario;
mod signals;
mod trace;

pub use delay::DelayLine;
pub use engine::{
    simulate_closed_loop, simulate_lti_delayed, simulate_reference, verify_equivalence, EquivalenceReport,
};
pub use presets::Profile;
pub use probe::{
    classify, empirical_delay_margin, stability_probe, Classification, DelayBracket, StabilityProbe,
    StabilityVerdict,
};
pub use scenario::{Scenario, DEFAULT_BLOWUP, DEFAULT_ENVELOPE_FACTOR};
pub use signals::Signal;
pub use trace::{fmt_sig, SimTrace, Termination};
