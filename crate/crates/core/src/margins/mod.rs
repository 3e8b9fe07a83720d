//! Frequency-domain margins of the equivalent LTI loop and the transient
//! bound evaluators.
//!
//! The LTI loop is `H_o(s) = C(s)(1 + θᵀH̄(s))/(1 - C(s))`; its phase margin
//! over crossover gives the time-delay margin `𝒯 = pm/ω_c` that the adaptive
//! loop inherits.

mod bounds;
mod loop_tf;
mod phase;
mod report;
mod sweep;

pub use bounds::{
    epsilon_c_eval, find_c_o, theta_m_lemma5, transient_bounds, BoundReport, DelayBoundInputs, EpsilonC,
};
pub use loop_tf::{
    check_l1_condition, checked_loop_filter, g_l1, g_rows, omega_samples, open_loop_ho, open_loop_ho_direct,
    L1Condition,
};
pub use phase::{bode, phase_margin, phase_margin_extending, time_delay_margin, BodePoint, Crossing, PhaseMargin};
pub use report::{margin_report, MarginReport};
pub use sweep::{
    gain_margin_interval, worst_case_delay_margin, VertexOutcome, VertexRow, WorstCase, DEFAULT_GRID_DENSITY,
};
