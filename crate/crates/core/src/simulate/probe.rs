use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::engine::run_closed_loop;
use super::scenario::Scenario;
use super::trace::{SimTrace, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Diverged,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::Diverged => "diverged",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub classification: Classification,
    /// Largest `‖x‖_∞` reached.
    pub peak: f64,
    /// Largest `‖x‖_∞` of the same scenario without delay.
    pub baseline_peak: f64,
    /// Time the run was aborted for divergence.
    pub divergence_time: Option<f64>,
    pub tau_eff: f64,
    /// Why the run ended early, when it did.
    pub note: Option<String>,
}

/// Classifies a finished run against the no-delay `baseline_peak`.
///
/// - blow-up of `‖x‖_∞` → diverged;
/// - a step-guard trip with the state already outside the stable envelope →
///   diverged (the estimator cannot follow a state that is running away);
///   inside the envelope → inconclusive;
/// - a complete run inside the envelope → stable, outside → inconclusive.
pub fn classify(sc: &Scenario, trace: &SimTrace, baseline_peak: f64) -> StabilityVerdict {
    let envelope = sc.envelope_factor * baseline_peak.max(f64::MIN_POSITIVE);
    let (classification, divergence_time, note) = match &trace.termination {
        Termination::BlowUp { t } => (
            Classification::Diverged,
            Some(*t),
            Some(format!("|x| exceeded {} at t = {t}", sc.blowup)),
        ),
        Termination::StepGuard { t, message } => {
            if trace.peak_x > envelope {
                (Classification::Diverged, Some(*t), Some(message.clone()))
            } else {
                (Classification::Inconclusive, None, Some(message.clone()))
            }
        }
        Termination::Completed => {
            if trace.peak_x <= envelope {
                (Classification::Stable, None, None)
            } else {
                (
                    Classification::Inconclusive,
                    None,
                    Some(format!("peak {} outside the stable envelope {envelope}", trace.peak_x)),
                )
            }
        }
    };
    StabilityVerdict {
        classification,
        peak: trace.peak_x,
        baseline_peak,
        divergence_time,
        tau_eff: trace.tau_eff,
        note,
    }
}

/// Reusable prober: runs the no-delay baseline once, then classifies delayed
/// runs of the same scenario.
#[derive(Debug, Clone)]
pub struct StabilityProbe {
    sc: Scenario,
    baseline_peak: f64,
}

impl StabilityProbe {
    pub fn new(sc: &Scenario) -> Result<Self> {
        let base = sc.clone().with_tau(0.0);
        let trace = run_closed_loop(&base, false)?;
        if !trace.completed() {
            return Err(Error::Precondition(format!(
                "the no-delay baseline does not complete: {:?}",
                trace.termination
            )));
        }
        Ok(Self {
            sc: sc.clone(),
            baseline_peak: trace.peak_x,
        })
    }

    pub fn baseline_peak(&self) -> f64 {
        self.baseline_peak
    }

    pub fn scenario(&self) -> &Scenario {
        &self.sc
    }

    pub fn probe(&self, tau: f64) -> Result<StabilityVerdict> {
        let sc = self.sc.clone().with_tau(tau);
        let trace = run_closed_loop(&sc, false)?;
        Ok(classify(&sc, &trace, self.baseline_peak))
    }

    fn probe_depth(&self, depth: usize) -> Result<StabilityVerdict> {
        self.probe(depth as f64 * self.sc.h)
    }
}

/// Runs the scenario with delay `tau` and classifies it against the
/// no-delay run.
pub fn stability_probe(sc: &Scenario, tau: f64) -> Result<StabilityVerdict> {
    StabilityProbe::new(sc)?.probe(tau)
}

/// Bracket `[stable, unstable]` on the delay, both multiples of `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayBracket {
    /// Largest delay verified stable.
    pub stable: f64,
    /// Smallest delay seen not stable (diverged or inconclusive).
    pub unstable: f64,
    /// Every probe made, in order: `(τ_eff, classification)`.
    pub probes: Vec<(f64, Classification)>,
}

/// Bisects the delay between 0 and `tau_hi` over grid multiples. Anything
/// not classified stable counts as unstable, so the lower end is conservative.
pub fn empirical_delay_margin(sc: &Scenario, tau_hi: f64, iters: usize) -> Result<DelayBracket> {
    let prober = StabilityProbe::new(sc)?;
    let mut probes = Vec::new();
    let v0 = prober.probe(0.0)?;
    probes.push((0.0, v0.classification));
    if v0.classification != Classification::Stable {
        return Err(Error::Precondition(format!(
            "the scenario is not stable without delay ({})",
            v0.classification
        )));
    }
    let mut hi = (tau_hi / sc.h).round() as usize;
    let vh = prober.probe_depth(hi)?;
    probes.push((vh.tau_eff, vh.classification));
    if vh.classification != Classification::Diverged {
        return Err(Error::Precondition(format!(
            "tau_hi = {tau_hi} does not diverge ({})",
            vh.classification
        )));
    }
    let mut lo = 0usize;
    for _ in 0..iters {
        if hi - lo <= 1 {
            break;
        }
        let mid = lo + (hi - lo) / 2;
        let v = prober.probe_depth(mid)?;
        probes.push((v.tau_eff, v.classification));
        if v.classification == Classification::Stable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DelayBracket {
        stable: lo as f64 * sc.h,
        unstable: hi as f64 * sc.h,
        probes,
    })
}
