use crate::error::{Error, Result};
use crate::l1ctrl::{ControllerConfig, InitialEstimates};

use super::signals::Signal;

pub const DEFAULT_BLOWUP: f64 = 1e6;
pub const DEFAULT_ENVELOPE_FACTOR: f64 = 50.0;

/// One simulation run: controller design, true plant and exogenous inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ControllerConfig,
    pub true_theta: Vec<f64>,
    pub true_omega: f64,
    pub sigma: Signal,
    pub r: Signal,
    /// Output delay (s); rounded to a multiple of `h`.
    pub tau: f64,
    /// Loop gain `g` inserted in front of the plant input.
    pub gain: f64,
    pub h: f64,
    pub t_end: f64,
    pub x0: Vec<f64>,
    pub init: InitialEstimates,
    /// Keep every k-th grid point in recorded traces.
    pub record_every: usize,
    /// `‖x‖_∞` above this aborts the run as diverged.
    pub blowup: f64,
    /// Stable envelope as a multiple of the no-delay peak.
    pub envelope_factor: f64,
}

impl Scenario {
    pub fn new(cfg: ControllerConfig, true_theta: Vec<f64>, true_omega: f64) -> Self {
        let n = cfg.n();
        Self {
            cfg,
            true_theta,
            true_omega,
            sigma: Signal::Zero,
            r: Signal::Zero,
            tau: 0.0,
            gain: 1.0,
            h: 1e-5,
            t_end: 10.0,
            x0: vec![0.0; n],
            init: InitialEstimates::default(),
            record_every: 1,
            blowup: DEFAULT_BLOWUP,
            envelope_factor: DEFAULT_ENVELOPE_FACTOR,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cfg.n();
        let sets = self.cfg.sets();
        if self.true_theta.len() != n || self.x0.len() != n {
            return Err(Error::Dimension(format!(
                "plant has {n} states but theta has {} and x0 has {} entries",
                self.true_theta.len(),
                self.x0.len()
            )));
        }
        if !sets.contains_theta(&self.true_theta) {
            return Err(Error::InvalidArgument(format!(
                "true theta {:?} outside the declared box",
                self.true_theta
            )));
        }
        if !sets.omega0.contains(self.true_omega) {
            return Err(Error::InvalidArgument(format!(
                "true omega {} outside [{}, {}]",
                self.true_omega, sets.omega0.lo, sets.omega0.hi
            )));
        }
        if !self.sigma.is_finite() || !self.r.is_finite() {
            return Err(Error::InvalidArgument("non-finite signal parameter".into()));
        }
        if self.sigma.is_step() {
            return Err(Error::InvalidArgument("a step is only allowed as a reference".into()));
        }
        let slack = 1e-12;
        if self.sigma.bound() > sets.delta0 * (1.0 + slack) {
            return Err(Error::InvalidArgument(format!(
                "|sigma| up to {} exceeds delta0 = {}",
                self.sigma.bound(),
                sets.delta0
            )));
        }
        if self.sigma.derivative_bound() > sets.d_sigma * (1.0 + slack) {
            return Err(Error::InvalidArgument(format!(
                "|dsigma/dt| up to {} exceeds the declared {}",
                self.sigma.derivative_bound(),
                sets.d_sigma
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::InvalidArgument(format!("gain must be > 0, got {}", self.gain)));
        }
        if !(self.h > 0.0) || !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need h > 0 and t_end > 0, got h = {}, t_end = {}",
                self.h, self.t_end
            )));
        }
        if self.steps() == 0 {
            return Err(Error::InvalidArgument("t_end is shorter than one step".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be >= 1".into()));
        }
        if !(self.blowup > 0.0) || !(self.envelope_factor >= 1.0) {
            return Err(Error::InvalidArgument("invalid classification thresholds".into()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite x0".into()));
        }
        Ok(())
    }

    /// Number of integration steps, `round(t_end/h)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }

    pub fn depth(&self) -> usize {
        (self.tau / self.h).round() as usize
    }

    pub fn tau_eff(&self) -> f64 {
        self.depth() as f64 * self.h
    }

    /// Effective input gain `g·ω` seen by the plant.
    pub fn effective_omega(&self) -> f64 {
        self.gain * self.true_omega
    }
}
