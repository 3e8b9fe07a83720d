use serde::{Deserialize, Serialize};

/// Exogenous signal catalog for disturbances `σ(t)` and references `r(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · sin(freq·t + phase)`
    Sinusoid {
        amplitude: f64,
        freq_rad_s: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// `amplitude` for `t >= at`, zero before. Only valid as a reference.
    Step {
        amplitude: f64,
        #[serde(default)]
        at_s: f64,
    },
}

impl Default for Signal {
    fn default() -> Self {
        Signal::Zero
    }
}

impl Signal {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Signal::Zero => 0.0,
            Signal::Constant { value } => value,
            Signal::Sinusoid {
                amplitude,
                freq_rad_s,
                phase_rad,
            } => amplitude * (freq_rad_s * t + phase_rad).sin(),
            Signal::Step { amplitude, at_s } => {
                if t >= at_s {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    /// Time derivative (zero almost everywhere for a step).
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Signal::Sinusoid {
                amplitude,
                freq_rad_s,
                phase_rad,
            } => amplitude * freq_rad_s * (freq_rad_s * t + phase_rad).cos(),
            _ => 0.0,
        }
    }

    /// `sup_t |s(t)|`
    pub fn bound(&self) -> f64 {
        match *self {
            Signal::Zero => 0.0,
            Signal::Constant { value } => value.abs(),
            Signal::Sinusoid { amplitude, .. } => amplitude.abs(),
            Signal::Step { amplitude, .. } => amplitude.abs(),
        }
    }

    /// `sup_t |ṡ(t)|`; infinite for a step.
    pub fn derivative_bound(&self) -> f64 {
        match *self {
            Signal::Sinusoid {
                amplitude,
                freq_rad_s,
                ..
            } => (amplitude * freq_rad_s).abs(),
            Signal::Step { amplitude, .. } if amplitude != 0.0 => f64::INFINITY,
            _ => 0.0,
        }
    }

    pub fn is_step(&self) -> bool {
        matches!(self, Signal::Step { .. })
    }

    pub(crate) fn is_finite(&self) -> bool {
        match *self {
            Signal::Zero => true,
            Signal::Constant { value } => value.is_finite(),
            Signal::Sinusoid {
                amplitude,
                freq_rad_s,
                phase_rad,
            } => amplitude.is_finite() && freq_rad_s.is_finite() && phase_rad.is_finite(),
            Signal::Step { amplitude, at_s } => amplitude.is_finite() && at_s.is_finite(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn cosine_via_phase() {
        let r = Signal::Sinusoid {
            amplitude: 1.0,
            freq_rad_s: PI,
            phase_rad: FRAC_PI_2,
        };
        for t in [0.0, 0.3, 1.7] {
            assert!((r.value(t) - (PI * t).cos()).abs() < 1e-14);
            assert!((r.derivative(t) + PI * (PI * t).sin()).abs() < 1e-13);
        }
        assert_eq!(r.derivative_bound(), PI);
    }

    #[test]
    fn step_is_right_continuous() {
        let s = Signal::Step { amplitude: 2.0, at_s: 1.0 };
        assert_eq!((s.value(0.99), s.value(1.0)), (0.0, 2.0));
        assert!(s.derivative_bound().is_infinite());
        assert!(s.is_step());
    }
}
