//! The two-state robot-arm example used throughout the tests and bundled with
//! the command-line tool.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1ctrl::{ControllerConfig, Interval, UncertaintySets};

use super::scenario::Scenario;
use super::signals::Signal;

/// Adaptation-gain and step-size pair. `Full` is the stiff, slow setting;
/// `Desk` keeps runs to about a second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Full,
}

impl Profile {
    pub fn gamma_c(self) -> f64 {
        match self {
            Profile::Desk => 1e4,
            Profile::Full => 5e5,
        }
    }

    pub fn h(self) -> f64 {
        match self {
            Profile::Desk => 1e-5,
            Profile::Full => 1e-6,
        }
    }

    /// Recorded rows are 1 ms apart.
    pub fn record_every(self) -> usize {
        (1e-3 / self.h()).round() as usize
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            other => Err(Error::InvalidArgument(format!(
                "unknown profile {other:?} (expected desk or full)"
            ))),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        })
    }
}

pub const ROBOTARM_K: f64 = 60.0;

pub fn robotarm_a_m() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.4])
}

pub fn robotarm_b() -> DVector<f64> {
    DVector::from_vec(vec![0.0, 1.0])
}

pub fn robotarm_c() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 0.0])
}

/// `Θ = [-10, 10]²`, `Δ₀ = 10`, `Δ = 1000`, `Ω₀ = [0.2, 5]`, `Ω = [0.1, 50]`,
/// `|σ̇| ≤ π`.
pub fn robotarm_sets() -> UncertaintySets {
    UncertaintySets {
        theta_box: vec![Interval { lo: -10.0, hi: 10.0 }; 2],
        delta0: 10.0,
        delta: 1000.0,
        omega0: Interval { lo: 0.2, hi: 5.0 },
        omega: Interval { lo: 0.1, hi: 50.0 },
        d_sigma: PI,
    }
}

pub fn robotarm_config(gamma_c: f64) -> Result<ControllerConfig> {
    ControllerConfig::new(
        robotarm_a_m(),
        robotarm_b(),
        robotarm_c(),
        ROBOTARM_K,
        gamma_c,
        robotarm_sets(),
    )
}

/// `θ = [2, 2]`, `ω = 1`, `σ = sin(πt)`, `r = cos(πt)`, ten seconds.
pub fn robotarm(profile: Profile) -> Scenario {
    let cfg = robotarm_config(profile.gamma_c()).expect("robot-arm data is valid");
    let mut sc = Scenario::new(cfg, vec![2.0, 2.0], 1.0);
    sc.sigma = Signal::Sinusoid {
        amplitude: 1.0,
        freq_rad_s: PI,
        phase_rad: 0.0,
    };
    sc.r = Signal::Sinusoid {
        amplitude: 1.0,
        freq_rad_s: PI,
        phase_rad: FRAC_PI_2,
    };
    sc.h = profile.h();
    sc.t_end = 10.0;
    sc.record_every = profile.record_every();
    sc
}
