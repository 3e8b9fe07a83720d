//! The scenario file: a TOML document declaring the plant, the controller,
//! the uncertainty sets, a named signal catalog and the run settings.

use std::collections::BTreeMap;
use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use l1margin::l1ctrl::{ControllerConfig, InitialEstimates, Interval, UncertaintySets};
use l1margin::linsys::{FrequencyGrid, RationalTF};
use l1margin::margins::DEFAULT_GRID_DENSITY;
use l1margin::simulate::{Profile, Scenario, Signal, DEFAULT_BLOWUP, DEFAULT_ENVELOPE_FACTOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Profile used when neither `--profile` nor `L1MARGIN_PROFILE` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    pub plant: PlantSection,
    pub truth: TruthSection,
    pub controller: ControllerSection,
    pub sets: SetsSection,
    /// Named signals; `inputs` refers to them by name.
    #[serde(default)]
    pub signals: BTreeMap<String, Signal>,
    #[serde(default)]
    pub inputs: InputsSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    /// Rows of the Hurwitz state matrix `A_m`.
    pub a_m: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub theta: Vec<f64>,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub k: f64,
    /// Adaptation gain; the profile default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_c: Option<f64>,
    /// Rows of the Lyapunov weight `Q` (identity when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    /// `D(s)` numerator, highest power first (`1/s` when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_num: Option<Vec<f64>>,
    /// `D(s)` denominator, highest power first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_den: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsSection {
    pub theta_lo: Vec<f64>,
    pub theta_hi: Vec<f64>,
    /// Bound on `|σ|`.
    pub delta0: f64,
    /// Projection bound for `σ̂`.
    pub delta: f64,
    /// `[ω_l0, ω_u0]`, where the true input gain lies.
    pub omega0: [f64; 2],
    /// `[ω_l, ω_u]`, projection bounds for `ω̂`.
    pub omega: [f64; 2],
    /// Bound on `|dσ/dt|`.
    pub d_sigma: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsSection {
    /// Catalog name of the disturbance `σ(t)`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    /// Catalog name of the reference `r(t)`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s: Option<f64>,
    /// Static loop-gain perturbation `g` on the plant input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Record one trace row every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_hat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_hat: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_wmin_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_wmax_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Samples per `θ` axis in worst-case sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_density: Option<usize>,
}

/// Parses TOML into `T`, naming the offending key path on failure.
pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| anyhow!("{origin}: {e}"))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("{origin}: at key `{path}`: {}", e.into_inner())
    })
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        bail!("{what} must be a non-empty square matrix given as rows");
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Descending-power coefficients to the ascending form used internally.
fn ascending(desc: &[f64]) -> Vec<f64> {
    desc.iter().rev().copied().collect()
}

impl ScenarioFile {
    /// Fills every optional field from `profile`, so the result no longer
    /// depends on it.
    pub fn resolve(&self, profile: Profile) -> Self {
        let mut f = self.clone();
        f.profile = Some(profile);
        f.controller.gamma_c.get_or_insert(profile.gamma_c());
        let n = f.plant.b.len();
        let run = &mut f.run;
        run.tau_s.get_or_insert(0.0);
        run.gain.get_or_insert(1.0);
        run.h_s.get_or_insert(profile.h());
        run.t_end_s.get_or_insert(10.0);
        run.x0.get_or_insert_with(|| vec![0.0; n]);
        let h = run.h_s.unwrap_or(profile.h());
        run.record_every
            .get_or_insert(((1e-3 / h).round() as usize).max(1));
        run.blowup.get_or_insert(DEFAULT_BLOWUP);
        run.envelope_factor.get_or_insert(DEFAULT_ENVELOPE_FACTOR);
        let a = &mut f.analysis;
        a.grid_wmin_rad_s.get_or_insert(1e-3);
        a.grid_wmax_rad_s.get_or_insert(1e4);
        a.grid_points.get_or_insert(2000);
        a.sweep_density.get_or_insert(DEFAULT_GRID_DENSITY);
        f
    }

    pub fn sets(&self) -> UncertaintySets {
        let s = &self.sets;
        UncertaintySets {
            theta_box: s
                .theta_lo
                .iter()
                .zip(&s.theta_hi)
                .map(|(lo, hi)| Interval { lo: *lo, hi: *hi })
                .collect(),
            delta0: s.delta0,
            delta: s.delta,
            omega0: Interval {
                lo: s.omega0[0],
                hi: s.omega0[1],
            },
            omega: Interval {
                lo: s.omega[0],
                hi: s.omega[1],
            },
            d_sigma: s.d_sigma,
        }
    }

    /// Controller design. Call on a resolved file.
    pub fn config(&self) -> Result<ControllerConfig> {
        let p = &self.plant;
        let a_m = matrix(&p.a_m, "plant.a_m")?;
        let n = a_m.nrows();
        if p.b.len() != n || p.c.len() != n {
            bail!("plant.b and plant.c must have {n} entries");
        }
        let s = &self.sets;
        if s.theta_lo.len() != n || s.theta_hi.len() != n {
            bail!("sets.theta_lo and sets.theta_hi must have {n} entries");
        }
        let c = &self.controller;
        let gamma_c = c.gamma_c.context("controller.gamma_c unresolved")?;
        let mut cfg = ControllerConfig::new(
            a_m,
            DVector::from_column_slice(&p.b),
            DVector::from_column_slice(&p.c),
            c.k,
            gamma_c,
            self.sets(),
        )
        .context("controller design")?;
        if let Some(q) = &c.q {
            cfg = cfg.with_q(matrix(q, "controller.q")?).context("controller.q")?;
        }
        match (&c.filter_num, &c.filter_den) {
            (None, None) => {}
            (Some(num), Some(den)) => {
                let d = RationalTF::new(ascending(num), ascending(den)).context("controller filter")?;
                cfg = cfg.with_filter(d).context("controller filter")?;
            }
            _ => bail!("controller.filter_num and controller.filter_den must be given together"),
        }
        Ok(cfg)
    }

    fn signal(&self, name: &Option<String>, what: &str) -> Result<Signal> {
        match name {
            None => Ok(Signal::Zero),
            Some(n) => self
                .signals
                .get(n)
                .copied()
                .ok_or_else(|| anyhow!("inputs.{what} refers to unknown signal {n:?}")),
        }
    }

    /// The simulation scenario. Call on a resolved file.
    pub fn scenario(&self) -> Result<Scenario> {
        let cfg = self.config()?;
        let mut sc = Scenario::new(cfg, self.truth.theta.clone(), self.truth.omega);
        sc.sigma = self.signal(&self.inputs.sigma, "sigma")?;
        sc.r = self.signal(&self.inputs.r, "r")?;
        let run = &self.run;
        let need = |v: Option<f64>, key: &str| v.with_context(|| format!("run.{key} unresolved"));
        sc.tau = need(run.tau_s, "tau_s")?;
        sc.gain = need(run.gain, "gain")?;
        sc.h = need(run.h_s, "h_s")?;
        sc.t_end = need(run.t_end_s, "t_end_s")?;
        sc.x0 = run.x0.clone().context("run.x0 unresolved")?;
        sc.record_every = run.record_every.context("run.record_every unresolved")?;
        sc.blowup = need(run.blowup, "blowup")?;
        sc.envelope_factor = need(run.envelope_factor, "envelope_factor")?;
        sc.init = InitialEstimates {
            theta_hat: self.init.theta_hat.clone(),
            sigma_hat: self.init.sigma_hat.unwrap_or(0.0),
            omega_hat: self.init.omega_hat,
        };
        sc.validate().context("scenario")?;
        Ok(sc)
    }

    /// Frequency grid for margins and Bode data. Call on a resolved file.
    pub fn grid(&self) -> Result<FrequencyGrid> {
        let a = &self.analysis;
        Ok(FrequencyGrid::log_spaced(
            a.grid_wmin_rad_s.context("analysis unresolved")?,
            a.grid_wmax_rad_s.context("analysis unresolved")?,
            a.grid_points.context("analysis unresolved")?,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [plant]
        a_m = [[0.0, 1.0], [-1.0, -1.4]]
        b = [0.0, 1.0]
        c = [1.0, 0.0]
        [truth]
        theta = [2.0, 2.0]
        omega = 1.0
        [controller]
        k = 60.0
        [sets]
        theta_lo = [-10.0, -10.0]
        theta_hi = [10.0, 10.0]
        delta0 = 10.0
        delta = 1000.0
        omega0 = [0.2, 5.0]
        omega = [0.1, 50.0]
        d_sigma = 3.14159
    "#;

    #[test]
    fn minimal_file_resolves() {
        let f: ScenarioFile = parse_toml(MINIMAL, "test").unwrap();
        let r = f.resolve(Profile::Desk);
        let sc = r.scenario().unwrap();
        assert_eq!(sc.h, 1e-5);
        assert_eq!(sc.record_every, 100);
        assert_eq!(sc.cfg.gamma_c(), 1e4);
        // resolving is idempotent and survives a round trip
        assert_eq!(r.resolve(Profile::Full), r.clone().resolve(Profile::Full));
        let text = toml::to_string(&r).unwrap();
        let back: ScenarioFile = parse_toml(&text, "echo").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let text = MINIMAL.replace("[truth]", "[truth]\nbogus = 1");
        let err = parse_toml::<ScenarioFile>(&text, "test").unwrap_err().to_string();
        assert!(err.contains("truth"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }
}
