//! Run manifests: everything needed to replay a command bit-identically.
//!
//! A manifest records the fully resolved scenario (every profile default
//! filled in) and the command-line options in effect. Passing a manifest in
//! place of a scenario file re-runs the same computation; options given on
//! the command line override the recorded ones.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use l1margin::simulate::Profile;

use crate::scenario_file::{parse_toml, ScenarioFile};

pub const TOOL: &str = "l1margin";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FILE_NAME: &str = "manifest.toml";

const DETERMINISM: &str = "fixed-step integration with no randomness; outputs depend only on the \
                           resolved scenario, the options and the tool version";

/// Options that change what a command computes. Every field is optional so
/// that command-line values can be layered over recorded ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_density: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wmin_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wmax_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl RunOptions {
    /// `self` where set, `base` otherwise.
    pub fn over(self, base: &RunOptions) -> RunOptions {
        RunOptions {
            tau_s: self.tau_s.or(base.tau_s),
            gain: self.gain.or(base.gain),
            gamma_c: self.gamma_c.or(base.gamma_c),
            t_end_s: self.t_end_s.or(base.t_end_s),
            sweep: self.sweep.or(base.sweep),
            sweep_density: self.sweep_density.or(base.sweep_density),
            theta: self.theta.or_else(|| base.theta.clone()),
            omega: self.omega.or(base.omega),
            wmin_rad_s: self.wmin_rad_s.or(base.wmin_rad_s),
            wmax_rad_s: self.wmax_rad_s.or(base.wmax_rad_s),
            points: self.points.or(base.points),
        }
    }

    /// Writes the scenario-level options into a resolved scenario.
    pub fn apply(&self, file: &mut ScenarioFile) {
        if let Some(v) = self.tau_s {
            file.run.tau_s = Some(v);
        }
        if let Some(v) = self.gain {
            file.run.gain = Some(v);
        }
        if let Some(v) = self.t_end_s {
            file.run.t_end_s = Some(v);
        }
        if let Some(v) = self.gamma_c {
            file.controller.gamma_c = Some(v);
        }
        if let Some(v) = self.sweep_density {
            file.analysis.sweep_density = Some(v);
        }
        if let Some(v) = self.wmin_rad_s {
            file.analysis.grid_wmin_rad_s = Some(v);
        }
        if let Some(v) = self.wmax_rad_s {
            file.analysis.grid_wmax_rad_s = Some(v);
        }
        if let Some(v) = self.points {
            file.analysis.grid_points = Some(v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub profile: Profile,
    /// Effective delay after rounding to the step grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_eff_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_s: Option<f64>,
    pub determinism: String,
    /// Files written next to the manifest.
    pub outputs: Vec<String>,
    pub options: RunOptions,
    /// The resolved scenario the command ran on.
    pub scenario: ScenarioFile,
}

impl RunManifest {
    pub fn new(command: &str, profile: Profile, options: RunOptions, scenario: ScenarioFile) -> Self {
        Self {
            tool: TOOL.into(),
            tool_version: TOOL_VERSION.into(),
            command: command.into(),
            profile,
            tau_eff_s: None,
            h_s: scenario.run.h_s,
            determinism: DETERMINISM.into(),
            outputs: Vec::new(),
            options,
            scenario,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing the run manifest")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        parse_toml(text, origin)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, self.to_toml()?).with_context(|| format!("writing {}", path.display()))
    }
}

/// What a command was pointed at.
pub enum Input {
    Scenario(ScenarioFile),
    Manifest(Box<RunManifest>),
}

impl Input {
    /// Reads `path`; a top-level `tool_version` key marks a manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let origin = path.display().to_string();
        let is_manifest = text
            .parse::<toml::Table>()
            .map(|t| t.contains_key("tool_version"))
            .unwrap_or(false);
        if is_manifest {
            Ok(Input::Manifest(Box::new(RunManifest::parse(&text, &origin)?)))
        } else {
            Ok(Input::Scenario(parse_toml(&text, &origin)?))
        }
    }
}
