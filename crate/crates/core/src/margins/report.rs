//! Assembled margin report and its text and CSV forms.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1ctrl::{ControllerConfig, Interval};
use crate::linsys::FrequencyGrid;
use crate::simulate::fmt_sig;

use super::loop_tf::{check_l1_condition, open_loop_ho};
use super::phase::phase_margin_extending;
use super::sweep::{gain_margin_interval, worst_case_delay_margin, VertexOutcome, WorstCase};

/// Margins of the equivalent LTI loop at one `(θ, ω)`, plus the L1
/// condition on the declared sets and, optionally, the worst case over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// Worst `‖G‖_L1 · L` over the sampled `Ω₀`.
    pub l1_condition_value: f64,
    pub l1_condition_holds: bool,
    pub theta: Vec<f64>,
    pub omega: f64,
    /// rad
    pub phase_margin: f64,
    /// rad/s
    pub crossover: f64,
    /// s
    pub delay_margin: f64,
    pub gain_margin_interval: Interval,
    pub worst_case: Option<WorstCase>,
}

/// Builds the report for the nominal `(θ, ω)`. With `sweep_density`, also
/// sweeps `Θ × Ω₀` with that many samples per `θ` axis.
pub fn margin_report(
    cfg: &ControllerConfig,
    theta: &[f64],
    omega: f64,
    grid: &FrequencyGrid,
    sweep_density: Option<usize>,
) -> Result<MarginReport> {
    let sets = cfg.sets();
    let (a_m, b, k, d) = (cfg.a_m(), cfg.b(), cfg.k(), cfg.filter());
    let l1 = check_l1_condition(a_m, b, &sets.theta_box, sets.omega0, k, d)?;
    let ho = open_loop_ho(a_m, b, &DVector::from_column_slice(theta), omega, k, d)?;
    let pm = phase_margin_extending(&ho, grid)?;
    let gm = gain_margin_interval(sets.omega0, sets.omega)?;
    let worst_case = match sweep_density {
        Some(density) => Some(worst_case_delay_margin(
            a_m,
            b,
            &sets.theta_box,
            sets.omega0,
            k,
            d,
            density,
            grid,
        )?),
        None => None,
    };
    let report = MarginReport {
        l1_condition_value: l1.value,
        l1_condition_holds: l1.holds,
        theta: theta.to_vec(),
        omega,
        phase_margin: pm.pm,
        crossover: pm.omega_c,
        delay_margin: pm.delay_margin(),
        gain_margin_interval: gm,
        worst_case,
    };
    report.check()?;
    Ok(report)
}

impl MarginReport {
    /// `delay_margin = phase_margin/crossover`, for the nominal point and
    /// every analyzed sweep point.
    pub fn check(&self) -> Result<()> {
        let same = |t: f64, pm: f64, wc: f64| t == pm / wc;
        if !same(self.delay_margin, self.phase_margin, self.crossover) {
            return Err(Error::InvariantViolation("delay margin is not pm/omega_c".into()));
        }
        if let Some(wc) = &self.worst_case {
            for row in &wc.table {
                if let VertexOutcome::Margin { pm, omega_c, delay_margin } = row.outcome {
                    if !same(delay_margin, pm, omega_c) {
                        return Err(Error::InvariantViolation(format!(
                            "delay margin is not pm/omega_c at theta = {:?}, omega = {}",
                            row.theta, row.omega
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `key = value` lines, followed by the sweep table when present.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "l1_condition_value = {}", fmt_sig(self.l1_condition_value));
        let _ = writeln!(s, "l1_condition_holds = {}", self.l1_condition_holds);
        let _ = writeln!(s, "theta = [{}]", join(&self.theta));
        let _ = writeln!(s, "omega = {}", fmt_sig(self.omega));
        let _ = writeln!(s, "phase_margin_rad = {}", fmt_sig(self.phase_margin));
        let _ = writeln!(s, "phase_margin_deg = {}", fmt_sig(self.phase_margin.to_degrees()));
        let _ = writeln!(s, "crossover_rad_s = {}", fmt_sig(self.crossover));
        let _ = writeln!(s, "delay_margin_s = {}", fmt_sig(self.delay_margin));
        let gm = self.gain_margin_interval;
        let _ = writeln!(s, "gain_margin_interval = [{}, {}]", fmt_sig(gm.lo), fmt_sig(gm.hi));
        if let Some(wc) = &self.worst_case {
            s.push('\n');
            let _ = writeln!(s, "[worst_case]");
            let _ = writeln!(s, "delay_margin_s = {}", fmt_sig(wc.delay_margin));
            let _ = writeln!(s, "theta = [{}]", join(&wc.theta));
            let _ = writeln!(s, "omega = {}", fmt_sig(wc.omega));
            let _ = writeln!(s, "phase_margin_rad = {}", fmt_sig(wc.pm));
            let _ = writeln!(s, "crossover_rad_s = {}", fmt_sig(wc.omega_c));
            let _ = writeln!(s, "points = {}", wc.table.len());
            let _ = writeln!(s, "failed_points = {}", wc.failures);
            for row in &wc.table {
                if let VertexOutcome::Failed { message } = &row.outcome {
                    let _ = writeln!(
                        s,
                        "warning = \"theta = [{}], omega = {}: {}\"",
                        join(&row.theta),
                        fmt_sig(row.omega),
                        message
                    );
                }
            }
            s.push('\n');
            let _ = writeln!(s, "[vertex_table]");
            s.push_str(&self.vertex_csv().unwrap_or_default());
        }
        s
    }

    /// `theta_1..theta_n,omega,pm_rad,omega_c,delay_margin_s`; failed points
    /// have empty margin fields. `None` without a sweep.
    pub fn vertex_csv(&self) -> Option<String> {
        let wc = self.worst_case.as_ref()?;
        let n = self.theta.len();
        let mut s = String::new();
        for i in 1..=n {
            let _ = write!(s, "theta_{i},");
        }
        s.push_str("omega,pm_rad,omega_c,delay_margin_s\n");
        for row in &wc.table {
            for t in &row.theta {
                let _ = write!(s, "{},", fmt_sig(*t));
            }
            let _ = write!(s, "{},", fmt_sig(row.omega));
            match row.outcome {
                VertexOutcome::Margin { pm, omega_c, delay_margin } => {
                    let _ = writeln!(s, "{},{},{}", fmt_sig(pm), fmt_sig(omega_c), fmt_sig(delay_margin));
                }
                VertexOutcome::Failed { .. } => s.push_str(",,\n"),
            }
        }
        Some(s)
    }
}
