//! The subcommands. Each returns the process exit code on success.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DVector;

use l1margin::linsys::{l1_gain_proper, RationalTF};
use l1margin::margins::{bode, margin_report, open_loop_ho, theta_m_lemma5, transient_bounds};
use l1margin::simulate::{
    classify, fmt_sig, simulate_closed_loop, simulate_reference, verify_equivalence, Classification, Profile,
    Scenario, SimTrace, StabilityProbe,
};

use crate::manifest::{Input, RunManifest, RunOptions};
use crate::scenario_file::ScenarioFile;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_UNSTABLE: u8 = 2;

/// Relative tolerances for the adaptive/LTI equivalence check.
const EQUIVALENCE_TOL_DELAYED: f64 = 1e-3;
const EQUIVALENCE_TOL_UNDELAYED: f64 = 1e-4;

/// A loaded input after profile resolution and option layering.
pub struct Prepared {
    pub profile: Profile,
    pub options: RunOptions,
    pub file: ScenarioFile,
}

/// Resolves `input` for `command`. For a scenario file the profile is
/// `cli_profile`, then the file's own, then desk. A manifest is already
/// resolved; its options apply when it was written by the same command.
pub fn prepare(input: &Path, command: &str, cli_profile: Option<Profile>, cli: RunOptions) -> Result<Prepared> {
    let (profile, base, recorded) = match Input::load(input)? {
        Input::Scenario(f) => {
            let profile = cli_profile.or(f.profile).unwrap_or(Profile::Desk);
            (profile, f, RunOptions::default())
        }
        Input::Manifest(m) => {
            let recorded = if m.command == command { m.options.clone() } else { RunOptions::default() };
            (m.profile, m.scenario, recorded)
        }
    };
    let options = cli.over(&recorded);
    let mut file = base.resolve(profile);
    options.apply(&mut file);
    Ok(Prepared { profile, options, file })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(", ")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_else(|| "none".into())
}

// ---------------------------------------------------------------- simulate

pub fn simulate(p: Prepared, out: &Path) -> Result<u8> {
    let sc = p.file.scenario()?;
    let trace = simulate_closed_loop(&sc).context("closed-loop simulation")?;
    let (baseline_peak, baseline_note) = baseline_peak(&sc, &trace)?;
    let verdict = classify(&sc, &trace, baseline_peak);

    create_dir(out)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).context("formatting the trace")?;
    fs::write(out.join("trace.csv"), csv).with_context(|| format!("writing {}", out.join("trace.csv").display()))?;

    let mut v = String::new();
    let _ = writeln!(v, "classification = {}", verdict.classification);
    let _ = writeln!(v, "tau_eff_s = {}", fmt_sig(verdict.tau_eff));
    let _ = writeln!(v, "gain = {}", fmt_sig(sc.gain));
    let _ = writeln!(v, "gamma_c = {}", fmt_sig(sc.cfg.gamma_c()));
    let _ = writeln!(v, "h_s = {}", fmt_sig(sc.h));
    let _ = writeln!(v, "t_end_s = {}", fmt_sig(sc.t_end));
    let _ = writeln!(v, "peak_state = {}", fmt_sig(verdict.peak));
    let _ = writeln!(v, "baseline_peak_state = {}", fmt_sig(verdict.baseline_peak));
    let _ = writeln!(v, "divergence_time_s = {}", opt(verdict.divergence_time));
    let _ = writeln!(v, "rows = {}", trace.len());
    if let Some(note) = verdict.note.as_ref().or(baseline_note.as_ref()) {
        let _ = writeln!(v, "note = {note:?}");
    }
    write_file(out, "verdict.txt", &v)?;

    let mut m = RunManifest::new("simulate", p.profile, p.options, p.file);
    m.tau_eff_s = Some(sc.tau_eff());
    m.outputs = vec!["trace.csv".into(), "verdict.txt".into()];
    m.write(out)?;

    print!("{v}");
    Ok(match verdict.classification {
        Classification::Stable => EXIT_OK,
        Classification::Diverged | Classification::Inconclusive => EXIT_UNSTABLE,
    })
}

/// Peak of the same scenario without delay: the run itself when it has no
/// delay, otherwise a separate run. When that run does not complete, only a
/// blow-up can classify the delayed run.
fn baseline_peak(sc: &Scenario, trace: &SimTrace) -> Result<(f64, Option<String>)> {
    if sc.tau_eff() == 0.0 {
        return Ok((trace.peak_x, None));
    }
    match StabilityProbe::new(sc) {
        Ok(p) => Ok((p.baseline_peak(), None)),
        Err(l1margin::Error::Precondition(msg)) => Ok((f64::INFINITY, Some(msg))),
        Err(e) => Err(e.into()),
    }
}

// ----------------------------------------------------------------- margins

pub fn margins(p: Prepared, out: &Path) -> Result<u8> {
    let cfg = p.file.config()?;
    let grid = p.file.grid()?;
    let sweep = p.options.sweep.unwrap_or(false);
    let density = if sweep { p.file.analysis.sweep_density } else { None };
    let report = margin_report(&cfg, &p.file.truth.theta, p.file.truth.omega, &grid, density)?;

    let mut text = String::new();
    let main = report.to_text();
    let (head, table) = match main.find("\n[worst_case]") {
        Some(i) => main.split_at(i),
        None => (main.as_str(), ""),
    };
    text.push_str(head);
    text.push('\n');
    text.push_str(&bounds_section(&cfg));
    text.push_str(table);
    create_dir(out)?;
    write_file(out, "margins.txt", &text)?;
    let mut outputs = vec!["margins.txt".to_string()];
    if let Some(csv) = report.vertex_csv() {
        write_file(out, "vertices.csv", &csv)?;
        outputs.push("vertices.csv".into());
    }
    let mut m = RunManifest::new("margins", p.profile, p.options, p.file);
    m.outputs = outputs;
    m.write(out)?;
    print!("{head}");
    if let Some(wc) = &report.worst_case {
        println!("worst_case_delay_margin_s = {}", fmt_sig(wc.delay_margin));
    }
    Ok(EXIT_OK)
}

/// Transient bounds on the declared sets, or why they do not apply.
fn bounds_section(cfg: &l1margin::l1ctrl::ControllerConfig) -> String {
    let mut s = String::from("[bounds]\n");
    let sets = cfg.sets();
    match transient_bounds(cfg, sets, cfg.p(), cfg.q(), cfg.gamma_c(), None) {
        Ok(b) => {
            let _ = writeln!(s, "theta_m = {}", fmt_sig(b.theta_m));
            let _ = writeln!(s, "prediction_error_bound = {}", fmt_sig(b.xtilde_bound));
            let _ = writeln!(s, "gamma1 = {}", fmt_sig(b.gamma1));
            let _ = writeln!(s, "gamma2 = {}", opt(b.gamma2));
            if let Some(c_o) = &b.c_o {
                let _ = writeln!(s, "c_o = [{}]", join(c_o));
            }
        }
        Err(e) => {
            let _ = writeln!(s, "status = \"not applicable: {e}\"");
        }
    }
    s
}

// -------------------------------------------------------------------- bode

pub fn bode_cmd(p: Prepared, out: &Path) -> Result<u8> {
    let cfg = p.file.config()?;
    let grid = p.file.grid()?;
    let theta = p.options.theta.clone().unwrap_or_else(|| p.file.truth.theta.clone());
    let omega = p.options.omega.unwrap_or(p.file.truth.omega);
    if theta.len() != cfg.n() {
        bail!("--theta needs {} entries, got {}", cfg.n(), theta.len());
    }
    let ho = open_loop_ho(
        cfg.a_m(),
        cfg.b(),
        &DVector::from_column_slice(&theta),
        omega,
        cfg.k(),
        cfg.filter(),
    )?;
    let points = bode(&ho, &grid)?;
    let mut csv = String::from("omega,magnitude_db,phase_deg\n");
    for pt in &points {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_sig(pt.omega),
            fmt_sig(pt.magnitude_db),
            fmt_sig(pt.phase_deg)
        );
    }
    create_dir(out)?;
    write_file(out, "bode.csv", &csv)?;
    let mut m = RunManifest::new("bode", p.profile, p.options, p.file);
    m.outputs = vec!["bode.csv".into()];
    m.write(out)?;
    println!("points = {}", points.len());
    Ok(EXIT_OK)
}

// ------------------------------------------------------------------ verify

enum Check {
    Pass(String),
    Fail(String),
    NotApplicable(String),
}

impl Check {
    fn of(pass: bool, detail: String) -> Self {
        if pass {
            Check::Pass(detail)
        } else {
            Check::Fail(detail)
        }
    }

    fn line(&self, name: &str) -> String {
        let (status, detail) = match self {
            Check::Pass(d) => ("pass", d),
            Check::Fail(d) => ("fail", d),
            Check::NotApplicable(d) => ("not_applicable", d),
        };
        format!("{name} = {status}\n{name}_detail = {detail:?}\n")
    }
}

/// Corrupts the recorded `r̃` so that the equivalence check must fail.
pub const CORRUPTION_SCALE: f64 = 1.5;

pub fn verify(p: Prepared, out: &Path, corrupt_trace: bool) -> Result<u8> {
    let sc = p.file.scenario()?;
    let mut checks: Vec<(&str, Check)> = Vec::new();

    let mut trace = simulate_closed_loop(&sc).context("closed-loop simulation")?;
    if corrupt_trace {
        trace.rtilde_grid.iter_mut().for_each(|v| *v = *v * CORRUPTION_SCALE + 1.0);
    }
    let tol = if sc.tau_eff() > 0.0 {
        EQUIVALENCE_TOL_DELAYED
    } else {
        EQUIVALENCE_TOL_UNDELAYED
    };
    let eq = if trace.completed() {
        let r = verify_equivalence(&trace, &sc)?;
        let (rs, rc) = (r.relative_state(), r.relative_control());
        Check::of(
            rs <= tol && rc <= tol,
            format!(
                "relative state residual {}, relative control residual {}, tolerance {}, tau_eff {} s, {} rows",
                fmt_sig(rs),
                fmt_sig(rc),
                fmt_sig(tol),
                fmt_sig(sc.tau_eff()),
                r.rows_compared
            ),
        )
    } else {
        Check::Fail(format!("adaptive run did not complete: {:?}", trace.termination))
    };
    checks.push(("equivalence", eq));

    // The bounds are stated for the undelayed loop.
    let undelayed = sc.clone().with_tau(0.0);
    let run0 = if sc.tau_eff() == 0.0 && !corrupt_trace {
        trace
    } else {
        simulate_closed_loop(&undelayed)?
    };
    let cfg = &undelayed.cfg;
    let sets = cfg.sets();
    let omega_eff = undelayed.effective_omega();
    let in_sets = sets.omega0.contains(omega_eff);
    let gamma_c = cfg.gamma_c();

    let prediction = if !in_sets {
        Check::NotApplicable(format!("effective input gain {} outside omega0", fmt_sig(omega_eff)))
    } else if !run0.completed() {
        Check::Fail(format!("undelayed run did not complete: {:?}", run0.termination))
    } else {
        let theta_m = theta_m_lemma5(&sets.theta_box, sets.delta, sets.omega, sets.d_sigma, cfg.p(), cfg.q())?;
        let lambda_min_p = l1margin::linsys::spectral_summary(cfg.p(), cfg.q())?.lambda_min_p;
        let bound = (theta_m / (lambda_min_p * gamma_c)).sqrt();
        let err = run0.max_prediction_error();
        Check::of(
            err <= bound,
            format!("max prediction error {} <= bound {}", fmt_sig(err), fmt_sig(bound)),
        )
    };
    checks.push(("prediction_error_bound", prediction));

    let (g1, g2) = match transient_bounds(cfg, sets, cfg.p(), cfg.q(), gamma_c, None) {
        Err(e) => {
            let why = format!("{e}");
            (Check::NotApplicable(why.clone()), Check::NotApplicable(why))
        }
        Ok(_) if !in_sets => {
            let why = format!("effective input gain {} outside omega0", fmt_sig(omega_eff));
            (Check::NotApplicable(why.clone()), Check::NotApplicable(why))
        }
        Ok(_) if !run0.completed() => {
            let why = format!("undelayed run did not complete: {:?}", run0.termination);
            (Check::Fail(why.clone()), Check::Fail(why))
        }
        Ok(b) => {
            let reference = simulate_reference(&undelayed)?;
            let dx = run0.max_state_deviation(&reference);
            let g1 = Check::of(
                dx <= b.gamma1,
                format!("max |x - x_ref| {} <= gamma1 {}", fmt_sig(dx), fmt_sig(b.gamma1)),
            );
            let g2 = match b.gamma2 {
                Some(gamma2) => {
                    let du = run0
                        .u
                        .iter()
                        .zip(&reference.u)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    Check::of(
                        du <= gamma2,
                        format!("max |u - u_ref| {} <= gamma2 {}", fmt_sig(du), fmt_sig(gamma2)),
                    )
                }
                None => Check::NotApplicable(b.note.unwrap_or_else(|| "no admissible c_o".into())),
            };
            (g1, g2)
        }
    };
    checks.push(("gamma1", g1));
    checks.push(("gamma2", g2));

    let failed = checks.iter().filter(|(_, c)| matches!(c, Check::Fail(_))).count();
    let mut text = String::new();
    for (name, c) in &checks {
        text.push_str(&c.line(name));
    }
    let _ = writeln!(text, "failed_checks = {failed}");
    create_dir(out)?;
    write_file(out, "verify.txt", &text)?;
    let mut m = RunManifest::new("verify", p.profile, p.options, p.file);
    m.tau_eff_s = Some(sc.tau_eff());
    m.outputs = vec!["verify.txt".into()];
    m.write(out)?;
    print!("{text}");
    Ok(if failed == 0 { EXIT_OK } else { EXIT_UNSTABLE })
}

// ------------------------------------------------------------------ l1gain

/// L1 norm of `num(s)/den(s)`, coefficients highest power first.
pub fn l1gain(num: &[f64], den: &[f64], rel_tol: f64) -> Result<u8> {
    let asc = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
    let tf = RationalTF::new(asc(num), asc(den))?;
    let ss = tf.to_state_space()?;
    let g = l1_gain_proper(&ss, rel_tol)?;
    println!("l1_gain = {}", fmt_sig(g));
    Ok(EXIT_OK)
}

pub fn default_out_dir() -> PathBuf {
    PathBuf::from("l1margin-out")
}
