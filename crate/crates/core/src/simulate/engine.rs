//! Fixed-step RK4 engines: the adaptive loop with output delay, the
//! reference system, and the delayed LTI system driven by a recorded `r̃`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::l1ctrl::{clip_and_guard, controller_rates, ControllerState};
use crate::linsys::StateSpace;
use crate::ode::Rk4;

use super::delay::DelayLine;
use super::scenario::Scenario;
use super::trace::{Row, SimTrace, Termination};

/// `out = A x + b v`
#[inline]
fn affine(a: &DMatrix<f64>, b: &DVector<f64>, x: &[f64], v: f64, out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let mut acc = b[i] * v;
        for j in 0..n {
            acc += a[(i, j)] * x[j];
        }
        out[i] = acc;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY })
}

fn should_record(i: usize, steps: usize, every: usize) -> bool {
    i % every == 0 || i == steps
}

/// The adaptive loop: plant, delay line and controller on one flat state
/// `[x | controller]`.
struct ClosedLoop<'a> {
    sc: &'a Scenario,
    n: usize,
    depth: usize,
    g_omega: f64,
    xline: DelayLine,
    zline: DelayLine,
    xd: Vec<f64>,
}

impl ClosedLoop<'_> {
    /// Rates at `(i + frac)·h`; returns `u`. On stage 0 the grid sample of
    /// `x` and `ζ = gωu + σ` is pushed into the delay lines.
    fn deriv(&mut self, i: usize, frac: f64, y: &[f64], dy: &mut [f64], push: bool) -> f64 {
        let sc = self.sc;
        let n = self.n;
        let t = (i as f64 + frac) * sc.h;
        let (x, ctrl) = y.split_at(n);
        if self.depth == 0 {
            self.xd.copy_from_slice(x);
        } else {
            self.xline.delayed_at(i, frac, &mut self.xd);
        }
        let r = sc.r.value(t);
        let sigma = sc.sigma.value(t);
        let (dx, dctrl) = dy.split_at_mut(n);
        let u = controller_rates(&sc.cfg, ctrl, &self.xd, r, dctrl);
        let drive = self.g_omega * u + dot(&sc.true_theta, x) + sigma;
        affine(sc.cfg.a_m(), sc.cfg.b(), x, drive, dx);
        if push {
            self.xline.push(x, dx);
            self.zline.push(&[self.g_omega * u + sigma], &[0.0]);
        }
        u
    }
}

/// Simulates the adaptive loop with the controller fed `x(t - τ)` and the
/// plant input scaled by the loop gain `g`. Divergence or a step-guard trip
/// ends the run early; see [`SimTrace::termination`].
pub fn simulate_closed_loop(sc: &Scenario) -> Result<SimTrace> {
    run_closed_loop(sc, true)
}

pub(crate) fn run_closed_loop(sc: &Scenario, record: bool) -> Result<SimTrace> {
    sc.validate()?;
    let cfg = &sc.cfg;
    let n = cfg.n();
    let h = sc.h;
    let steps = sc.steps();
    let depth = sc.depth();
    let ctrl0 = ControllerState::initial(cfg, &sc.x0, &sc.init)?;
    let mut y = vec![0.0; n + cfg.flat_len()];
    y[..n].copy_from_slice(&sc.x0);
    ctrl0.to_flat(&mut y[n..]);

    let mut lp = ClosedLoop {
        sc,
        n,
        depth,
        g_omega: sc.effective_omega(),
        xline: DelayLine::with_depth(n, depth, h),
        zline: DelayLine::with_depth(1, depth, h),
        xd: vec![0.0; n],
    };
    let rows = if record { steps / sc.record_every + 2 } else { 0 };
    let mut trace = SimTrace::new(n, h, sc.record_every, sc.tau_eff(), rows);
    if record {
        trace.rtilde_grid.reserve_exact(steps + 1);
    }
    trace.peak_x = inf_norm(&sc.x0);

    let mut rk = Rk4::new(y.len());
    let mut before = y.clone();
    let mut scratch = vec![0.0; y.len()];
    let mut xd_i = vec![0.0; n];
    let mut zeta_d = [0.0];
    for i in 0..=steps {
        let u_i;
        if i < steps {
            before.copy_from_slice(&y);
            let mut u0 = 0.0;
            rk.step(&mut y, h, |stage, frac, ys, dy| {
                let u = lp.deriv(i, frac, ys, dy, stage == 0);
                if stage == 0 {
                    u0 = u;
                    xd_i.copy_from_slice(&lp.xd);
                }
                Ok(())
            })?;
            u_i = u0;
        } else {
            before.copy_from_slice(&y);
            u_i = lp.deriv(i, 0.0, &before, &mut scratch, true);
            xd_i.copy_from_slice(&lp.xd);
        }

        if record {
            let t = i as f64 * h;
            let sigma = sc.sigma.value(t);
            let eta = if depth == 0 {
                0.0
            } else {
                lp.zline.output(i, &mut zeta_d);
                zeta_d[0] - lp.g_omega * u_i - sigma
            };
            let ctrl = &before[n..];
            let theta_hat = &ctrl[n..2 * n];
            let (sigma_hat, omega_hat) = (ctrl[2 * n], ctrl[2 * n + 1]);
            let theta_err: f64 = (0..n).map(|k| (theta_hat[k] - sc.true_theta[k]) * xd_i[k]).sum();
            let rtilde = (omega_hat - lp.g_omega) * u_i + theta_err + sigma_hat - (sigma + eta);
            trace.rtilde_grid.push(rtilde);
            if should_record(i, steps, sc.record_every) {
                trace.push_row(Row {
                    t,
                    x: &before[..n],
                    x_d: &xd_i,
                    xhat: &ctrl[..n],
                    u: u_i,
                    theta_hat,
                    sigma_hat,
                    omega_hat,
                    r: sc.r.value(t),
                    sigma,
                    rtilde,
                    eta,
                });
            }
        }
        if i == steps {
            break;
        }

        let t_next = (i + 1) as f64 * h;
        if let Err(e) = clip_and_guard(cfg, &before[n..], &mut y[n..], t_next) {
            trace.peak_x = trace.peak_x.max(inf_norm(&y[..n]));
            trace.termination = Termination::StepGuard {
                t: t_next,
                message: e.to_string(),
            };
            return Ok(trace);
        }
        let norm = inf_norm(&y[..n]);
        trace.peak_x = trace.peak_x.max(norm);
        if norm > sc.blowup {
            trace.termination = Termination::BlowUp { t: t_next };
            return Ok(trace);
        }
    }
    Ok(trace)
}

/// Simulates the non-adaptive reference system: the true `θ, gω` and the
/// low-pass filter `C(s)/(gω)` driven by `k_g r - θᵀx_ref - σ`. The delay is
/// ignored. Estimate columns hold the true values.
pub fn simulate_reference(sc: &Scenario) -> Result<SimTrace> {
    sc.validate()?;
    let cfg = &sc.cfg;
    let (n, h, steps) = (cfg.n(), sc.h, sc.steps());
    let g_omega = sc.effective_omega();
    let filt = cfg.c_over_omega(g_omega);
    let m = filt.order();
    let mut y = vec![0.0; n + m];
    y[..n].copy_from_slice(&sc.x0);

    let deriv = |i: usize, frac: f64, y: &[f64], dy: &mut [f64]| -> f64 {
        let t = (i as f64 + frac) * h;
        let (x, xi) = y.split_at(n);
        let (dx, dxi) = dy.split_at_mut(n);
        let u = dot(filt.c().as_slice(), xi);
        let sigma = sc.sigma.value(t);
        let theta_x = dot(&sc.true_theta, x);
        affine(filt.a(), filt.b(), xi, cfg.k_g() * sc.r.value(t) - theta_x - sigma, dxi);
        affine(cfg.a_m(), cfg.b(), x, g_omega * u + theta_x + sigma, dx);
        u
    };

    let mut trace = SimTrace::new(n, h, sc.record_every, 0.0, steps / sc.record_every + 2);
    trace.peak_x = inf_norm(&sc.x0);
    let mut rk = Rk4::new(y.len());
    for i in 0..=steps {
        if should_record(i, steps, sc.record_every) {
            let t = i as f64 * h;
            let u = dot(filt.c().as_slice(), &y[n..]);
            let sigma = sc.sigma.value(t);
            trace.push_row(Row {
                t,
                x: &y[..n],
                x_d: &y[..n],
                xhat: &y[..n],
                u,
                theta_hat: &sc.true_theta,
                sigma_hat: sigma,
                omega_hat: g_omega,
                r: sc.r.value(t),
                sigma,
                rtilde: 0.0,
                eta: 0.0,
            });
        }
        if i == steps {
            break;
        }
        rk.step(&mut y, h, |_, frac, ys, dy| {
            deriv(i, frac, ys, dy);
            Ok(())
        })?;
        let norm = inf_norm(&y[..n]);
        trace.peak_x = trace.peak_x.max(norm);
        if norm > sc.blowup {
            trace.termination = Termination::BlowUp { t: (i + 1) as f64 * h };
            break;
        }
    }
    Ok(trace)
}

/// Catmull-Rom interpolation of grid samples at `(i + frac)·h`.
fn catmull_rom(samples: &[f64], i: usize, frac: f64) -> f64 {
    let last = samples.len() - 1;
    let at = |k: isize| samples[k.clamp(0, last as isize) as usize];
    if frac == 0.0 {
        return samples[i.min(last)];
    }
    let k = i as isize;
    let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
    let s = frac;
    0.5 * (2.0 * p1
        + (p2 - p0) * s
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * s * s * s)
}

/// Simulates the delayed LTI system driven by the exogenous signal `r̃_l`
/// sampled on the scenario grid (`steps + 1` samples):
///
/// ```text
/// ε_l = (C/ω) r̃_l
/// u_l = (C/ω)(k_g r - θᵀx_l - σ - η_l) - ε_l
/// ζ_l = ωu_l + σ,   ζ_ld(t) = ζ_l(t - τ)
/// ẋ_l = (A_m + bθᵀ) x_l + b ζ_ld,   η_l = ζ_ld - ωu_l - σ
/// ```
///
/// with `ω` the effective `gω` and zero initial conditions. Both filters are
/// strictly proper, so every feedback path passes through a state or the
/// delay and the realization has no algebraic loop.
pub fn simulate_lti_delayed(sc: &Scenario, r_tilde: &[f64]) -> Result<SimTrace> {
    sc.validate()?;
    let cfg = &sc.cfg;
    let (n, h, steps, depth) = (cfg.n(), sc.h, sc.steps(), sc.depth());
    if r_tilde.len() != steps + 1 {
        return Err(Error::GridMismatch(format!(
            "r_tilde has {} samples, the scenario grid has {}",
            r_tilde.len(),
            steps + 1
        )));
    }
    if sc.x0.iter().any(|v| *v != 0.0) {
        return Err(Error::Precondition("the delayed LTI system starts from x_l(0) = 0".into()));
    }
    let g_omega = sc.effective_omega();
    let filt: StateSpace = cfg.c_over_omega(g_omega);
    if !filt.is_strictly_proper() {
        return Err(Error::Precondition("algebraic loop: C(s)/ω must be strictly proper".into()));
    }
    let m = filt.order();
    let theta = DVector::from_column_slice(&sc.true_theta);
    let a_bar = cfg.a_m() + cfg.b() * theta.transpose();
    let cf = filt.c().as_slice();

    let mut zline = DelayLine::with_depth(1, depth, h);
    let mut y = vec![0.0; n + 2 * m];
    let mut zeta_d = [0.0];
    let mut deriv = |i: usize, frac: f64, y: &[f64], dy: &mut [f64], push: bool| -> (f64, f64) {
        let t = (i as f64 + frac) * h;
        let (x, rest) = y.split_at(n);
        let (xi_u, xi_e) = rest.split_at(m);
        let (dx, drest) = dy.split_at_mut(n);
        let (dxi_u, dxi_e) = drest.split_at_mut(m);
        let u = dot(cf, xi_u) - dot(cf, xi_e);
        let sigma = sc.sigma.value(t);
        let zeta = g_omega * u + sigma;
        let zd = if depth == 0 {
            zeta
        } else {
            zline.delayed_at(i, frac, &mut zeta_d);
            zeta_d[0]
        };
        let drive = cfg.k_g() * sc.r.value(t) - dot(&sc.true_theta, x) - zd + g_omega * u;
        affine(filt.a(), filt.b(), xi_u, drive, dxi_u);
        affine(filt.a(), filt.b(), xi_e, catmull_rom(r_tilde, i, frac), dxi_e);
        affine(&a_bar, cfg.b(), x, zd, dx);
        if push {
            let du = dot(cf, dxi_u) - dot(cf, dxi_e);
            zline.push(&[zeta], &[g_omega * du + sc.sigma.derivative(t)]);
        }
        (u, zd)
    };

    let mut trace = SimTrace::new(n, h, sc.record_every, sc.tau_eff(), steps / sc.record_every + 2);
    let mut rk = Rk4::new(y.len());
    let mut before = y.clone();
    let mut scratch = vec![0.0; y.len()];
    for i in 0..=steps {
        before.copy_from_slice(&y);
        let (u_i, zd_i);
        if i < steps {
            let mut grid = (0.0, 0.0);
            rk.step(&mut y, h, |stage, frac, ys, dy| {
                let out = deriv(i, frac, ys, dy, stage == 0);
                if stage == 0 {
                    grid = out;
                }
                Ok(())
            })?;
            (u_i, zd_i) = grid;
        } else {
            (u_i, zd_i) = deriv(i, 0.0, &before, &mut scratch, true);
        }
        if should_record(i, steps, sc.record_every) {
            let t = i as f64 * h;
            let sigma = sc.sigma.value(t);
            trace.push_row(Row {
                t,
                x: &before[..n],
                x_d: &before[..n],
                xhat: &before[..n],
                u: u_i,
                theta_hat: &sc.true_theta,
                sigma_hat: sigma,
                omega_hat: g_omega,
                r: sc.r.value(t),
                sigma,
                rtilde: r_tilde[i],
                eta: zd_i - g_omega * u_i - sigma,
            });
        }
        if i == steps {
            break;
        }
        let norm = inf_norm(&y[..n]);
        trace.peak_x = trace.peak_x.max(norm);
        if norm > sc.blowup {
            trace.termination = Termination::BlowUp { t: (i + 1) as f64 * h };
            break;
        }
    }
    Ok(trace)
}

/// Residuals between the adaptive loop and the delayed LTI system driven by
/// the adaptive run's own `r̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// `max_t ‖x_l - x_d‖_∞`
    pub state_residual: f64,
    /// `max_t |u_l - u|`
    pub control_residual: f64,
    /// `max_t ‖x_d‖_∞`
    pub state_scale: f64,
    /// `max_t |u|`
    pub control_scale: f64,
    pub rows_compared: usize,
}

impl EquivalenceReport {
    pub fn relative_state(&self) -> f64 {
        if self.state_scale > 0.0 {
            self.state_residual / self.state_scale
        } else {
            self.state_residual
        }
    }

    pub fn relative_control(&self) -> f64 {
        if self.control_scale > 0.0 {
            self.control_residual / self.control_scale
        } else {
            self.control_residual
        }
    }
}

/// Feeds the recorded `r̃` of an adaptive run into
/// [`simulate_lti_delayed`] and compares `x_l` with `x_d` and `u_l` with `u`
/// at every recorded row.
pub fn verify_equivalence(adaptive: &SimTrace, sc: &Scenario) -> Result<EquivalenceReport> {
    let steps = sc.steps();
    if !adaptive.completed() {
        return Err(Error::Precondition(format!(
            "adaptive run did not complete: {:?}",
            adaptive.termination
        )));
    }
    if (adaptive.h - sc.h).abs() > 1e-12 * sc.h
        || adaptive.n != sc.cfg.n()
        || adaptive.record_every != sc.record_every
        || adaptive.rtilde_grid.len() != steps + 1
        || (adaptive.tau_eff - sc.tau_eff()).abs() > 1e-12 * sc.h
    {
        return Err(Error::GridMismatch(format!(
            "trace grid (h = {}, {} samples, record_every = {}, tau_eff = {}) does not match the scenario \
             (h = {}, {} samples, record_every = {}, tau_eff = {})",
            adaptive.h,
            adaptive.rtilde_grid.len(),
            adaptive.record_every,
            adaptive.tau_eff,
            sc.h,
            steps + 1,
            sc.record_every,
            sc.tau_eff()
        )));
    }
    let lti = simulate_lti_delayed(sc, &adaptive.rtilde_grid)?;
    if lti.len() != adaptive.len() {
        return Err(Error::GridMismatch(format!(
            "LTI run recorded {} rows, adaptive run {}",
            lti.len(),
            adaptive.len()
        )));
    }
    let mut rep = EquivalenceReport {
        state_residual: 0.0,
        control_residual: 0.0,
        state_scale: 0.0,
        control_scale: 0.0,
        rows_compared: lti.len(),
    };
    for i in 0..lti.len() {
        for (a, b) in lti.x_row(i).iter().zip(adaptive.x_d_row(i)) {
            rep.state_residual = rep.state_residual.max((a - b).abs());
            rep.state_scale = rep.state_scale.max(b.abs());
        }
        rep.control_residual = rep.control_residual.max((lti.u[i] - adaptive.u[i]).abs());
        rep.control_scale = rep.control_scale.max(adaptive.u[i].abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catmull_rom_reproduces_cubics_inside() {
        let f = |t: f64| 2.0 - t + 0.3 * t * t - 0.05 * t * t * t;
        let samples: Vec<f64> = (0..10).map(|k| f(k as f64)).collect();
        for i in 1..7 {
            for frac in [0.25, 0.5, 0.9] {
                let v = catmull_rom(&samples, i, frac);
                // Catmull-Rom is exact for quadratics, second order for cubics
                assert!((v - f(i as f64 + frac)).abs() < 0.05, "{i} {frac}");
            }
        }
        let q = |t: f64| 1.0 + 2.0 * t - 0.5 * t * t;
        let samples: Vec<f64> = (0..10).map(|k| q(k as f64)).collect();
        assert!((catmull_rom(&samples, 4, 0.5) - q(4.5)).abs() < 1e-12);
    }
}
