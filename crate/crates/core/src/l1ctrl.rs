//! The L1 adaptive controller: companion model, projection-based adaptive
//! laws and the low-pass control law `χ = D(s) r_u`, `u = -kχ`.
//!
//! Flat state layout used by the integrators (`n` plant states, `m` states of
//! the `D(s)` realization):
//!
//! ```text
//! [ x̂ (n) | θ̂ (n) | σ̂ | ω̂ | χ-states (m) ]
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::{lyapunov_solve, RationalTF, StateSpace};
use crate::ode::Rk4;

/// A step may move an estimate by at most this fraction of its box width.
pub const STEP_GUARD_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn abs_max(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `count` evenly spaced points, endpoints included (one point if degenerate).
    pub fn samples(&self, count: usize) -> Vec<f64> {
        if count <= 1 || self.width() == 0.0 {
            return vec![self.lo];
        }
        (0..count)
            .map(|i| {
                if i == count - 1 {
                    self.hi
                } else {
                    self.lo + self.width() * i as f64 / (count - 1) as f64
                }
            })
            .collect()
    }
}

/// Declared uncertainty: `θ ∈ Θ` (box), `|σ| ≤ Δ₀`, `ω ∈ Ω₀`, and the wider
/// projection sets `Δ > Δ₀`, `Ω ⊃ Ω₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySets {
    pub theta_box: Vec<Interval>,
    pub delta0: f64,
    pub delta: f64,
    pub omega0: Interval,
    pub omega: Interval,
    /// Bound on `|σ̇|`.
    pub d_sigma: f64,
}

impl UncertaintySets {
    pub fn validate(&self) -> Result<()> {
        if self.theta_box.is_empty() {
            return Err(Error::InvalidArgument("empty theta box".into()));
        }
        if !(self.delta0 >= 0.0 && self.delta > self.delta0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= delta0 < delta, got delta0 = {}, delta = {}",
                self.delta0, self.delta
            )));
        }
        let (o, o0) = (self.omega, self.omega0);
        if !(0.0 < o.lo && o.lo < o0.lo && o0.lo < o0.hi && o0.hi < o.hi) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < omega_l < omega_l0 < omega_u0 < omega_u, got Ω = [{}, {}], Ω₀ = [{}, {}]",
                o.lo, o.hi, o0.lo, o0.hi
            )));
        }
        if !(self.d_sigma >= 0.0) {
            return Err(Error::InvalidArgument("d_sigma must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.theta_box.len()
    }

    /// `L = max_{θ∈Θ} Σ|θᵢ|`
    pub fn l_bound(&self) -> f64 {
        self.theta_box.iter().map(Interval::abs_max).sum()
    }

    /// `max_{θ∈Θ} Σθᵢ²`
    pub fn theta_sq_max(&self) -> f64 {
        self.theta_box.iter().map(|iv| iv.abs_max().powi(2)).sum()
    }

    pub fn sigma_box(&self) -> Interval {
        Interval {
            lo: -self.delta,
            hi: self.delta,
        }
    }

    pub fn contains_theta(&self, theta: &[f64]) -> bool {
        theta.len() == self.n() && theta.iter().zip(&self.theta_box).all(|(t, iv)| iv.contains(*t))
    }
}

/// Known plant data plus the controller design.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    a_m: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    k: f64,
    gamma_c: f64,
    q: DMatrix<f64>,
    sets: UncertaintySets,
    filter: RationalTF,
    filter_ss: StateSpace,
    p: DMatrix<f64>,
    pb: DVector<f64>,
    k_g: f64,
}

impl ControllerConfig {
    /// `D(s) = 1/s`, `Q = I`.
    pub fn new(
        a_m: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        k: f64,
        gamma_c: f64,
        sets: UncertaintySets,
    ) -> Result<Self> {
        let n = a_m.nrows();
        Self::build(
            a_m,
            b,
            c,
            k,
            gamma_c,
            DMatrix::identity(n, n),
            sets,
            RationalTF::integrator(1.0),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        a_m: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        k: f64,
        gamma_c: f64,
        q: DMatrix<f64>,
        sets: UncertaintySets,
        filter: RationalTF,
    ) -> Result<Self> {
        let n = a_m.nrows();
        if a_m.ncols() != n || b.len() != n || c.len() != n || q.nrows() != n || q.ncols() != n {
            return Err(Error::Dimension("A_m, b, c, Q must agree in dimension".into()));
        }
        if sets.n() != n {
            return Err(Error::Dimension(format!(
                "theta box has {} components, plant has {n} states",
                sets.n()
            )));
        }
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
        }
        if !(gamma_c > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma_c must be positive, got {gamma_c}")));
        }
        sets.validate()?;
        if !filter.is_strictly_proper() {
            return Err(Error::NotStrictlyProper);
        }
        let filter_ss = filter.to_state_space()?;
        let p = lyapunov_solve(&a_m, &q)?;
        let pb = &p * &b;
        let k_g = k_g(&a_m, &b, &c)?;
        Ok(Self {
            a_m,
            b,
            c,
            k,
            gamma_c,
            q,
            sets,
            filter,
            filter_ss,
            p,
            pb,
            k_g,
        })
    }

    pub fn with_q(self, q: DMatrix<f64>) -> Result<Self> {
        Self::build(self.a_m, self.b, self.c, self.k, self.gamma_c, q, self.sets, self.filter)
    }

    /// General strictly proper `D(s)`, realized in controllable canonical form.
    pub fn with_filter(self, d: RationalTF) -> Result<Self> {
        Self::build(self.a_m, self.b, self.c, self.k, self.gamma_c, self.q, self.sets, d)
    }

    pub fn with_gamma_c(mut self, gamma_c: f64) -> Result<Self> {
        if !(gamma_c > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma_c must be positive, got {gamma_c}")));
        }
        self.gamma_c = gamma_c;
        Ok(self)
    }

    pub fn with_k(self, k: f64) -> Result<Self> {
        Self::build(self.a_m, self.b, self.c, k, self.gamma_c, self.q, self.sets, self.filter)
    }

    pub fn with_sets(self, sets: UncertaintySets) -> Result<Self> {
        Self::build(self.a_m, self.b, self.c, self.k, self.gamma_c, self.q, sets, self.filter)
    }

    pub fn n(&self) -> usize {
        self.a_m.nrows()
    }

    /// Number of `D(s)` states.
    pub fn m(&self) -> usize {
        self.filter_ss.order()
    }

    pub fn flat_len(&self) -> usize {
        2 * self.n() + 2 + self.m()
    }

    pub fn a_m(&self) -> &DMatrix<f64> {
        &self.a_m
    }
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
    pub fn pb(&self) -> &DVector<f64> {
        &self.pb
    }
    pub fn k_g(&self) -> f64 {
        self.k_g
    }
    pub fn sets(&self) -> &UncertaintySets {
        &self.sets
    }
    pub fn filter(&self) -> &RationalTF {
        &self.filter
    }
    pub fn filter_realization(&self) -> &StateSpace {
        &self.filter_ss
    }

    /// `C(s) = ωkD / (1 + ωkD)`
    pub fn loop_filter(&self, omega: f64) -> Result<RationalTF> {
        loop_filter(&self.filter, omega, self.k)
    }

    /// Realization of `C(s)/ω`: the `D(s)` loop closed through `ω`.
    /// Driving it with `v` yields `u = (C/ω) v`.
    pub fn c_over_omega(&self, omega: f64) -> StateSpace {
        let d = &self.filter_ss;
        let a = d.a() - d.b() * d.c().transpose() * (omega * self.k);
        StateSpace::new(a, -d.b().clone(), d.c() * (-self.k), 0.0).expect("consistent dimensions")
    }
}

/// `C(s) = ωkD / (1 + ωkD)` for `D = num/den`.
pub fn loop_filter(d: &RationalTF, omega: f64, k: f64) -> Result<RationalTF> {
    let gain = omega * k;
    let num = crate::linsys::poly::scale(d.num(), gain);
    let den = crate::linsys::poly::add(d.den(), &num);
    RationalTF::new(num, den)
}

/// DC tracking gain `k_g = -1 / (cᵀ A_m⁻¹ b)`.
pub fn k_g(a_m: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<f64> {
    let lu = a_m.clone().lu();
    let z = lu
        .solve(b)
        .ok_or_else(|| Error::Singular("A_m is singular".into()))?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("A_m is singular".into()));
    }
    let denom = c.dot(&z);
    if denom.abs() <= 1e-14 * c.norm() * z.norm() || denom == 0.0 {
        return Err(Error::Singular("cᵀ A_m⁻¹ b is zero".into()));
    }
    Ok(-1.0 / denom)
}

/// Boundary gate: a rate pushing an estimate already on a face outward is zeroed.
#[inline]
pub(crate) fn gate(estimate: f64, rate: f64, bounds: Interval) -> f64 {
    if (estimate >= bounds.hi && rate > 0.0) || (estimate <= bounds.lo && rate < 0.0) {
        0.0
    } else {
        rate
    }
}

/// Component-wise boundary-gated projection of a rate.
pub fn proj(estimate: &[f64], rate: &[f64], bounds: &[Interval]) -> Result<Vec<f64>> {
    if estimate.len() != rate.len() || estimate.len() != bounds.len() {
        return Err(Error::Dimension("projection operands differ in length".into()));
    }
    estimate
        .iter()
        .zip(rate)
        .zip(bounds)
        .map(|((&e, &r), &iv)| proj_scalar(e, r, iv))
        .collect()
}

pub fn proj_scalar(estimate: f64, rate: f64, bounds: Interval) -> Result<f64> {
    if !bounds.contains(estimate) {
        return Err(Error::InvariantViolation(format!(
            "estimate {estimate} outside [{}, {}]",
            bounds.lo, bounds.hi
        )));
    }
    Ok(gate(estimate, rate, bounds))
}

/// Initial adaptive estimates. `None` fields take their defaults: `θ̂ = 0`
/// clamped into `Θ`, `ω̂ = sqrt(ω_l0·ω_u0)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialEstimates {
    pub theta_hat: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma_hat: f64,
    pub omega_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub xhat: DVector<f64>,
    pub theta_hat: DVector<f64>,
    pub sigma_hat: f64,
    pub omega_hat: f64,
    /// States of the `D(s)` realization; `χ` is its output.
    pub chi: DVector<f64>,
}

impl ControllerState {
    pub fn initial(cfg: &ControllerConfig, x0: &[f64], init: &InitialEstimates) -> Result<Self> {
        let n = cfg.n();
        if x0.len() != n {
            return Err(Error::Dimension(format!("x0 has {} entries, expected {n}", x0.len())));
        }
        let sets = cfg.sets();
        let theta_hat = match &init.theta_hat {
            Some(t) if t.len() == n => DVector::from_column_slice(t),
            Some(t) => return Err(Error::Dimension(format!("theta_hat0 has {} entries", t.len()))),
            None => DVector::from_iterator(n, sets.theta_box.iter().map(|iv| iv.clamp(0.0))),
        };
        let omega_hat = init
            .omega_hat
            .unwrap_or_else(|| (sets.omega0.lo * sets.omega0.hi).sqrt());
        let st = Self {
            xhat: DVector::from_column_slice(x0),
            theta_hat,
            sigma_hat: init.sigma_hat,
            omega_hat,
            chi: DVector::zeros(cfg.m()),
        };
        st.check(cfg)?;
        Ok(st)
    }

    /// Zero companion state and `D` state; estimates as in [`Self::initial`].
    pub fn zero(cfg: &ControllerConfig) -> Self {
        Self::initial(cfg, &vec![0.0; cfg.n()], &InitialEstimates::default()).expect("defaults are valid")
    }

    pub fn check(&self, cfg: &ControllerConfig) -> Result<()> {
        let sets = cfg.sets();
        if self.xhat.len() != cfg.n() || self.theta_hat.len() != cfg.n() || self.chi.len() != cfg.m() {
            return Err(Error::Dimension("controller state does not match configuration".into()));
        }
        for (i, (t, iv)) in self.theta_hat.iter().zip(&sets.theta_box).enumerate() {
            if !iv.contains(*t) {
                return Err(Error::InvariantViolation(format!(
                    "theta_hat[{i}] = {t} outside [{}, {}]",
                    iv.lo, iv.hi
                )));
            }
        }
        if !sets.sigma_box().contains(self.sigma_hat) {
            return Err(Error::InvariantViolation(format!(
                "|sigma_hat| = {} exceeds delta = {}",
                self.sigma_hat.abs(),
                sets.delta
            )));
        }
        if !sets.omega.contains(self.omega_hat) {
            return Err(Error::InvariantViolation(format!(
                "omega_hat = {} outside [{}, {}]",
                self.omega_hat, sets.omega.lo, sets.omega.hi
            )));
        }
        Ok(())
    }

    /// `χ`, the output of the `D(s)` realization.
    pub fn chi_output(&self, cfg: &ControllerConfig) -> f64 {
        cfg.filter_realization().c().dot(&self.chi)
    }

    /// `u = -kχ`
    pub fn control(&self, cfg: &ControllerConfig) -> f64 {
        -cfg.k() * self.chi_output(cfg)
    }

    pub fn to_flat(&self, out: &mut [f64]) {
        let n = self.xhat.len();
        out[..n].copy_from_slice(self.xhat.as_slice());
        out[n..2 * n].copy_from_slice(self.theta_hat.as_slice());
        out[2 * n] = self.sigma_hat;
        out[2 * n + 1] = self.omega_hat;
        out[2 * n + 2..2 * n + 2 + self.chi.len()].copy_from_slice(self.chi.as_slice());
    }

    pub fn from_flat(cfg: &ControllerConfig, flat: &[f64]) -> Self {
        let (n, m) = (cfg.n(), cfg.m());
        Self {
            xhat: DVector::from_column_slice(&flat[..n]),
            theta_hat: DVector::from_column_slice(&flat[n..2 * n]),
            sigma_hat: flat[2 * n],
            omega_hat: flat[2 * n + 1],
            chi: DVector::from_column_slice(&flat[2 * n + 2..2 * n + 2 + m]),
        }
    }
}

/// Rates of `(θ̂, σ̂, ω̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRates {
    pub theta: DVector<f64>,
    pub sigma: f64,
    pub omega: f64,
}

/// Adaptive laws with `x̃ = x̂ - x_meas`:
/// `θ̂' = Proj(-Γ x x̃ᵀPb)`, `σ̂' = Proj(-Γ x̃ᵀPb)`, `ω̂' = Proj(-Γ u x̃ᵀPb)`,
/// gated on the boxes `Θ`, `[-Δ, Δ]` and `Ω`.
pub fn adaptive_rates(
    state: &ControllerState,
    x_meas: &[f64],
    u: f64,
    p: &DMatrix<f64>,
    b: &DVector<f64>,
    gamma_c: f64,
    sets: &UncertaintySets,
) -> Result<AdaptiveRates> {
    let n = state.xhat.len();
    if x_meas.len() != n || p.nrows() != n || b.len() != n || sets.n() != n {
        return Err(Error::Dimension("adaptive law operands differ in dimension".into()));
    }
    let pb = p * b;
    let err_pb: f64 = (0..n).map(|i| (state.xhat[i] - x_meas[i]) * pb[i]).sum();
    let raw_theta: Vec<f64> = x_meas.iter().map(|x| -gamma_c * x * err_pb).collect();
    let theta = proj(state.theta_hat.as_slice(), &raw_theta, &sets.theta_box)?;
    let sigma = proj_scalar(state.sigma_hat, -gamma_c * err_pb, sets.sigma_box())?;
    let omega = proj_scalar(state.omega_hat, -gamma_c * u * err_pb, sets.omega)?;
    Ok(AdaptiveRates {
        theta: DVector::from_vec(theta),
        sigma,
        omega,
    })
}

/// Time derivative of the flat controller state for measured state `x_meas`
/// and reference `r`. Returns `u` at this state.
pub(crate) fn controller_rates(cfg: &ControllerConfig, st: &[f64], x_meas: &[f64], r: f64, out: &mut [f64]) -> f64 {
    let (n, m) = (cfg.n(), cfg.m());
    let sets = &cfg.sets;
    let (xhat, rest) = st.split_at(n);
    let (theta, rest) = rest.split_at(n);
    let sigma = rest[0];
    let omega = rest[1];
    let chi = &rest[2..2 + m];

    let dss = &cfg.filter_ss;
    let chi_out: f64 = (0..m).map(|j| dss.c()[j] * chi[j]).sum();
    let u = -cfg.k * chi_out;

    let mut err_pb = 0.0;
    let mut theta_x = 0.0;
    for i in 0..n {
        err_pb += (xhat[i] - x_meas[i]) * cfg.pb[i];
        theta_x += theta[i] * x_meas[i];
    }
    let g = cfg.gamma_c;
    for i in 0..n {
        out[n + i] = gate(theta[i], -g * x_meas[i] * err_pb, sets.theta_box[i]);
    }
    out[2 * n] = gate(sigma, -g * err_pb, sets.sigma_box());
    out[2 * n + 1] = gate(omega, -g * u * err_pb, sets.omega);

    let drive = omega * u + theta_x + sigma;
    for i in 0..n {
        let mut acc = cfg.b[i] * drive;
        for j in 0..n {
            acc += cfg.a_m[(i, j)] * xhat[j];
        }
        out[i] = acc;
    }
    let r_u = drive - cfg.k_g * r;
    for i in 0..m {
        let mut acc = dss.b()[i] * r_u;
        for j in 0..m {
            acc += dss.a()[(i, j)] * chi[j];
        }
        out[2 * n + 2 + i] = acc;
    }
    u
}

/// Clips estimates back into their boxes after a step and enforces the step
/// guard. `before` and `after` are flat controller states.
pub(crate) fn clip_and_guard(cfg: &ControllerConfig, before: &[f64], after: &mut [f64], t: f64) -> Result<()> {
    let n = cfg.n();
    let sets = &cfg.sets;
    let check = |name: &'static str, old: f64, new: f64, iv: Interval| -> Result<()> {
        let limit = STEP_GUARD_FRACTION * iv.width();
        let change = (new - old).abs();
        if change > limit || !new.is_finite() {
            return Err(Error::StepGuard {
                t,
                estimate: name,
                change,
                limit,
            });
        }
        Ok(())
    };
    for i in 0..n {
        let iv = sets.theta_box[i];
        if iv.width() > 0.0 {
            check("theta_hat", before[n + i], after[n + i], iv)?;
        }
        after[n + i] = iv.clamp(after[n + i]);
    }
    check("sigma_hat", before[2 * n], after[2 * n], sets.sigma_box())?;
    after[2 * n] = sets.sigma_box().clamp(after[2 * n]);
    check("omega_hat", before[2 * n + 1], after[2 * n + 1], sets.omega)?;
    after[2 * n + 1] = sets.omega.clamp(after[2 * n + 1]);
    Ok(())
}

/// One RK4 step of the controller with `x_meas` and `r` held over the step.
/// Returns `u` at the start of the step and the advanced state.
pub fn controller_step(
    state: &ControllerState,
    x_meas: &[f64],
    r: f64,
    h: f64,
    cfg: &ControllerConfig,
) -> Result<(f64, ControllerState)> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if x_meas.len() != cfg.n() {
        return Err(Error::Dimension(format!("x_meas has {} entries", x_meas.len())));
    }
    state.check(cfg)?;
    let u0 = state.control(cfg);
    let mut y = vec![0.0; cfg.flat_len()];
    state.to_flat(&mut y);
    let before = y.clone();
    let mut rk = Rk4::new(y.len());
    rk.step(&mut y, h, |_, _, s, dy| {
        controller_rates(cfg, s, x_meas, r, dy);
        Ok(())
    })?;
    clip_and_guard(cfg, &before, &mut y, h)?;
    Ok((u0, ControllerState::from_flat(cfg, &y)))
}

/// Estimate errors against a known truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateErrors {
    /// `θ̃ = θ̂ - θ`
    pub theta: DVector<f64>,
    /// `σ̃ = σ̂ - (σ + η)`
    pub sigma: f64,
    /// `ω̃ = ω̂ - ω`
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveEstimates {
    pub theta_hat: DVector<f64>,
    pub sigma_hat: f64,
    pub omega_hat: f64,
    /// Present only when ground truth is attached.
    pub errors: Option<EstimateErrors>,
}

impl AdaptiveEstimates {
    pub fn of(state: &ControllerState) -> Self {
        Self {
            theta_hat: state.theta_hat.clone(),
            sigma_hat: state.sigma_hat,
            omega_hat: state.omega_hat,
            errors: None,
        }
    }

    /// `sigma_total` is `σ + η` at the same instant.
    pub fn with_truth(mut self, theta: &[f64], sigma_total: f64, omega: f64) -> Self {
        self.errors = Some(EstimateErrors {
            theta: &self.theta_hat - DVector::from_column_slice(theta),
            sigma: self.sigma_hat - sigma_total,
            omega: self.omega_hat - omega,
        });
        self
    }

    /// `r̃ = ω̃u + θ̃ᵀx + σ̃`, when truth is attached.
    pub fn lumped_error(&self, u: f64, x: &[f64]) -> Option<f64> {
        self.errors.as_ref().map(|e| {
            e.omega * u + e.theta.iter().zip(x).map(|(t, x)| t * x).sum::<f64>() + e.sigma
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn robot_sets() -> UncertaintySets {
        UncertaintySets {
            theta_box: vec![Interval { lo: -10.0, hi: 10.0 }; 2],
            delta0: 10.0,
            delta: 1000.0,
            omega0: Interval { lo: 0.2, hi: 5.0 },
            omega: Interval { lo: 0.1, hi: 50.0 },
            d_sigma: std::f64::consts::PI,
        }
    }

    fn robot_cfg() -> ControllerConfig {
        ControllerConfig::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.4]),
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            60.0,
            1e4,
            robot_sets(),
        )
        .unwrap()
    }

    #[test]
    fn k_g_examples() {
        let cfg = robot_cfg();
        assert!((cfg.k_g() - 1.0).abs() < 1e-14);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let g = k_g(&(-DMatrix::<f64>::identity(2, 2)), &e1, &e1).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert!(k_g(&(-DMatrix::<f64>::identity(2, 2)), &e1, &e2).is_err());
    }

    #[test]
    fn projection_gate() {
        let iv = Interval { lo: -1.0, hi: 1.0 };
        assert_eq!(proj_scalar(0.3, 7.0, iv).unwrap(), 7.0);
        assert_eq!(proj_scalar(1.0, 5.0, iv).unwrap(), 0.0);
        assert_eq!(proj_scalar(1.0, -5.0, iv).unwrap(), -5.0);
        assert_eq!(proj_scalar(-1.0, -5.0, iv).unwrap(), 0.0);
        assert!(matches!(proj_scalar(1.5, 0.0, iv), Err(Error::InvariantViolation(_))));
        assert_eq!(proj(&[1.0, 0.0], &[2.0, 2.0], &[iv, iv]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn scalar_adaptive_rates() {
        let sets = UncertaintySets {
            theta_box: vec![Interval { lo: -5.0, hi: 5.0 }],
            delta0: 1.0,
            delta: 2.0,
            omega0: Interval { lo: 0.5, hi: 2.0 },
            omega: Interval { lo: 0.1, hi: 5.0 },
            d_sigma: 1.0,
        };
        let st = ControllerState {
            xhat: DVector::from_vec(vec![1.1]),
            theta_hat: DVector::from_vec(vec![0.0]),
            sigma_hat: 0.0,
            omega_hat: 1.0,
            chi: DVector::zeros(1),
        };
        let p = DMatrix::from_element(1, 1, 1.0);
        let b = DVector::from_vec(vec![1.0]);
        let u = 0.7;
        let rates = adaptive_rates(&st, &[1.0], u, &p, &b, 10.0, &sets).unwrap();
        assert!((rates.theta[0] + 1.0).abs() < 1e-12);
        assert!((rates.sigma + 1.0).abs() < 1e-12);
        assert!((rates.omega + u).abs() < 1e-12);

        let zero_err = ControllerState {
            xhat: DVector::from_vec(vec![1.0]),
            ..st.clone()
        };
        let rates = adaptive_rates(&zero_err, &[1.0], u, &p, &b, 10.0, &sets).unwrap();
        assert_eq!((rates.theta[0], rates.sigma, rates.omega), (0.0, 0.0, 0.0));

        // θ̂ pinned at the upper face, drive pushes outward (x̃ < 0)
        let pinned = ControllerState {
            xhat: DVector::from_vec(vec![0.9]),
            theta_hat: DVector::from_vec(vec![5.0]),
            ..st
        };
        let rates = adaptive_rates(&pinned, &[1.0], u, &p, &b, 10.0, &sets).unwrap();
        assert_eq!(rates.theta[0], 0.0);
    }

    #[test]
    fn equilibrium_step() {
        let cfg = robot_cfg();
        let st = ControllerState::zero(&cfg);
        let (u, next) = controller_step(&st, &[0.0, 0.0], 0.0, 1e-5, &cfg).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(next, st);
    }

    #[test]
    fn first_step_integrates_reference() {
        let cfg = robot_cfg();
        let init = InitialEstimates {
            theta_hat: None,
            sigma_hat: 0.0,
            omega_hat: Some(1.0),
        };
        let st = ControllerState::initial(&cfg, &[0.0, 0.0], &init).unwrap();
        let h = 1e-4;
        let (u, next) = controller_step(&st, &[0.0, 0.0], 1.0, h, &cfg).unwrap();
        assert_eq!(u, 0.0);
        // χ' = ω̂u - k_g r with u = -kχ: χ(h) = -k_g r h + O(h²)
        let chi = next.chi_output(&cfg);
        assert!((chi + cfg.k_g() * h).abs() < 10.0 * h * h * cfg.k(), "{chi}");
    }

    #[test]
    fn omega_hat_frozen_on_boundary() {
        let cfg = robot_cfg().with_gamma_c(100.0).unwrap();
        let init = InitialEstimates {
            theta_hat: None,
            sigma_hat: 0.0,
            omega_hat: Some(50.0),
        };
        let mut st = ControllerState::initial(&cfg, &[0.0, 0.0], &init).unwrap();
        // u < 0 (χ > 0) and x̃ᵀPb < 0 give ω̂' = -Γ u x̃ᵀPb < 0 ... pick x_meas so drive is outward
        st.chi[0] = -0.01; // u = +0.6
        let x_meas = [0.0, 1.0]; // x̃ = -x_meas, x̃ᵀPb < 0 so ω̂' > 0
        for _ in 0..1000 {
            let (_, next) = controller_step(&st, &x_meas, 0.0, 1e-6, &cfg).unwrap();
            assert_eq!(next.omega_hat, 50.0);
            st = next;
        }
    }

    #[test]
    fn c_over_omega_realization_matches_formula() {
        let cfg = robot_cfg();
        let f = cfg.c_over_omega(2.0);
        for w in [0.1, 10.0, 300.0] {
            let expect = RationalTF::first_order(cfg.k(), 2.0 * cfg.k()).freq_response(w).unwrap();
            assert!((f.freq_response(w).unwrap() - expect).norm() < 1e-12 * expect.norm());
        }
    }

    #[test]
    fn ordering_enforced() {
        let mut s = robot_sets();
        s.omega = s.omega0;
        assert!(s.validate().is_err());
        let mut s = robot_sets();
        s.delta = s.delta0;
        assert!(s.validate().is_err());
    }
}
