//! Transient-bound evaluators: `θ_m`, the prediction-error bound, `γ₁`,
//! `γ₂`, and the delay-dependent `θ_m(ε_b, τ)`, `ε_c(ε_b, τ)` pair.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1ctrl::{ControllerConfig, Interval, UncertaintySets};
use crate::linsys::{l1_gain_proper, poly, spectral_summary, RationalTF, StateSpace, DEFAULT_L1_REL_TOL};

use super::loop_tf::{checked_loop_filter, g_l1, omega_samples};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theta_m: f64,
    /// `sqrt(θ_m/(λ_min(P)Γ_c))`, bound on `‖x̂ - x‖_∞`.
    pub xtilde_bound: f64,
    /// Bound on `‖x - x_ref‖_∞`.
    pub gamma1: f64,
    /// Bound on `‖u - u_ref‖_∞`, when a suitable `c_o` exists.
    pub gamma2: Option<f64>,
    pub c_o: Option<Vec<f64>>,
    /// Worst `‖C‖_L1` over the sampled `Ω₀`.
    pub c_l1: f64,
    /// Worst `‖G‖_L1` over the sampled `Ω₀`.
    pub g_l1: f64,
    pub l: f64,
    /// Why `γ₂` is missing, when it is.
    pub note: Option<String>,
}

/// `4 max Σθᵢ² + 4Δ² + 4(ω_u - ω_l)² + 2(λ_max(P)/λ_min(Q))·b_σ·Δ`, with the
/// maximum over the box taken per axis and `b_σ = d_sigma`.
pub fn theta_m_lemma5(
    theta_box: &[Interval],
    delta: f64,
    omega: Interval,
    d_sigma: f64,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<f64> {
    let spectrum = spectral_summary(p, q)?;
    let theta_sq: f64 = theta_box.iter().map(|iv| iv.abs_max().powi(2)).sum();
    Ok(4.0 * theta_sq
        + 4.0 * delta * delta
        + 4.0 * omega.width().powi(2)
        + 2.0 * spectrum.lambda_max_p / spectrum.lambda_min_q * d_sigma * delta)
}

/// `c_oᵀH(s) = c_oᵀ(sI - A_m)⁻¹b` as `(numerator, det(sI - A_m))`.
fn co_transfer(a_m: &DMatrix<f64>, b: &DVector<f64>, c_o: &DVector<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = StateSpace::strictly_proper(a_m.clone(), b.clone(), c_o.clone())?;
    let tf = h.to_rational();
    Ok((tf.num().to_vec(), tf.den().to_vec()))
}

/// Relative degree one with every zero in the open left half-plane.
fn is_min_phase_rd1(num: &[f64], den: &[f64]) -> Result<bool> {
    let num = poly::trim(num.to_vec());
    let (Some(dn), Some(dd)) = (poly::degree(&num), poly::degree(den)) else {
        return Ok(false);
    };
    if dd != dn + 1 {
        return Ok(false);
    }
    if dn == 0 {
        return Ok(true);
    }
    Ok(poly::roots(&num)?.iter().all(|z| z.re < 0.0))
}

/// Tries `c`, then each basis vector `e_j`, and finally the `c_o` placing
/// every zero of `c_oᵀH` at `-1`; returns the first making `c_oᵀH` minimum
/// phase with relative degree one.
pub fn find_c_o(a_m: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<Option<DVector<f64>>> {
    let n = a_m.nrows();
    let mut candidates = vec![c.clone()];
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        candidates.push(e);
    }
    for cand in &candidates {
        let (num, den) = co_transfer(a_m, b, cand)?;
        if is_min_phase_rd1(&num, &den)? {
            return Ok(Some(cand.clone()));
        }
    }
    // Numerators of the individual states span the candidates' numerators:
    // solve Σ c_j N_j = (s + 1)^{n-1}.
    let h = StateSpace::strictly_proper(a_m.clone(), b.clone(), DVector::zeros(n))?;
    let (nums, _) = h.state_transfer();
    let mut basis = DMatrix::zeros(n, n);
    for (j, nj) in nums.iter().enumerate() {
        for (i, v) in nj.iter().enumerate().take(n) {
            basis[(i, j)] = *v;
        }
    }
    let mut target = vec![1.0];
    for _ in 1..n {
        target = poly::mul(&target, &[1.0, 1.0]);
    }
    let Some(sol) = basis.lu().solve(&DVector::from_vec(target)) else {
        return Ok(None);
    };
    if sol.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    let (num, den) = co_transfer(a_m, b, &sol)?;
    Ok(is_min_phase_rd1(&num, &den)?.then_some(sol))
}

/// `‖F(s)/(c_oᵀH(s)) · c_oᵀ‖_L1 = ‖F/(c_oᵀH)‖_L1 · ‖c_o‖₁` for a SISO `F`.
fn inverse_co_l1(f: &RationalTF, a_m: &DMatrix<f64>, b: &DVector<f64>, c_o: &DVector<f64>) -> Result<f64> {
    let (num, den) = co_transfer(a_m, b, c_o)?;
    let tf = RationalTF::new(poly::mul(f.num(), &den), poly::mul(f.den(), &num))?;
    if !tf.is_proper() {
        return Err(Error::Improper {
            num: tf.num_degree().unwrap_or(0),
            den: tf.den_degree(),
        });
    }
    let gain = l1_gain_proper(&tf.to_state_space()?, DEFAULT_L1_REL_TOL)?;
    Ok(gain * c_o.iter().map(|v| v.abs()).sum::<f64>())
}

/// `C(s)/ω = kD/(1 + ωkD)`.
fn c_over_omega_tf(d: &RationalTF, omega: f64, k: f64) -> Result<RationalTF> {
    Ok(checked_loop_filter(d, omega, k)?.scale(1.0 / omega))
}

/// `γ₁ = ‖C‖_L1/(1 - ‖G‖_L1 L) · sqrt(θ_m/(λ_max(P)Γ_c))` and, when `c_o` is
/// given or found, `γ₂ = ‖(C/ω)θᵀ‖_L1 γ₁ + ‖(C/ω)(c_oᵀH)⁻¹c_oᵀ‖_L1 ·
/// sqrt(θ_m/(λ_max(P)Γ_c))`. The `ω`-dependent norms take their worst value
/// over the sampled `Ω₀`; `θ_m` uses the projection sets `Δ`, `Ω`.
///
/// Errors when `‖G‖_L1 L ≥ 1` at any sampled `ω`: the bounds do not apply.
pub fn transient_bounds(
    cfg: &ControllerConfig,
    sets: &UncertaintySets,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    gamma_c: f64,
    c_o: Option<&DVector<f64>>,
) -> Result<BoundReport> {
    if !(gamma_c > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma_c must be positive, got {gamma_c}")));
    }
    sets.validate()?;
    let spectrum = spectral_summary(p, q)?;
    let theta_m = theta_m_lemma5(&sets.theta_box, sets.delta, sets.omega, sets.d_sigma, p, q)?;
    let l = sets.l_bound();
    let (a_m, b, k, d) = (cfg.a_m(), cfg.b(), cfg.k(), cfg.filter());

    let omegas = omega_samples(sets.omega0);
    let (mut c_l1, mut g_worst, mut cw_l1) = (0.0f64, 0.0f64, 0.0f64);
    for &w in &omegas {
        let c = checked_loop_filter(d, w, k)?;
        c_l1 = c_l1.max(l1_gain_proper(&c.to_state_space()?, DEFAULT_L1_REL_TOL)?);
        g_worst = g_worst.max(g_l1(a_m, b, &c)?);
        cw_l1 = cw_l1.max(l1_gain_proper(&c_over_omega_tf(d, w, k)?.to_state_space()?, DEFAULT_L1_REL_TOL)?);
    }
    if g_worst * l >= 1.0 {
        return Err(Error::Precondition(format!(
            "L1 condition fails on Ω₀: ‖G‖_L1·L = {} ≥ 1",
            g_worst * l
        )));
    }
    let root = (theta_m / (spectrum.lambda_max_p * gamma_c)).sqrt();
    let gamma1 = c_l1 / (1.0 - g_worst * l) * root;
    let xtilde_bound = (theta_m / (spectrum.lambda_min_p * gamma_c)).sqrt();

    let (c_o, note) = match c_o {
        Some(v) => {
            let (num, den) = co_transfer(a_m, b, v)?;
            if is_min_phase_rd1(&num, &den)? {
                (Some(v.clone()), None)
            } else {
                (None, Some("supplied c_o does not give a minimum-phase, relative-degree-one c_oᵀH".to_string()))
            }
        }
        None => match find_c_o(a_m, b, cfg.c())? {
            Some(v) => (Some(v), None),
            None => (None, Some("no c_o with minimum-phase, relative-degree-one c_oᵀH found".to_string())),
        },
    };
    let gamma2 = match &c_o {
        Some(v) => {
            let mut second = 0.0f64;
            for &w in &omegas {
                second = second.max(inverse_co_l1(&c_over_omega_tf(d, w, k)?, a_m, b, v)?);
            }
            Some(cw_l1 * l * gamma1 + second * root)
        }
        None => None,
    };
    Ok(BoundReport {
        theta_m,
        xtilde_bound,
        gamma1,
        gamma2,
        c_o: c_o.map(|v| v.iter().copied().collect()),
        c_l1,
        g_l1: g_worst,
        l,
        note,
    })
}

/// Delay-dependent bound quantities for a given `ε_b` and `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonC {
    /// `θ_m(ε_b, τ)`
    pub theta_m: f64,
    /// `ε_c(ε_b, τ)`
    pub epsilon_c: f64,
    /// Projection bound `Δ = Δ_n + δ₁`.
    pub delta: f64,
    /// Smallest admissible adaptation gain `sqrt(ε_c) + δ₂`.
    pub gamma_c_min: f64,
}

/// Inputs to [`epsilon_c_eval`] that the toolkit does not compute: the
/// bounds `Δ_n ≥ ‖σ + η‖_∞` and `Δ_d ≥ ‖σ̇ + η̇‖_∞`, and the slack constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBoundInputs {
    pub delta_n: f64,
    pub delta_d: f64,
    pub delta1: f64,
    pub delta2: f64,
}

/// Evaluates, with `Δ = Δ_n + δ₁`,
///
/// ```text
/// θ_m(ε_b, τ) = 4 max Σθᵢ² + 4Δ² + 4(ω_u - ω_l)² + 2λ_max(P)Δ_dΔ/λ_min(Q)
/// ε_c(ε_b, τ) = ‖C (c_oᵀH)⁻¹ c_oᵀ‖_L1 · sqrt(θ_m(ε_b, τ)/(λ_max(P)ε_b²))
/// ```
///
/// and the implied minimum `Γ_c = sqrt(ε_c) + δ₂`. `τ` enters only through
/// the caller's `Δ_n`, `Δ_d`; it is checked nonnegative.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_c_eval(
    epsilon_b: f64,
    tau: f64,
    inputs: DelayBoundInputs,
    sets: &UncertaintySets,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    c_o: &DVector<f64>,
    h: &StateSpace,
    c: &RationalTF,
) -> Result<EpsilonC> {
    if !(epsilon_b > 0.0) || !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need epsilon_b > 0 and tau >= 0, got {epsilon_b}, {tau}"
        )));
    }
    let DelayBoundInputs {
        delta_n,
        delta_d,
        delta1,
        delta2,
    } = inputs;
    if [delta_n, delta_d, delta1, delta2].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("delta_n, delta_d, delta1, delta2 must be nonnegative".into()));
    }
    let spectrum = spectral_summary(p, q)?;
    let delta = delta_n + delta1;
    let theta_m = 4.0 * sets.theta_sq_max()
        + 4.0 * delta * delta
        + 4.0 * sets.omega.width().powi(2)
        + 2.0 * spectrum.lambda_max_p * delta_d * delta / spectrum.lambda_min_q;
    let norm = inverse_co_l1(c, h.a(), h.b(), c_o)?;
    let epsilon_c = norm * (theta_m / (spectrum.lambda_max_p * epsilon_b * epsilon_b)).sqrt();
    Ok(EpsilonC {
        theta_m,
        epsilon_c,
        delta,
        gamma_c_min: epsilon_c.sqrt() + delta2,
    })
}
