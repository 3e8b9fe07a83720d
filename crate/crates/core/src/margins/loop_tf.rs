//! Transfer functions of the equivalent LTI loop: `C(s)`, `G(s) = H(1 - C)`
//! and the open loop `H_o(s)`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::l1ctrl::{loop_filter, Interval};
use crate::linsys::{
    hbar_realization, is_hurwitz, l1_gain, poly, spectral_abscissa, RationalTF, StateSpace, DEFAULT_L1_REL_TOL,
};

/// Relative tolerance for `C(0) = 1` and the dual-path `H_o` check.
const DC_TOL: f64 = 1e-9;
const DUAL_PATH_TOL: f64 = 1e-9;

/// `C(s) = ωkD/(1 + ωkD)`, checked stable, strictly proper and `C(0) = 1`.
pub fn checked_loop_filter(d: &RationalTF, omega: f64, k: f64) -> Result<RationalTF> {
    if !d.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let c = loop_filter(d, omega, k)?;
    if !c.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let poles = poly::roots(c.den())?;
    let abscissa = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::UnstableSystem {
            spectral_abscissa: abscissa,
        });
    }
    let dc = c.dc_gain().unwrap_or(f64::NAN);
    if !((dc - 1.0).abs() <= DC_TOL) {
        return Err(Error::Precondition(format!(
            "C(0) must equal 1 (D needs a pole at the origin), got {dc}"
        )));
    }
    Ok(c)
}

/// `ω` samples of an interval: both endpoints and five interior points.
pub fn omega_samples(omega: Interval) -> Vec<f64> {
    omega.samples(7)
}

/// Rows of `G(s) = (sI - A_m)⁻¹ b (1 - C(s))`, one strictly proper
/// realization per state.
pub fn g_rows(a_m: &DMatrix<f64>, b: &DVector<f64>, c: &RationalTF) -> Result<Vec<StateSpace>> {
    let one_minus = c.one_minus().to_state_space()?;
    let n = a_m.nrows();
    let h = StateSpace::strictly_proper(a_m.clone(), b.clone(), DVector::zeros(n))?;
    (0..n)
        .map(|i| Ok(one_minus.series(&h.state_output(i)?)))
        .collect()
}

/// `‖G‖_L1 = max_i ‖G_i‖_L1`
pub fn g_l1(a_m: &DMatrix<f64>, b: &DVector<f64>, c: &RationalTF) -> Result<f64> {
    let mut worst = 0.0f64;
    for row in g_rows(a_m, b, c)? {
        worst = worst.max(l1_gain(&row, DEFAULT_L1_REL_TOL)?);
    }
    Ok(worst)
}

/// Outcome of the L1-gain stability requirement `‖G‖_L1 · L < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Condition {
    /// Worst `‖G‖_L1 · L` over the sampled `ω`.
    pub value: f64,
    pub holds: bool,
    pub l: f64,
    pub worst_omega: f64,
    /// `(ω, ‖G‖_L1)` per sample.
    pub per_omega: Vec<(f64, f64)>,
}

/// Evaluates `‖G‖_L1 · L` with `C` built for every sampled `ω` in
/// `omega_interval` (endpoints plus interior points) and reports the worst.
pub fn check_l1_condition(
    a_m: &DMatrix<f64>,
    b: &DVector<f64>,
    theta_box: &[Interval],
    omega_interval: Interval,
    k: f64,
    d: &RationalTF,
) -> Result<L1Condition> {
    if !is_hurwitz(a_m) {
        return Err(Error::NotHurwitz {
            spectral_abscissa: spectral_abscissa(a_m)?,
        });
    }
    if theta_box.len() != a_m.nrows() {
        return Err(Error::Dimension("theta box does not match A_m".into()));
    }
    if !(omega_interval.lo > 0.0) {
        return Err(Error::InvalidArgument("omega interval must be positive".into()));
    }
    let l: f64 = theta_box.iter().map(Interval::abs_max).sum();
    let mut per_omega = Vec::new();
    let (mut value, mut worst_omega) = (f64::NEG_INFINITY, omega_interval.lo);
    for w in omega_samples(omega_interval) {
        let c = checked_loop_filter(d, w, k)?;
        let g = g_l1(a_m, b, &c)?;
        per_omega.push((w, g));
        if g * l > value {
            value = g * l;
            worst_omega = w;
        }
    }
    Ok(L1Condition {
        value,
        holds: value < 1.0,
        l,
        worst_omega,
        per_omega,
    })
}

/// Open-loop transfer function of the equivalent LTI loop,
///
/// ```text
/// H_o(s) = C(s)(1 + θᵀH̄(s)) / (1 - C(s)),   H̄(s) = (sI - A_m - bθᵀ)⁻¹ b
/// ```
///
/// assembled as polynomials: with `D = D_n/D_d`, `C/(1 - C) = ωkD_n/D_d` and
/// `1 + θᵀH̄ = det(sI - A_m)/det(sI - A_m - bθᵀ)`. The result is checked
/// against pointwise evaluation of the defining expression.
pub fn open_loop_ho(
    a_m: &DMatrix<f64>,
    b: &DVector<f64>,
    theta: &DVector<f64>,
    omega: f64,
    k: f64,
    d: &RationalTF,
) -> Result<RationalTF> {
    let hbar = hbar_realization(a_m, b, theta)?;
    let (nums, dbar) = hbar.state_transfer();
    // d̄ + θᵀN̄ = det(sI - A_m)
    let mut one_plus = dbar.clone();
    for (ti, ni) in theta.iter().zip(&nums) {
        one_plus = poly::add(&one_plus, &poly::scale(ni, *ti));
    }
    let num = poly::scale(&poly::mul(d.num(), &one_plus), omega * k);
    let den = poly::mul(d.den(), &dbar);
    let ho = RationalTF::new(num, den)?;

    let scale_n = ho.num().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let scale_d = ho.den().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let n0 = ho.num().first().copied().unwrap_or(0.0);
    let d0 = ho.den().first().copied().unwrap_or(0.0);
    if n0.abs() <= 1e-12 * scale_n && d0.abs() <= 1e-12 * scale_d {
        return Err(Error::CancellationAtOrigin { num: n0, den: d0 });
    }

    for w in [1e-2, 1.0, 10.0, 1e3] {
        let direct = match open_loop_ho_direct(a_m, b, theta, omega, k, d, w) {
            Ok(v) => v,
            // a pole of H̄ or of 1/(1 - C) on the axis: no comparison there
            Err(Error::PoleOnAxis { .. }) => continue,
            Err(e) => return Err(e),
        };
        let Some(assembled) = ho.eval(Complex::new(0.0, w)) else { continue };
        if (direct - assembled).norm() > DUAL_PATH_TOL * assembled.norm() {
            return Err(Error::InvariantViolation(format!(
                "H_o assembly disagrees with direct evaluation at ω = {w}: {assembled} vs {direct}"
            )));
        }
    }
    Ok(ho)
}

/// `C(1 + θᵀH̄)/(1 - C)` evaluated directly at `s = iw`.
pub fn open_loop_ho_direct(
    a_m: &DMatrix<f64>,
    b: &DVector<f64>,
    theta: &DVector<f64>,
    omega: f64,
    k: f64,
    d: &RationalTF,
    w: f64,
) -> Result<Complex<f64>> {
    let c = loop_filter(d, omega, k)?.freq_response(w)?;
    let hbar = hbar_realization(a_m, b, theta)?.with_output(theta.clone(), 0.0)?;
    let th = hbar.freq_response(w)?;
    let one_minus = Complex::new(1.0, 0.0) - c;
    if one_minus.norm() == 0.0 {
        return Err(Error::PoleOnAxis { omega: w });
    }
    Ok(c * (th + 1.0) / one_minus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn robot() -> (DMatrix<f64>, DVector<f64>) {
        (
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.4]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
    }

    #[test]
    fn ho_integrator_for_zero_theta() {
        let (a, b) = robot();
        let ho = open_loop_ho(&a, &b, &DVector::zeros(2), 1.0, 60.0, &RationalTF::integrator(1.0)).unwrap();
        for w in [0.1, 60.0, 1e3] {
            let v = ho.freq_response(w).unwrap();
            assert!((v - Complex::new(0.0, -60.0 / w)).norm() < 1e-12 * 60.0 / w);
        }
    }

    #[test]
    fn ho_robot_arm_closed_form() {
        let (a, b) = robot();
        let theta = DVector::from_vec(vec![2.0, 2.0]);
        let ho = open_loop_ho(&a, &b, &theta, 1.0, 60.0, &RationalTF::integrator(1.0)).unwrap();
        // (60/s)(s² + 1.4s + 1)/(s² - 0.6s - 1)
        let expect = RationalTF::new(vec![60.0, 84.0, 60.0], vec![0.0, -1.0, -0.6, 1.0]).unwrap();
        for w in [1e-3, 0.5, 60.0, 1e4] {
            let (p, q) = (ho.freq_response(w).unwrap(), expect.freq_response(w).unwrap());
            assert!((p - q).norm() <= 1e-12 * q.norm());
        }
    }

    #[test]
    fn l1_condition_trivial_box() {
        let (a, b) = robot();
        let cond = check_l1_condition(
            &a,
            &b,
            &[Interval::point(0.0), Interval::point(0.0)],
            Interval { lo: 0.2, hi: 5.0 },
            60.0,
            &RationalTF::integrator(1.0),
        )
        .unwrap();
        assert_eq!(cond.value, 0.0);
        assert!(cond.holds);
    }

    #[test]
    fn loop_filter_checks() {
        assert!(checked_loop_filter(&RationalTF::integrator(1.0), 1.0, 60.0).is_ok());
        // no pole at the origin: C(0) != 1
        let d = RationalTF::first_order(1.0, 1.0);
        assert!(matches!(checked_loop_filter(&d, 1.0, 60.0), Err(Error::Precondition(_))));
        let biproper = RationalTF::new(vec![1.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(checked_loop_filter(&biproper, 1.0, 1.0), Err(Error::NotStrictlyProper));
    }
}
