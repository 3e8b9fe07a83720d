//! Impulse responses and the L1 gain `∫₀^∞ |h(t)| dt`.

use nalgebra::{DMatrix, DVector};

use super::eig::{eigenvalues, lyapunov_solve, symmetric_eigenvalues, HURWITZ_MARGIN};
use super::ss::StateSpace;
use crate::error::{Error, Result};

pub const DEFAULT_L1_REL_TOL: f64 = 1e-6;

const MAX_L1_STEPS: usize = 50_000_000;

/// Samples `h(t) = cᵀe^{At}b` at `t = 0, h, …, T`, stepping with one
/// exponential `e^{Ah}`.
pub fn impulse_response(sys: &StateSpace, step: f64, horizon: f64) -> Result<Vec<f64>> {
    if !sys.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    if !(step > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need step > 0 and horizon >= 0, got step = {step}, horizon = {horizon}"
        )));
    }
    let count = (horizon / step + 1e-9).floor() as usize;
    let phi = (sys.a() * step).exp();
    let mut z = sys.b().clone();
    let mut out = Vec::with_capacity(count + 1);
    out.push(sys.c().dot(&z));
    for _ in 0..count {
        z = &phi * z;
        out.push(sys.c().dot(&z));
    }
    Ok(out)
}

/// `[[e^{Aδ}, ∫₀^δ e^{As} ds]]` from one exponential of the augmented matrix.
fn propagators(a: &DMatrix<f64>, delta: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut aug = DMatrix::<f64>::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * delta));
    aug.view_mut((0, n), (n, n))
        .copy_from(&(DMatrix::<f64>::identity(n, n) * delta));
    let e = aug.exp();
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    )
}

/// L1 gain of a stable, strictly proper system.
///
/// The impulse response is propagated exactly with `e^{Aδ}` and integrated
/// exactly over each step with `∫₀^δ e^{As} ds`; steps containing a sign change
/// are split at the located zero, so the sum of absolute segment integrals is
/// `∫|h|` up to roundoff. Integration stops once the Lyapunov tail bound
///
/// ```text
/// ∫_t^∞ |h| ≤ 2 λ_max(P) · sqrt(cᵀP⁻¹c) · sqrt(z(t)ᵀ P z(t)),   AᵀP + PA = -I
/// ```
///
/// drops below `rel_tol` times the accumulated integral.
pub fn l1_gain(sys: &StateSpace, rel_tol: f64) -> Result<f64> {
    if !sys.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let a = sys.a();
    let n = sys.order();
    let spectrum = eigenvalues(a)?;
    let abscissa = spectrum.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= -HURWITZ_MARGIN {
        return Err(Error::UnstableSystem {
            spectral_abscissa: abscissa,
        });
    }
    let c = sys.c();
    if c.amax() == 0.0 || sys.b().amax() == 0.0 {
        return Ok(0.0);
    }

    let p = lyapunov_solve(a, &DMatrix::identity(n, n))?;
    let lambda_max = *symmetric_eigenvalues(&p)?.last().expect("n >= 1");
    let p_inv_c = p
        .clone()
        .lu()
        .solve(c)
        .ok_or_else(|| Error::Singular("Lyapunov solution".into()))?;
    let tail_gain = 2.0 * lambda_max * c.dot(&p_inv_c).max(0.0).sqrt();
    let tail = |z: &DVector<f64>| tail_gain * z.dot(&(&p * z)).max(0.0).sqrt();

    // at most a quarter turn of the fastest mode per step keeps sign changes isolated
    let rho = spectrum.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let delta = 0.25 / rho;
    let (phi, psi) = propagators(a, delta);
    let c_psi = psi.transpose() * c;

    let mut z = sys.b().clone();
    let mut h0 = c.dot(&z);
    let mut total = 0.0;
    for step in 0..MAX_L1_STEPS {
        let z_next = &phi * &z;
        let h1 = c.dot(&z_next);
        let segment = c_psi.dot(&z);
        if h0 * h1 < 0.0 {
            let t_zero = locate_zero(a, c, &z, delta, h0);
            let (_, psi_part) = propagators(a, t_zero);
            let first = c.dot(&(psi_part * &z));
            total += first.abs() + (segment - first).abs();
        } else {
            total += segment.abs();
        }
        z = z_next;
        h0 = h1;
        if step % 16 == 15 {
            let remaining = tail(&z);
            if remaining <= rel_tol * total || remaining < f64::MIN_POSITIVE {
                return Ok(total);
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "L1 integral tail still above tolerance after {MAX_L1_STEPS} steps"
    )))
}

/// Zero of `cᵀe^{As}z` on `(0, delta)` given opposite signs at the ends.
fn locate_zero(a: &DMatrix<f64>, c: &DVector<f64>, z: &DVector<f64>, delta: f64, h0: f64) -> f64 {
    let f = |s: f64| c.dot(&((a * s).exp() * z));
    let (mut lo, mut hi) = (0.0, delta);
    let lo_sign = h0.signum();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// L1 gain of a proper system: `|d| + ‖strictly proper part‖_L1`.
pub fn l1_gain_proper(sys: &StateSpace, rel_tol: f64) -> Result<f64> {
    Ok(sys.d().abs() + l1_gain(&sys.strictly_proper_part(), rel_tol)?)
}

/// MIMO L1 gain: the largest row sum of element gains. `rows[i][j]` is the
/// channel from input `j` to output `i`.
pub fn l1_gain_mimo(rows: &[Vec<StateSpace>], rel_tol: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for row in rows {
        let mut sum = 0.0;
        for sys in row {
            sum += l1_gain_proper(sys, rel_tol)?;
        }
        worst = worst.max(sum);
    }
    Ok(worst)
}
