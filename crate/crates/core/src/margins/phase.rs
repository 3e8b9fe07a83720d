//! Gain-crossover search, phase margin and time-delay margin.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::{FrequencyGrid, RationalTF};

const BISECTION_REL_TOL: f64 = 1e-8;
/// Decades added on each side per retry when no crossover is found.
const MAX_GRID_EXTENSIONS: usize = 3;

/// One gain crossover `|H_o(iω_c)| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub omega_c: f64,
    /// `π + ∠H_o(iω_c)`, wrapped into `(-π, π]`.
    pub pm: f64,
    /// Unwrapped phase at the crossover, continued along the grid.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMargin {
    /// Smallest margin over all crossings.
    pub pm: f64,
    pub omega_c: f64,
    pub crossings: Vec<Crossing>,
}

impl PhaseMargin {
    /// `𝒯 = pm/ω_c`
    pub fn delay_margin(&self) -> f64 {
        self.pm / self.omega_c
    }
}

fn eval(ho: &RationalTF, w: f64) -> Result<Complex<f64>> {
    let v = ho.freq_response(w)?;
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::PoleOnAxis { omega: w });
    }
    Ok(v)
}

fn wrap(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Phase continued from `reference` to the nearest branch of `arg v`.
fn continue_phase(reference: f64, v: Complex<f64>) -> f64 {
    let raw = v.arg();
    raw + 2.0 * PI * ((reference - raw) / (2.0 * PI)).round()
}

/// Locates every gain crossover on the grid span (sign changes of
/// `log|H_o|`, refined by bisection in `log ω` to 1e-8 relative) and returns
/// the smallest phase margin. The phase is unwrapped along the grid.
pub fn phase_margin(ho: &RationalTF, grid: &FrequencyGrid) -> Result<PhaseMargin> {
    let omegas = grid.omegas();
    let mut values = Vec::with_capacity(omegas.len());
    for &w in omegas {
        values.push(eval(ho, w)?);
    }
    let mut phases = Vec::with_capacity(omegas.len());
    let mut prev = values[0].arg();
    for v in &values {
        prev = continue_phase(prev, *v);
        phases.push(prev);
    }

    let logmag = |v: Complex<f64>| v.norm().ln();
    let mut crossings = Vec::new();
    for i in 0..omegas.len() - 1 {
        let (f0, f1) = (logmag(values[i]), logmag(values[i + 1]));
        let omega_c = if f0 == 0.0 {
            omegas[i]
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (omegas[i].ln(), omegas[i + 1].ln());
            let lo_sign = f0.signum();
            while (hi - lo) > BISECTION_REL_TOL * 0.5 {
                let mid = 0.5 * (lo + hi);
                let fm = logmag(eval(ho, mid.exp())?);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (0.5 * (lo + hi)).exp()
        } else {
            continue;
        };
        let phase = continue_phase(phases[i], eval(ho, omega_c)?);
        crossings.push(Crossing {
            omega_c,
            pm: wrap(PI + phase),
            phase,
        });
    }
    let last = omegas.len() - 1;
    if logmag(values[last]) == 0.0 {
        crossings.push(Crossing {
            omega_c: omegas[last],
            pm: wrap(PI + phases[last]),
            phase: phases[last],
        });
    }
    let worst = crossings
        .iter()
        .copied()
        .min_by(|a, b| a.pm.total_cmp(&b.pm))
        .ok_or(Error::NoCrossover {
            lo: omegas[0],
            hi: omegas[last],
        })?;
    Ok(PhaseMargin {
        pm: worst.pm,
        omega_c: worst.omega_c,
        crossings,
    })
}

/// [`phase_margin`], extending the grid by a decade on each side (up to
/// three times) while no crossover is found.
pub fn phase_margin_extending(ho: &RationalTF, grid: &FrequencyGrid) -> Result<PhaseMargin> {
    let mut grid = grid.clone();
    for attempt in 0..=MAX_GRID_EXTENSIONS {
        match phase_margin(ho, &grid) {
            Err(Error::NoCrossover { .. }) if attempt < MAX_GRID_EXTENSIONS => grid = grid.extended(),
            other => return other,
        }
    }
    unreachable!("the last attempt returns")
}

/// One Bode-plot sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodePoint {
    pub omega: f64,
    pub magnitude_db: f64,
    /// Unwrapped along the grid, starting from the principal value.
    pub phase_deg: f64,
}

/// Magnitude and unwrapped phase of `ho` on every grid point.
pub fn bode(ho: &RationalTF, grid: &FrequencyGrid) -> Result<Vec<BodePoint>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut prev: Option<f64> = None;
    for &w in grid.omegas() {
        let v = eval(ho, w)?;
        let phase = match prev {
            Some(p) => continue_phase(p, v),
            None => v.arg(),
        };
        prev = Some(phase);
        out.push(BodePoint {
            omega: w,
            magnitude_db: 20.0 * v.norm().log10(),
            phase_deg: phase.to_degrees(),
        });
    }
    Ok(out)
}

/// `𝒯(H_o) = pm/ω_c` on the given grid.
pub fn time_delay_margin(ho: &RationalTF, grid: &FrequencyGrid) -> Result<f64> {
    Ok(phase_margin(ho, grid)?.delay_margin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrator_margins() {
        let grid = FrequencyGrid::default_bode();
        for a in [1.0, 60.0, 1e3] {
            let pm = phase_margin(&RationalTF::integrator(a), &grid).unwrap();
            assert!((pm.pm - PI / 2.0).abs() < 1e-8);
            assert!((pm.omega_c - a).abs() < 1e-8 * a);
            assert_eq!(pm.crossings.len(), 1);
        }
        let t = time_delay_margin(&RationalTF::integrator(60.0), &grid).unwrap();
        assert!((t - PI / 120.0).abs() < 1e-9);
    }

    #[test]
    fn no_crossover_reported() {
        let grid = FrequencyGrid::log_spaced(1.0, 10.0, 50).unwrap();
        let err = phase_margin(&RationalTF::integrator(1e3), &grid).unwrap_err();
        assert!(matches!(err, Error::NoCrossover { .. }));
        let pm = phase_margin_extending(&RationalTF::integrator(1e3), &grid).unwrap();
        assert!((pm.omega_c - 1e3).abs() < 1e-5);
    }

    #[test]
    fn bode_of_integrator() {
        let grid = FrequencyGrid::log_spaced(1.0, 1e3, 31).unwrap();
        let pts = bode(&RationalTF::integrator(60.0), &grid).unwrap();
        for p in &pts {
            assert!((p.magnitude_db - 20.0 * (60.0 / p.omega).log10()).abs() < 1e-10);
            assert!((p.phase_deg + 90.0).abs() < 1e-10);
        }
    }

    #[test]
    fn wrapping() {
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap(PI), PI);
        assert!((wrap(-PI) - PI).abs() < 1e-15);
    }
}
