//! Worst-case time-delay margin over a grid on `Θ × Ω`, and the gain-margin
//! interval.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1ctrl::Interval;
use crate::linsys::{FrequencyGrid, RationalTF};

use super::loop_tf::{omega_samples, open_loop_ho};
use super::phase::phase_margin_extending;

/// Default number of samples per `θ` axis (both endpoints included).
pub const DEFAULT_GRID_DENSITY: usize = 21;

/// Margins at one grid point `(θ, ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRow {
    pub theta: Vec<f64>,
    pub omega: f64,
    pub outcome: VertexOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexOutcome {
    Margin { pm: f64, omega_c: f64, delay_margin: f64 },
    /// The point could not be analyzed (for example, no gain crossover); it
    /// is excluded from the minimum.
    Failed { message: String },
}

impl VertexRow {
    pub fn delay_margin(&self) -> Option<f64> {
        match self.outcome {
            VertexOutcome::Margin { delay_margin, .. } => Some(delay_margin),
            VertexOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    /// Smallest delay margin over the analyzed points.
    pub delay_margin: f64,
    pub theta: Vec<f64>,
    pub omega: f64,
    pub pm: f64,
    pub omega_c: f64,
    /// Every grid point in lexicographic `(θ₁, …, θ_n, ω)` order.
    pub table: Vec<VertexRow>,
    /// Number of points excluded because their analysis failed.
    pub failures: usize,
}

/// Cartesian product of per-axis samples, first axis slowest.
fn theta_grid(theta_box: &[Interval], density: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = theta_box
        .iter()
        .map(|iv| if iv.width() == 0.0 { vec![iv.lo] } else { iv.samples(density) })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Minimum of `𝒯(H_o)` over `density` samples per `θ` axis (box vertices
/// included) times the endpoints and five interior points of `Ω`. Points are
/// analyzed concurrently; the table is in a fixed order.
#[allow(clippy::too_many_arguments)]
pub fn worst_case_delay_margin(
    a_m: &DMatrix<f64>,
    b: &DVector<f64>,
    theta_box: &[Interval],
    omega_interval: Interval,
    k: f64,
    d: &RationalTF,
    grid_density: usize,
    grid: &FrequencyGrid,
) -> Result<WorstCase> {
    if grid_density < 2 {
        return Err(Error::InvalidArgument("grid density must be at least 2".into()));
    }
    if theta_box.len() != a_m.nrows() {
        return Err(Error::Dimension("theta box does not match A_m".into()));
    }
    let omegas = if omega_interval.width() == 0.0 {
        vec![omega_interval.lo]
    } else {
        omega_samples(omega_interval)
    };
    let points: Vec<(Vec<f64>, f64)> = theta_grid(theta_box, grid_density)
        .into_iter()
        .flat_map(|th| omegas.iter().map(move |w| (th.clone(), *w)))
        .collect();

    let table: Vec<VertexRow> = points
        .into_par_iter()
        .map(|(theta, omega)| {
            let th = DVector::from_column_slice(&theta);
            let outcome = match open_loop_ho(a_m, b, &th, omega, k, d).and_then(|ho| phase_margin_extending(&ho, grid))
            {
                Ok(pm) => VertexOutcome::Margin {
                    pm: pm.pm,
                    omega_c: pm.omega_c,
                    delay_margin: pm.delay_margin(),
                },
                Err(e) => VertexOutcome::Failed { message: e.to_string() },
            };
            VertexRow { theta, omega, outcome }
        })
        .collect();

    let failures = table.iter().filter(|r| r.delay_margin().is_none()).count();
    let worst = table
        .iter()
        .filter_map(|r| match r.outcome {
            VertexOutcome::Margin { pm, omega_c, delay_margin } => Some((r, pm, omega_c, delay_margin)),
            VertexOutcome::Failed { .. } => None,
        })
        .min_by(|a, b| a.3.total_cmp(&b.3))
        .ok_or_else(|| Error::Precondition("no grid point could be analyzed".into()))?;
    Ok(WorstCase {
        delay_margin: worst.3,
        theta: worst.0.theta.clone(),
        omega: worst.0.omega,
        pm: worst.1,
        omega_c: worst.2,
        failures,
        table,
    })
}

/// `[ω_l/ω_l0, ω_u/ω_u0]`; requires `0 < ω_l < ω_l0 < ω_u0 < ω_u`.
pub fn gain_margin_interval(omega0: Interval, omega: Interval) -> Result<Interval> {
    if !(0.0 < omega.lo && omega.lo < omega0.lo && omega0.lo < omega0.hi && omega0.hi < omega.hi) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < omega_l < omega_l0 < omega_u0 < omega_u, got Ω₀ = [{}, {}], Ω = [{}, {}]",
            omega0.lo, omega0.hi, omega.lo, omega.hi
        )));
    }
    Ok(Interval {
        lo: omega.lo / omega0.lo,
        hi: omega.hi / omega0.hi,
    })
}
