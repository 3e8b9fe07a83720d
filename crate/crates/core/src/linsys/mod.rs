//! Dense linear-systems numerics for small SISO realizations.

mod eig;
mod grid;
mod impulse;
pub mod poly;
mod ss;
mod tf;

use nalgebra::Complex;

pub use eig::{
    eigenvalues, is_hurwitz, lyapunov_solve, spectral_abscissa, spectral_summary, symmetric_eigenvalues,
    SpectralSummary,
};
pub use grid::FrequencyGrid;
pub use impulse::{impulse_response, l1_gain, l1_gain_mimo, l1_gain_proper, DEFAULT_L1_REL_TOL};
pub use ss::{hbar_realization, StateSpace};
pub use tf::RationalTF;

use crate::error::Result;

/// Anything that can be evaluated on the imaginary axis.
pub trait FrequencyResponse {
    fn freq_response(&self, omega: f64) -> Result<Complex<f64>>;
}

impl FrequencyResponse for StateSpace {
    fn freq_response(&self, omega: f64) -> Result<Complex<f64>> {
        StateSpace::freq_response(self, omega)
    }
}

impl FrequencyResponse for RationalTF {
    fn freq_response(&self, omega: f64) -> Result<Complex<f64>> {
        RationalTF::freq_response(self, omega)
    }
}

/// Evaluates `sys` at `s = iω`.
pub fn freq_response<S: FrequencyResponse + ?Sized>(sys: &S, omega: f64) -> Result<Complex<f64>> {
    sys.freq_response(omega)
}
