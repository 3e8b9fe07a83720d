use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::poly;
use super::ss::StateSpace;
use crate::error::{Error, Result};

/// Ratio of real polynomials, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let den = poly::trim(den);
        if den.is_empty() {
            return Err(Error::InvalidArgument("denominator is the zero polynomial".into()));
        }
        if den.iter().chain(num.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self {
            num: poly::trim(num),
            den,
        })
    }

    /// `gain / s`
    pub fn integrator(gain: f64) -> Self {
        Self {
            num: poly::trim(vec![gain]),
            den: vec![0.0, 1.0],
        }
    }

    /// `gain / (s + pole)`
    pub fn first_order(gain: f64, pole: f64) -> Self {
        Self {
            num: poly::trim(vec![gain]),
            den: poly::trim(vec![pole, 1.0]),
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn num_degree(&self) -> Option<usize> {
        poly::degree(&self.num)
    }

    pub fn den_degree(&self) -> usize {
        poly::degree(&self.den).unwrap_or(0)
    }

    pub fn is_proper(&self) -> bool {
        self.num_degree().map_or(true, |d| d <= self.den_degree())
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num_degree().map_or(true, |d| d < self.den_degree())
    }

    /// Evaluates at an arbitrary complex point. `None` at a pole.
    pub fn eval(&self, s: Complex<f64>) -> Option<Complex<f64>> {
        let d = poly::eval(&self.den, s);
        let scale = self
            .den
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * s.norm().powi(k as i32))
            .fold(0.0, f64::max);
        if d.norm() <= 1e-14 * scale {
            return None;
        }
        Some(poly::eval(&self.num, s) / d)
    }

    pub fn freq_response(&self, omega: f64) -> Result<Complex<f64>> {
        if !(omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
        }
        self.eval(Complex::new(0.0, omega))
            .ok_or(Error::PoleOnAxis { omega })
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: poly::mul(&self.num, &other.num),
            den: poly::mul(&self.den, &other.den),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: poly::scale(&self.num, k),
            den: self.den.clone(),
        }
    }

    /// `1 - self`
    pub fn one_minus(&self) -> Self {
        Self {
            num: poly::sub(&self.den, &self.num),
            den: self.den.clone(),
        }
    }

    /// Controllable canonical realization. Biproper inputs get a direct term.
    pub fn to_state_space(&self) -> Result<StateSpace> {
        let n = self.den_degree();
        if !self.is_proper() {
            return Err(Error::Improper {
                num: self.num_degree().unwrap_or(0),
                den: n,
            });
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "static gain has no state-space realization with n >= 1".into(),
            ));
        }
        let lead = self.den[n];
        let den: Vec<f64> = self.den.iter().map(|c| c / lead).collect();
        let mut num: Vec<f64> = self.num.iter().map(|c| c / lead).collect();
        num.resize(n + 1, 0.0);
        let d = num[n];
        let rem: Vec<f64> = (0..n).map(|k| num[k] - d * den[k]).collect();

        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den[j];
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        StateSpace::new(a, b, DVector::from_vec(rem), d)
    }

    /// Value at `s = 0` when finite.
    pub fn dc_gain(&self) -> Option<f64> {
        let d = poly::eval_real(&self.den, 0.0);
        if d == 0.0 {
            None
        } else {
            Some(poly::eval_real(&self.num, 0.0) / d)
        }
    }
}
