use nalgebra::{Complex, DMatrix, DVector};

use super::poly;
use super::tf::RationalTF;
use crate::error::{Error, Result};

/// Single-input single-output realization `ẋ = Ax + bu`, `y = cᵀx + du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, d: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square with n >= 1, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::Dimension(format!(
                "A is {n}x{n} but b has {} and c has {} entries",
                b.len(),
                c.len()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn strictly_proper(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        Self::new(a, b, c, 0.0)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d == 0.0
    }

    /// Same dynamics, different output map.
    pub fn with_output(&self, c: DVector<f64>, d: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), c, d)
    }

    /// Output picks state `i`.
    pub fn state_output(&self, i: usize) -> Result<Self> {
        if i >= self.order() {
            return Err(Error::Dimension(format!("state index {i} out of range")));
        }
        let mut c = DVector::zeros(self.order());
        c[i] = 1.0;
        self.with_output(c, 0.0)
    }

    /// Strictly proper part (direct term dropped).
    pub fn strictly_proper_part(&self) -> Self {
        Self {
            d: 0.0,
            ..self.clone()
        }
    }

    /// `(sI - A)⁻¹ b` at `s = iω`, i.e. the state transfer vector.
    pub fn state_response(&self, omega: f64) -> Result<DVector<Complex<f64>>> {
        let n = self.order();
        let mut m = self.a.map(|v| Complex::new(-v, 0.0));
        for i in 0..n {
            m[(i, i)] += Complex::new(0.0, omega);
        }
        let rhs = self.b.map(|v| Complex::new(v, 0.0));
        let lu = m.lu();
        let u = lu.u();
        let pivots = u.diagonal().map(|p| p.norm());
        if pivots.min() <= 1e-14 * pivots.max().max(omega) {
            return Err(Error::PoleOnAxis { omega });
        }
        let z = lu.solve(&rhs).ok_or(Error::PoleOnAxis { omega })?;
        if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::PoleOnAxis { omega });
        }
        Ok(z)
    }

    pub fn freq_response(&self, omega: f64) -> Result<Complex<f64>> {
        if !(omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
        }
        let z = self.state_response(omega)?;
        let y = z
            .iter()
            .zip(self.c.iter())
            .fold(Complex::new(0.0, 0.0), |acc, (zi, ci)| acc + zi * *ci);
        Ok(y + self.d)
    }

    /// Faddeev-LeVerrier: characteristic polynomial `det(sI - A)` (ascending,
    /// monic) and the matrices `M_k` with `adj(sI - A) = Σ_k M_k s^(n-k)`.
    pub fn resolvent(&self) -> (Vec<f64>, Vec<DMatrix<f64>>) {
        let n = self.order();
        let eye = DMatrix::<f64>::identity(n, n);
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        let mut ms = Vec::with_capacity(n);
        let mut m_prev = DMatrix::<f64>::zeros(n, n);
        for k in 1..=n {
            let m_k = &self.a * &m_prev + &eye * coeffs[n - k + 1];
            let am = &self.a * &m_k;
            coeffs[n - k] = -am.trace() / k as f64;
            ms.push(m_k.clone());
            m_prev = m_k;
        }
        (coeffs, ms)
    }

    /// Numerators of `(sI - A)⁻¹ b`, one per state, over the shared
    /// characteristic polynomial.
    pub fn state_transfer(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.order();
        let (den, ms) = self.resolvent();
        let mut nums = vec![vec![0.0; n]; n];
        for (k, m_k) in ms.iter().enumerate() {
            // M_{k+1} multiplies s^(n-k-1)
            let col = m_k * &self.b;
            for i in 0..n {
                nums[i][n - k - 1] = col[i];
            }
        }
        (nums.into_iter().map(poly::trim).collect(), den)
    }

    pub fn to_rational(&self) -> RationalTF {
        let n = self.order();
        let (den, ms) = self.resolvent();
        let mut num = vec![0.0; n + 1];
        for (k, m_k) in ms.iter().enumerate() {
            num[n - k - 1] = self.c.dot(&(m_k * &self.b));
        }
        if self.d != 0.0 {
            for (i, c) in den.iter().enumerate() {
                num[i] += self.d * c;
            }
        }
        RationalTF::new(num, den).expect("monic characteristic polynomial")
    }

    /// `next ∘ self`: the output of `self` drives `next`.
    pub fn series(&self, next: &StateSpace) -> StateSpace {
        let (n1, n2) = (self.order(), next.order());
        let n = n1 + n2;
        let mut a = DMatrix::<f64>::zeros(n, n);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        a.view_mut((n1, 0), (n2, n1))
            .copy_from(&(&next.b * self.c.transpose()));
        let mut b = DVector::<f64>::zeros(n);
        b.rows_mut(0, n1).copy_from(&self.b);
        b.rows_mut(n1, n2).copy_from(&(&next.b * self.d));
        let mut c = DVector::<f64>::zeros(n);
        c.rows_mut(0, n1).copy_from(&(&self.c * next.d));
        c.rows_mut(n1, n2).copy_from(&next.c);
        StateSpace {
            a,
            b,
            c,
            d: self.d * next.d,
        }
    }

    /// `cᵀ(-A)⁻¹b + d`
    pub fn dc_gain(&self) -> Result<f64> {
        let z = (-&self.a)
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::Singular("A is singular".into()))?;
        Ok(self.c.dot(&z) + self.d)
    }
}

/// `H̄(s) = (sI - A_m - bθᵀ)⁻¹ b`. Stability is not required.
///
/// The returned realization outputs the first state; use
/// [`StateSpace::with_output`] or [`StateSpace::state_output`] for others and
/// [`StateSpace::state_transfer`] for the full vector.
pub fn hbar_realization(a_m: &DMatrix<f64>, b: &DVector<f64>, theta: &DVector<f64>) -> Result<StateSpace> {
    let n = a_m.nrows();
    if b.len() != n || theta.len() != n {
        return Err(Error::Dimension(format!(
            "A_m is {n}x{n}, b has {}, theta has {} entries",
            b.len(),
            theta.len()
        )));
    }
    let a = a_m + b * theta.transpose();
    let mut c = DVector::zeros(n);
    c[0] = 1.0;
    StateSpace::new(a, b.clone(), c, 0.0)
}
