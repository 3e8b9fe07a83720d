use crate::error::{Error, Result};

/// Fixed-grid transport delay of an `n`-vector signal.
///
/// Samples are pushed once per grid point together with their time
/// derivative. Grid outputs are exact copies (`output(i) = input(i - depth)`,
/// zero before the delay has elapsed); off-grid queries used by Runge-Kutta
/// stages are cubic Hermite interpolants between neighbouring samples.
#[derive(Debug, Clone)]
pub struct DelayLine {
    dim: usize,
    depth: usize,
    h: f64,
    capacity: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
    /// Number of samples pushed so far; the newest has index `pushed - 1`.
    pushed: usize,
}

impl DelayLine {
    /// `depth = round(τ/h)`.
    pub fn new(dim: usize, tau: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need h > 0 and finite tau >= 0, got h = {h}, tau = {tau}"
            )));
        }
        Ok(Self::with_depth(dim, (tau / h).round() as usize, h))
    }

    pub fn with_depth(dim: usize, depth: usize, h: f64) -> Self {
        let capacity = depth + 2;
        Self {
            dim,
            depth,
            h,
            capacity,
            values: vec![0.0; capacity * dim],
            derivs: vec![0.0; capacity * dim],
            pushed: 0,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Realized delay `depth·h`.
    pub fn tau_eff(&self) -> f64 {
        self.depth as f64 * self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Appends the sample for the next grid index.
    pub fn push(&mut self, value: &[f64], deriv: &[f64]) {
        debug_assert_eq!(value.len(), self.dim);
        let slot = (self.pushed % self.capacity) * self.dim;
        self.values[slot..slot + self.dim].copy_from_slice(value);
        self.derivs[slot..slot + self.dim].copy_from_slice(deriv);
        self.pushed += 1;
    }

    /// Sample `k` (value, derivative); zeros for negative `k`.
    fn sample(&self, k: isize) -> Option<(&[f64], &[f64])> {
        if k < 0 {
            return None;
        }
        let k = k as usize;
        assert!(
            k < self.pushed && k + self.capacity >= self.pushed,
            "delay sample {k} not available (pushed {})",
            self.pushed
        );
        let slot = (k % self.capacity) * self.dim;
        Some((&self.values[slot..slot + self.dim], &self.derivs[slot..slot + self.dim]))
    }

    /// Delayed output at grid index `i`: input `i - depth`, or zero.
    pub fn output(&self, i: usize, out: &mut [f64]) {
        match self.sample(i as isize - self.depth as isize) {
            Some((v, _)) => out.copy_from_slice(v),
            None => out.fill(0.0),
        }
    }

    /// Delayed output at time `(i + frac)·h`, `0 <= frac <= 1`. Requires the
    /// sample at index `i - depth + 1` whenever `frac > 0`, so a zero-depth
    /// line only answers grid queries.
    pub fn delayed_at(&self, i: usize, frac: f64, out: &mut [f64]) {
        let j = i as isize - self.depth as isize;
        if frac == 0.0 {
            return self.output(i, out);
        }
        if (j as f64) + frac < 0.0 {
            out.fill(0.0);
            return;
        }
        if frac == 1.0 {
            return self.output(i + 1, out);
        }
        let (v1, d1) = self.sample(j + 1).expect("j + 1 >= 0 here");
        let h = self.h;
        let (s, s2, s3) = (frac, frac * frac, frac * frac * frac);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        match self.sample(j) {
            Some((v0, d0)) => {
                for k in 0..self.dim {
                    out[k] = h00 * v0[k] + h10 * h * d0[k] + h01 * v1[k] + h11 * h * d1[k];
                }
            }
            None => {
                // the signal is identically zero before the first sample
                for k in 0..self.dim {
                    out[k] = h01 * v1[k] + h11 * h * d1[k];
                }
            }
        }
    }
}
