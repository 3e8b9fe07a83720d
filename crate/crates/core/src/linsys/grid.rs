use crate::error::{Error, Result};

/// Strictly increasing positive frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidArgument("empty frequency grid".into()));
        }
        if omegas.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("frequencies must be positive and finite".into()));
        }
        if omegas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidArgument("frequencies must be strictly increasing".into()));
        }
        Ok(Self { omegas })
    }

    /// `points` log-spaced frequencies over `[lo, hi]`, endpoints included.
    pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi > lo) || points < 2 {
            return Err(Error::InvalidArgument(format!(
                "log grid needs 0 < lo < hi and >= 2 points, got [{lo}, {hi}] x {points}"
            )));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let step = (b - a) / (points - 1) as f64;
        let mut omegas: Vec<f64> = (0..points).map(|i| 10f64.powf(a + step * i as f64)).collect();
        omegas[0] = lo;
        omegas[points - 1] = hi;
        Self::new(omegas)
    }

    /// 2000 points over `[1e-3, 1e4]` rad/s.
    pub fn default_bode() -> Self {
        Self::log_spaced(1e-3, 1e4, 2000).expect("valid default grid")
    }

    /// One extra decade on each side, same point density per decade.
    pub fn extended(&self) -> Self {
        let lo = self.lo();
        let hi = self.hi();
        let decades = (hi / lo).log10().max(1e-9);
        let per_decade = (self.omegas.len() as f64 - 1.0) / decades;
        let points = ((decades + 2.0) * per_decade).round() as usize + 1;
        Self::log_spaced(lo / 10.0, hi * 10.0, points.max(2)).expect("extension of a valid grid")
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn lo(&self) -> f64 {
        self.omegas[0]
    }

    pub fn hi(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}
