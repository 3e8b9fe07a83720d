//! Classic fixed-step RK4 over flat state slices.

use crate::error::Result;

/// Stage offsets as fractions of the step.
pub const STAGE_OFFSETS: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

/// Scratch buffers for one RK4 integrator; reuse across steps.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.stage.len()
    }

    /// Advances `y` by one step. `f(stage, frac, y, dy)` receives the stage
    /// index, its offset as a fraction of `h` and the stage state.
    pub fn step<F>(&mut self, y: &mut [f64], h: f64, mut f: F) -> Result<()>
    where
        F: FnMut(usize, f64, &[f64], &mut [f64]) -> Result<()>,
    {
        debug_assert_eq!(y.len(), self.dim());
        f(0, 0.0, y, &mut self.k[0])?;
        for s in 1..4 {
            let weight = STAGE_OFFSETS[s] * h;
            let (done, rest) = self.k.split_at_mut(s);
            let prev = &done[s - 1];
            for i in 0..y.len() {
                self.stage[i] = y[i] + weight * prev[i];
            }
            f(s, STAGE_OFFSETS[s], &self.stage, &mut rest[0])?;
        }
        let [k1, k2, k3, k4] = &self.k;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }
}
