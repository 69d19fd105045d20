use crate::error::{Error, Result};

/// Uniform time grid `t_k = k * step`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    step: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(step: f64, n_steps: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {step}")));
        }
        Ok(Self { step, n_steps })
    }

    /// Grid covering `[0, t_end]` with a step no larger than `max_step`.
    pub fn covering(t_end: f64, max_step: f64) -> Result<Self> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidInput(format!("end time must be non-negative, got {t_end}")));
        }
        if !(max_step.is_finite() && max_step > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {max_step}")));
        }
        let n_steps = (t_end / max_step).ceil() as usize;
        if n_steps == 0 {
            return Self::new(max_step, 0);
        }
        Self::new(t_end / n_steps as f64, n_steps)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// Number of samples on the half-step lattice `t_k / 2`.
    pub fn half_lattice_len(&self) -> usize {
        2 * self.n_steps + 1
    }

    /// Same grid refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            step: self.step / factor as f64,
            n_steps: self.n_steps * factor,
        }
    }

    pub fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self.n_steps != other.n_steps || (self.step - other.step).abs() > 1e-12 * self.step {
            return Err(Error::GridMismatch(format!(
                "({} steps of {}) vs ({} steps of {})",
                self.n_steps, self.step, other.n_steps, other.step
            )));
        }
        Ok(())
    }
}

/// Uniform frequency grid with `n` points on `[start, stop]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, n: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && stop > start && n >= 2) {
            return Err(Error::InvalidInput(format!(
                "frequency grid needs start < stop and n >= 2, got [{start}, {stop}] with {n}"
            )));
        }
        Ok(Self { start, stop, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let d = self.spacing();
        (0..self.n).map(|i| self.start + i as f64 * d).collect()
    }
}
