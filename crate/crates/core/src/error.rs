use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid aggregate specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid bath kernel: {0}")]
    InvalidKernel(String),

    #[error("bath calibration failed: {0}")]
    Calibration(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("state blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("norm drifted by {drift:.3e} in one step at t = {time}; reduce the step size")]
    StepSize { time: f64, drift: f64 },

    #[error("peak analysis failed: {0}")]
    Peak(String),

    #[error("Fock cutoff too small: top-level population {population:.3e} exceeds {limit:.0e}")]
    CutoffViolation { population: f64, limit: f64 },

    #[error("{excluded} of {total} trajectories blew up, above the exclusion budget")]
    ExclusionBudget { excluded: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
