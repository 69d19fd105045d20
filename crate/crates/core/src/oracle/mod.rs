//! Approximation-free reference solutions. Nothing here calls into the
//! stochastic propagators.

mod free;
mod monomer;
mod pseudomode;

pub use free::free_ring_populations;
pub use monomer::{monomer_cumulant, monomer_exact_autocorrelation, monomer_line_moments, LineMoments};
pub use pseudomode::{
    pseudomode_dimer, pseudomode_dimer_autocorrelation, pseudomode_dimer_populations, PseudomodeConfig,
    PseudomodeResult, FOCK_POPULATION_LIMIT,
};
