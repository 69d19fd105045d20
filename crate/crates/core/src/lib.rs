//! Single-excitation dynamics of molecular aggregates coupled to structured
//! zero-temperature phonon baths, propagated with a non-Markovian stochastic
//! Schrödinger equation in the electronic Hilbert space.
//!
//! Energies are in units of Δ, the standard deviation of the monomer
//! absorption line; times in 1/Δ (ħ = 1).

pub mod bath;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod propagate;
pub mod noise;
pub mod observables;
pub mod oracle;

pub use bath::{calibrate_delta, kernel_from_spectral_density, BathKernel, KernelTerm, LorentzianMode, SpectralDensity};
pub use error::{Error, Result};
pub use grid::{FrequencyGrid, TimeGrid};
pub use model::{build_ring, AggregateModel, ElectronicState, RingSpec};
