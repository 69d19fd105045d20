//! Absorption spectra, line-shape moments and ensemble-averaged populations.

mod ensemble;
mod spectrum;

pub use ensemble::{
    convergence_probe, ensemble_linear, ensemble_transfer, EnsembleOptions, EnsembleResult, EXCLUSION_BUDGET,
};
pub use spectrum::{
    absorption_autocorrelation, autocorrelation, lowest_peak_window, peak_width, resolved_peaks, spectrum_central_moment,
    spectrum_from_autocorrelation, spectrum_mean, spectrum_moments, spectrum_variance, Normalization, PeakWidth,
    Polarization, Spectrum,
};
