//! Spectral densities built from Lorentzians and the zero-temperature bath
//! correlation function they induce.
//!
//! Each Lorentzian is taken over the whole real frequency axis,
//!
//! ```text
//! J(ω) = Σ_j (p_j / π) γ_j / ((ω - Ω_j)² + γ_j²)
//! ```
//!
//! so that `α(τ) = ∫ J(ω) e^{-iωτ} dω` is exactly one damped exponential per
//! mode, `p_j exp(-(γ_j + iΩ_j) τ)` for τ ≥ 0. The weight a mode leaks onto
//! negative frequencies is roughly `p_j γ_j / (π Ω_j)` when `Ω_j ≫ γ_j`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianMode {
    /// p, the mode's contribution to ∫J dω (units Δ²).
    pub weight: f64,
    /// Ω (units Δ).
    pub center: f64,
    /// γ, half-width at half-maximum (units Δ).
    pub width: f64,
}

impl LorentzianMode {
    pub fn new(weight: f64, center: f64, width: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidInput(format!("mode weight must be >= 0, got {weight}")));
        }
        if !center.is_finite() {
            return Err(Error::InvalidInput(format!("mode center must be finite, got {center}")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidInput(format!("mode width must be > 0, got {width}")));
        }
        Ok(Self { weight, center, width })
    }

    pub fn evaluate(&self, omega: f64) -> f64 {
        let d = omega - self.center;
        self.weight / PI * self.width / (d * d + self.width * self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    modes: Vec<LorentzianMode>,
}

impl SpectralDensity {
    pub fn new(modes: Vec<LorentzianMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidInput("spectral density needs at least one mode".into()));
        }
        Ok(Self { modes })
    }

    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self> {
        let modes = triples
            .iter()
            .map(|&(p, c, w)| LorentzianMode::new(p, c, w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(modes)
    }

    /// Uncalibrated structured bath: one broad low-energy mode and two narrow
    /// high-energy modes.
    pub fn structured_raw() -> Self {
        Self {
            modes: vec![
                LorentzianMode { weight: 0.16, center: 0.2, width: 0.2 },
                LorentzianMode { weight: 0.30, center: 1.4, width: 0.08 },
                LorentzianMode { weight: 0.30, center: 1.7, width: 0.08 },
            ],
        }
    }

    /// [`structured_raw`](Self::structured_raw) rescaled so that the monomer
    /// absorption line has unit standard deviation.
    pub fn structured_default() -> Self {
        let raw = Self::structured_raw();
        let factor = calibrate_delta(&raw).expect("default bath has finite moments");
        raw.scaled(factor)
    }

    pub fn modes(&self) -> &[LorentzianMode] {
        &self.modes
    }

    pub fn evaluate(&self, omega: f64) -> f64 {
        self.modes.iter().map(|m| m.evaluate(omega)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    /// Re-express every energy in units where the old unit is `factor`
    /// (p scales by factor², Ω and γ by factor).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .map(|m| LorentzianMode {
                    weight: m.weight * factor * factor,
                    center: m.center * factor,
                    width: m.width * factor,
                })
                .collect(),
        }
    }
}

/// One term `g exp(-w τ)` of the correlation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub amplitude: C64,
    pub rate: C64,
}

/// `α(τ) = Σ_j g_j exp(-w_j τ)` for τ ≥ 0, extended by `α(-τ) = conj α(τ)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BathKernel {
    terms: Vec<KernelTerm>,
}

impl BathKernel {
    pub fn new(terms: Vec<KernelTerm>) -> Result<Self> {
        for (j, t) in terms.iter().enumerate() {
            let finite = t.amplitude.re.is_finite()
                && t.amplitude.im.is_finite()
                && t.rate.re.is_finite()
                && t.rate.im.is_finite();
            if !finite {
                return Err(Error::InvalidKernel(format!("term {j} is not finite")));
            }
            if t.rate.re <= 0.0 {
                return Err(Error::InvalidKernel(format!(
                    "term {j} does not decay (Re w = {})",
                    t.rate.re
                )));
            }
        }
        Ok(Self { terms })
    }

    /// Kernel of an uncoupled bath.
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// Single term with real amplitude and rate `w`.
    pub fn single(amplitude: f64, rate: C64) -> Result<Self> {
        Self::new(vec![KernelTerm { amplitude: C64::new(amplitude, 0.0), rate }])
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == C64::new(0.0, 0.0))
    }

    pub fn eval(&self, tau: f64) -> C64 {
        let a: C64 = self
            .terms
            .iter()
            .map(|t| t.amplitude * (-t.rate * tau.abs()).exp())
            .sum();
        if tau < 0.0 {
            a.conj()
        } else {
            a
        }
    }

    pub fn alpha0(&self) -> C64 {
        self.terms.iter().map(|t| t.amplitude).sum()
    }

    /// Smallest decay rate Re(w_j).
    pub fn min_decay_rate(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.rate.re).reduce(f64::min)
    }

    /// Largest |Im w_j| + Re w_j, the fastest time scale in the kernel.
    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate.im.abs() + t.rate.re).fold(0.0, f64::max)
    }
}

/// Exact zero-temperature Fourier transform of each real-line Lorentzian.
pub fn kernel_from_spectral_density(sd: &SpectralDensity) -> BathKernel {
    BathKernel {
        terms: sd
            .modes
            .iter()
            .map(|m| KernelTerm {
                amplitude: C64::new(m.weight, 0.0),
                rate: C64::new(m.width, m.center),
            })
            .collect(),
    }
}

/// κ = ω √X (ħ = 1).
pub fn huang_rhys_coupling(omega: f64, huang_rhys: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidInput(format!("mode frequency must be > 0, got {omega}")));
    }
    if !(huang_rhys.is_finite() && huang_rhys >= 0.0) {
        return Err(Error::InvalidInput(format!("Huang-Rhys factor must be >= 0, got {huang_rhys}")));
    }
    Ok(omega * huang_rhys.sqrt())
}

/// Factor that rescales `sd` to units where the exact monomer absorption
/// line has unit standard deviation.
pub fn calibrate_delta(sd: &SpectralDensity) -> Result<f64> {
    let kernel = kernel_from_spectral_density(sd);
    let moments = crate::oracle::monomer_line_moments(&kernel)?;
    let std = moments.variance.sqrt();
    if !(std.is_finite() && std > 0.0) {
        return Err(Error::Calibration(format!(
            "monomer line has standard deviation {std}"
        )));
    }
    Ok(1.0 / std)
}
