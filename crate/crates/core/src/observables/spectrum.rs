//! Linear absorption from the zero-noise autocorrelation,
//!
//! ```text
//! σ(ν) ∝ Re ∫_0^T e^{iνt} ⟨ψ(0)|ψ(t)⟩ e^{-t/τ_d} dt
//! ```
//!
//! Frequencies are offsets from the monomer transition; across a band a few Δ
//! wide the optical prefactor ν is constant and is dropped, so the output is
//! the line shape itself.

use num_complex::Complex64 as C64;

use crate::bath::BathKernel;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, TimeGrid};
use crate::linalg::inner;
use crate::model::{AggregateModel, ElectronicState};
use crate::propagate::{zero_noise_autocorrelation, TrajectoryResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Scaled to unit area.
    UnitArea,
    /// Raw transform.
    None,
}

/// Light polarization for absorption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    Fixed([f64; 3]),
    /// Sum over the three Cartesian axes.
    Isotropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub damping_time: f64,
    pub resolution: f64,
    pub normalization: Normalization,
}

impl Spectrum {
    /// Trapezoidal integral of the intensities.
    pub fn area(&self) -> f64 {
        trapezoid(&self.values, self.resolution)
    }

    /// Frequency of the global maximum.
    pub fn peak(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        self.frequencies[i]
    }
}

fn trapezoid(v: &[f64], dx: f64) -> f64 {
    match v.len() {
        0 | 1 => 0.0,
        n => dx * (v[1..n - 1].iter().sum::<f64>() + 0.5 * (v[0] + v[n - 1])),
    }
}

/// `⟨ψ0|ψ(t)⟩` along a zero-noise trajectory started from `psi0`.
pub fn autocorrelation(traj: &TrajectoryResult, psi0: &ElectronicState) -> Result<Vec<C64>> {
    if traj.states.len() != traj.grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} states on a {}-point grid",
            traj.states.len(),
            traj.grid.len()
        )));
    }
    if traj.states.first().map(|s| s.len()) != Some(psi0.len()) {
        return Err(Error::InvalidInput("initial state and trajectory differ in size".into()));
    }
    Ok(traj.states.iter().map(|s| inner(&psi0.0, &s.0)).collect())
}

/// Zero-noise autocorrelation of the bright state, summed over polarizations
/// for the isotropic average.
pub fn absorption_autocorrelation(
    model: &AggregateModel,
    kernel: &BathKernel,
    polarization: Polarization,
    grid: TimeGrid,
) -> Result<Vec<C64>> {
    let axes: Vec<[f64; 3]> = match polarization {
        Polarization::Fixed(e) => vec![e],
        Polarization::Isotropic => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };
    let mut total = vec![C64::new(0.0, 0.0); grid.len()];
    for e in axes {
        let psi0 = model.bright_state(e)?;
        if psi0.norm_sqr() == 0.0 {
            continue;
        }
        let c = zero_noise_autocorrelation(model, kernel, &psi0, grid)?;
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    Ok(total)
}

/// Windowed half-range Fourier transform of `c` sampled on `grid`.
pub fn spectrum_from_autocorrelation(
    c: &[C64],
    grid: &TimeGrid,
    damping_time: f64,
    freqs: &FrequencyGrid,
    normalization: Normalization,
) -> Result<Spectrum> {
    if !(damping_time.is_finite() && damping_time > 0.0) {
        return Err(Error::InvalidInput(format!("damping time must be > 0, got {damping_time}")));
    }
    if c.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} autocorrelation samples on a {}-point grid",
            c.len(),
            grid.len()
        )));
    }
    let h = grid.step();
    let damp = (-h / damping_time).exp();
    let windowed: Vec<C64> = {
        let mut w = 1.0;
        c.iter()
            .map(|&x| {
                let y = x * w;
                w *= damp;
                y
            })
            .collect()
    };
    let last = windowed.len() - 1;
    let frequencies = freqs.points();
    let mut values: Vec<f64> = frequencies
        .iter()
        .map(|&nu| {
            let rot = C64::from_polar(1.0, nu * h);
            let mut phase = C64::new(1.0, 0.0);
            let mut acc = C64::new(0.0, 0.0);
            for (k, x) in windowed.iter().enumerate() {
                let wgt = if k == 0 || k == last { 0.5 } else { 1.0 };
                acc += wgt * phase * x;
                phase *= rot;
                // keep the recurrence on the unit circle
                if k % 1024 == 1023 {
                    phase = C64::from_polar(1.0, nu * h * (k + 1) as f64);
                }
            }
            (acc * h).re
        })
        .collect();
    let resolution = freqs.spacing();
    if normalization == Normalization::UnitArea {
        let area = trapezoid(&values, resolution);
        if !(area.is_finite() && area != 0.0) {
            return Err(Error::InvalidInput(format!("spectrum has area {area}")));
        }
        values.iter_mut().for_each(|v| *v /= area);
    }
    Ok(Spectrum { frequencies, values, damping_time, resolution, normalization })
}

/// `∫ν^k σ dν / ∫σ dν` for k = 0..=max_order (entry 0 is 1).
pub fn spectrum_moments(s: &Spectrum, max_order: usize) -> Result<Vec<f64>> {
    let weight = s.area();
    if !(weight.is_finite() && weight != 0.0) {
        return Err(Error::InvalidInput(format!("spectrum has total weight {weight}")));
    }
    Ok((0..=max_order)
        .map(|k| {
            let v: Vec<f64> = s.frequencies.iter().zip(&s.values).map(|(nu, v)| nu.powi(k as i32) * v).collect();
            trapezoid(&v, s.resolution) / weight
        })
        .collect())
}

pub fn spectrum_mean(s: &Spectrum) -> Result<f64> {
    Ok(spectrum_moments(s, 1)?[1])
}

/// k-th moment about the mean.
pub fn spectrum_central_moment(s: &Spectrum, k: usize) -> Result<f64> {
    let weight = s.area();
    let mean = spectrum_mean(s)?;
    let v: Vec<f64> = s
        .frequencies
        .iter()
        .zip(&s.values)
        .map(|(nu, v)| (nu - mean).powi(k as i32) * v)
        .collect();
    Ok(trapezoid(&v, s.resolution) / weight)
}

pub fn spectrum_variance(s: &Spectrum) -> Result<f64> {
    spectrum_central_moment(s, 2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakWidth {
    pub center: f64,
    pub fwhm: f64,
    pub std_dev: f64,
}

/// Local maxima below this fraction of the window maximum are ignored.
const MIN_PEAK_FRACTION: f64 = 0.05;

fn window_indices(s: &Spectrum, lo: f64, hi: f64) -> Result<(usize, usize)> {
    let i0 = s.frequencies.iter().position(|&f| f >= lo);
    let i1 = s.frequencies.iter().rposition(|&f| f <= hi);
    match (i0, i1) {
        (Some(a), Some(b)) if b >= a + 2 => Ok((a, b)),
        _ => Err(Error::Peak(format!("window [{lo}, {hi}] holds fewer than three grid points"))),
    }
}

/// Width of the single peak inside `[lo, hi]`.
pub fn peak_width(s: &Spectrum, lo: f64, hi: f64) -> Result<PeakWidth> {
    let (a, b) = window_indices(s, lo, hi)?;
    let v = &s.values;
    let vmax = v[a..=b].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(vmax > 0.0) {
        return Err(Error::Peak("no positive intensity in window".into()));
    }
    let maxima: Vec<usize> = (a + 1..b)
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= MIN_PEAK_FRACTION * vmax)
        .collect();
    let top = match maxima.as_slice() {
        [] => return Err(Error::Peak(format!("no local maximum in [{lo}, {hi}]"))),
        [i] => *i,
        _ => {
            return Err(Error::Peak(format!(
                "{} maxima in [{lo}, {hi}]; the peak is ambiguous",
                maxima.len()
            )))
        }
    };
    let half = 0.5 * v[top];
    let f = &s.frequencies;
    let mut left = None;
    for i in (a..top).rev() {
        if v[i] < half {
            left = Some(f[i] + (half - v[i]) / (v[i + 1] - v[i]) * (f[i + 1] - f[i]));
            break;
        }
    }
    let mut right = None;
    for i in top + 1..=b {
        if v[i] < half {
            right = Some(f[i - 1] + (v[i - 1] - half) / (v[i - 1] - v[i]) * (f[i] - f[i - 1]));
            break;
        }
    }
    let (left, right) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        _ => return Err(Error::Peak(format!("half maximum not reached inside [{lo}, {hi}]"))),
    };
    let seg = &v[a..=b];
    let fs = &f[a..=b];
    let w = trapezoid(seg, s.resolution);
    let m1 = trapezoid(&fs.iter().zip(seg).map(|(x, y)| x * y).collect::<Vec<_>>(), s.resolution) / w;
    let m2 = trapezoid(
        &fs.iter().zip(seg).map(|(x, y)| (x - m1).powi(2) * y).collect::<Vec<_>>(),
        s.resolution,
    ) / w;
    Ok(PeakWidth { center: f[top], fwhm: right - left, std_dev: m2.max(0.0).sqrt() })
}

/// Window around the lowest-frequency peak reaching `min_fraction` of the
/// global maximum, bounded by the nearest local minima (or the grid ends) on
/// either side so that it holds exactly that one maximum.
pub fn lowest_peak_window(s: &Spectrum, min_fraction: f64) -> Result<(f64, f64)> {
    let v = &s.values;
    let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = v.len();
    let top = (1..n - 1)
        .find(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= min_fraction * vmax)
        .ok_or_else(|| Error::Peak("spectrum has no interior maximum".into()))?;
    let is_min = |i: usize| v[i] <= v[i - 1] && v[i] < v[i + 1];
    let start = (1..top).rev().find(|&i| is_min(i)).unwrap_or(0);
    let stop = (top + 1..n - 1).find(|&i| is_min(i)).unwrap_or(n - 1);
    Ok((s.frequencies[start], s.frequencies[stop]))
}

/// Positions of interior local maxima reaching `min_fraction` of the global
/// maximum, in increasing frequency.
pub fn resolved_peaks(s: &Spectrum, min_fraction: f64) -> Vec<f64> {
    let v = &s.values;
    let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= min_fraction * vmax)
        .map(|i| s.frequencies[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exp_series(omega: f64, grid: &TimeGrid) -> Vec<C64> {
        grid.times().map(|t| C64::from_polar(1.0, -omega * t)).collect()
    }

    #[test]
    fn windowed_exponential_gives_lorentzian() {
        let grid = TimeGrid::new(0.01, 40_000).unwrap();
        let tau = 20.0;
        let c = exp_series(0.7, &grid);
        let freqs = FrequencyGrid::new(-1.0, 3.0, 4001).unwrap();
        let s = spectrum_from_autocorrelation(&c, &grid, tau, &freqs, Normalization::UnitArea).unwrap();
        assert_abs_diff_eq!(s.area(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.peak(), 0.7, epsilon = 1e-3);
        let pw = peak_width(&s, 0.0, 1.4).unwrap();
        assert_abs_diff_eq!(pw.fwhm, 2.0 / tau, epsilon = 2.0 * s.resolution);
    }

    #[test]
    fn real_autocorrelation_gives_symmetric_spectrum() {
        let grid = TimeGrid::new(0.01, 5000).unwrap();
        let c: Vec<C64> = grid.times().map(|t| C64::new((1.3 * t).cos() * (-0.1 * t).exp(), 0.0)).collect();
        let freqs = FrequencyGrid::new(-3.0, 3.0, 601).unwrap();
        let s = spectrum_from_autocorrelation(&c, &grid, 10.0, &freqs, Normalization::UnitArea).unwrap();
        for i in 0..s.values.len() {
            assert_abs_diff_eq!(s.values[i], s.values[s.values.len() - 1 - i], epsilon = 1e-10);
        }
        assert_abs_diff_eq!(spectrum_mean(&s).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spectrum_central_moment(&s, 3).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn moments_of_symmetric_toy() {
        let freqs = FrequencyGrid::new(-1.0, 3.0, 401).unwrap();
        let frequencies = freqs.points();
        let values = frequencies.iter().map(|f| (-(f - 1.0) * (f - 1.0) * 8.0).exp()).collect();
        let s = Spectrum {
            frequencies,
            values,
            damping_time: 1.0,
            resolution: freqs.spacing(),
            normalization: Normalization::None,
        };
        let m = spectrum_moments(&s, 5).unwrap();
        assert_abs_diff_eq!(m[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spectrum_central_moment(&s, 1).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spectrum_central_moment(&s, 3).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spectrum_central_moment(&s, 5).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spectrum_variance(&s).unwrap(), 1.0 / 16.0, epsilon = 1e-8);
    }

    #[test]
    fn two_peaks_are_ambiguous() {
        let grid = TimeGrid::new(0.01, 20_000).unwrap();
        let c: Vec<C64> = grid
            .times()
            .map(|t| C64::from_polar(1.0, -0.5 * t) + C64::from_polar(1.0, 0.5 * t))
            .collect();
        let freqs = FrequencyGrid::new(-2.0, 2.0, 801).unwrap();
        let s = spectrum_from_autocorrelation(&c, &grid, 20.0, &freqs, Normalization::UnitArea).unwrap();
        assert!(matches!(peak_width(&s, -2.0, 2.0), Err(Error::Peak(_))));
        assert!(peak_width(&s, -2.0, 0.0).is_ok());
        assert_eq!(resolved_peaks(&s, 0.1).len(), 2);
        let (lo, hi) = lowest_peak_window(&s, 0.1).unwrap();
        assert!(lo < -0.5 && hi > -0.5 && hi < 0.5);
        let pw = peak_width(&s, lo, hi).unwrap();
        assert!((pw.center + 0.5).abs() < 0.01);
        assert!(matches!(peak_width(&s, 0.1, 0.2), Err(Error::Peak(_))));
    }

    #[test]
    fn rejects_bad_damping() {
        let grid = TimeGrid::new(0.1, 10).unwrap();
        let c = exp_series(0.0, &grid);
        let freqs = FrequencyGrid::new(-1.0, 1.0, 11).unwrap();
        assert!(spectrum_from_autocorrelation(&c, &grid, 0.0, &freqs, Normalization::None).is_err());
        assert!(spectrum_from_autocorrelation(&c[..5], &grid, 1.0, &freqs, Normalization::None).is_err());
    }
}
