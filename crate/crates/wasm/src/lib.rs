//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every function takes plain numbers and returns flat `f64` arrays so the
//! page can draw them on a canvas without any glue beyond wasm-bindgen.

use wasm_bindgen::prelude::*;

use nmqsd::observables::{
    absorption_autocorrelation, ensemble_transfer, spectrum_from_autocorrelation, EnsembleOptions, Normalization,
    Polarization,
};
use nmqsd::propagate::default_step;
use nmqsd::{build_ring, kernel_from_spectral_density, AggregateModel, BathKernel, FrequencyGrid, RingSpec, SpectralDensity, TimeGrid};

const MAX_SITES: usize = 30;
const MAX_WORK: f64 = 5e8;

fn fail(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn aggregate(n_sites: usize, shift: f64) -> Result<AggregateModel, JsError> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(fail(format!("ring size must be between 1 and {MAX_SITES}")));
    }
    if n_sites == 1 {
        return Ok(AggregateModel::monomer(0.0));
    }
    build_ring(&RingSpec::from_shift(n_sites, shift).map_err(fail)?).map_err(fail)
}

fn bath(with_bath: bool) -> BathKernel {
    if with_bath {
        kernel_from_spectral_density(&SpectralDensity::structured_default())
    } else {
        BathKernel::zero()
    }
}

/// Unit-area absorption line of a ring whose bright exciton sits at `shift`,
/// on `n_points` frequencies spanning `[freq_min, freq_max]`.
#[wasm_bindgen]
pub fn ring_spectrum(
    n_sites: usize,
    shift: f64,
    damping_time: f64,
    freq_min: f64,
    freq_max: f64,
    n_points: usize,
) -> Result<Vec<f64>, JsError> {
    let model = aggregate(n_sites, shift)?;
    let kernel = bath(true);
    let grid = TimeGrid::covering(5.0 * damping_time, default_step(&model, &kernel)).map_err(fail)?;
    let c = absorption_autocorrelation(&model, &kernel, Polarization::Fixed([1.0, 0.0, 0.0]), grid).map_err(fail)?;
    let freqs = FrequencyGrid::new(freq_min, freq_max, n_points).map_err(fail)?;
    let s = spectrum_from_autocorrelation(&c, &grid, damping_time, &freqs, Normalization::UnitArea).map_err(fail)?;
    Ok(s.values)
}

/// Site populations after exciting `initial_site` (1-based), sampled at
/// `n_frames` evenly spaced times in `[0, t_max]`. Row-major `[frame][site]`.
#[wasm_bindgen]
pub fn transfer_map(
    n_sites: usize,
    shift: f64,
    initial_site: usize,
    n_trajectories: usize,
    t_max: f64,
    n_frames: usize,
    with_bath: bool,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let model = aggregate(n_sites, shift)?;
    if initial_site == 0 || initial_site > n_sites {
        return Err(fail(format!("initial site must lie in 1..={n_sites}")));
    }
    if n_frames < 2 {
        return Err(fail("need at least two frames"));
    }
    let kernel = bath(with_bath);
    let grid = TimeGrid::covering(t_max, default_step(&model, &kernel)).map_err(fail)?;
    let work = (n_trajectories * grid.len() * n_sites * n_sites) as f64;
    if work > MAX_WORK {
        return Err(fail("too much work for the browser: reduce trajectories, time or ring size"));
    }
    let options = EnsembleOptions::new(n_trajectories.max(1), seed);
    let r = ensemble_transfer(&model, &kernel, initial_site - 1, grid, &options).map_err(fail)?;
    let mut out = Vec::with_capacity(n_frames * n_sites);
    for f in 0..n_frames {
        let k = (f * grid.n_steps() + (n_frames - 1) / 2) / (n_frames - 1);
        out.extend((0..n_sites).map(|n| r.populations[(n, k)]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_has_unit_area() {
        let v = ring_spectrum(3, -2.6, 10.0, -8.0, 8.0, 321).unwrap();
        let area: f64 = v.iter().sum::<f64>() * 16.0 / 320.0;
        assert!((area - 1.0).abs() < 1e-3);
    }

    #[test]
    fn map_starts_on_initial_site() {
        let v = transfer_map(5, -2.6, 2, 4, 1.0, 3, true, 1).unwrap();
        assert_eq!(v.len(), 15);
        assert!((v[1] - 1.0).abs() < 1e-12);
        for frame in v.chunks(5) {
            assert!((frame.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
