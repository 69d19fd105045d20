use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::AggregateModel;

/// `P_n(t) = |⟨π_n| e^{-i H_el t} |π_init⟩|²` by exact diagonalisation.
/// Rows are sites, columns grid points.
pub fn free_ring_populations(model: &AggregateModel, initial_site: usize, grid: &TimeGrid) -> Result<Array2<f64>> {
    let n = model.n_sites();
    if initial_site >= n {
        return Err(Error::InvalidInput(format!("initial site {initial_site} out of range")));
    }
    let (energies, vectors) = model.eigensystem();
    let overlap: Vec<f64> = (0..n).map(|k| vectors[(initial_site, k)]).collect();
    let mut out = Array2::zeros((n, grid.len()));
    for (ti, t) in grid.times().enumerate() {
        let phases: Vec<C64> = energies
            .iter()
            .zip(&overlap)
            .map(|(e, c)| C64::new(0.0, -e * t).exp() * c)
            .collect();
        for site in 0..n {
            let amp: C64 = (0..n).map(|k| vectors[(site, k)] * phases[k]).sum();
            out[(site, ti)] = amp.norm_sqr();
        }
    }
    Ok(out)
}
