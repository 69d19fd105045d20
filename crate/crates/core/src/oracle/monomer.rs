use num_complex::Complex64 as C64;

use crate::bath::BathKernel;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Line-shape function `g(t) = ∫_0^t ds ∫_0^s ds' α(s')`, in closed form per
/// exponential term: `(g_j/w_j) t + (g_j/w_j²)(e^{-w_j t} - 1)`.
pub fn monomer_cumulant(kernel: &BathKernel, t: f64) -> C64 {
    kernel
        .terms()
        .iter()
        .map(|term| {
            let w = term.rate;
            let wt = w * t;
            // e^{-wt} - 1 + wt, expanded for small |wt| to avoid cancellation
            let rem = if wt.norm() < 1e-3 {
                wt * wt / 2.0 - wt * wt * wt / 6.0 + wt * wt * wt * wt / 24.0
            } else {
                (-wt).exp() - 1.0 + wt
            };
            term.amplitude / (w * w) * rem
        })
        .sum()
}

/// Exact absorption autocorrelation `c(t) = exp(-g(t))` of an isolated
/// monomer (electronic transition at zero).
pub fn monomer_exact_autocorrelation(kernel: &BathKernel, grid: &TimeGrid) -> Vec<C64> {
    grid.times().map(|t| (-monomer_cumulant(kernel, t)).exp()).collect()
}

/// Mean and variance of the exact monomer line shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMoments {
    pub mean: f64,
    pub variance: f64,
}

/// The line shape is the Fourier transform of `exp(-g(t))`, so its cumulants
/// are the Taylor coefficients of `-g` at t = 0: `g(0) = g'(0) = 0` puts the
/// mean at the electronic transition and `g''(0) = α(0)` is the variance.
pub fn monomer_line_moments(kernel: &BathKernel) -> Result<LineMoments> {
    let a0 = kernel.alpha0();
    if !(a0.re.is_finite() && a0.im.is_finite()) {
        return Err(Error::Calibration("α(0) is not finite".into()));
    }
    if a0.im.abs() > 1e-12 * a0.re.abs().max(1.0) {
        return Err(Error::Calibration(format!("α(0) = {a0} is not real")));
    }
    if a0.re <= 0.0 {
        return Err(Error::Calibration(format!("α(0) = {} gives no line width", a0.re)));
    }
    Ok(LineMoments { mean: 0.0, variance: a0.re })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uncoupled_monomer_is_flat() {
        let g = TimeGrid::new(0.5, 10).unwrap();
        for c in monomer_exact_autocorrelation(&BathKernel::zero(), &g) {
            assert_eq!(c, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn single_real_term() {
        let k = BathKernel::single(1.0, C64::new(1.0, 0.0)).unwrap();
        // g(1) = 1 + e^{-1} - 1 = e^{-1}
        let g1 = monomer_cumulant(&k, 1.0);
        assert_abs_diff_eq!(g1.re, (-1.0f64).exp(), epsilon = 1e-14);
        let c1 = (-g1).exp();
        assert_abs_diff_eq!(c1.re, 0.692_200_627_555_346, epsilon = 1e-12);
        // small-t branch joins the direct formula
        let a = monomer_cumulant(&k, 0.999e-3);
        let b = monomer_cumulant(&k, 1.001e-3);
        assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn moments_reject_empty_kernel() {
        assert!(matches!(monomer_line_moments(&BathKernel::zero()), Err(Error::Calibration(_))));
    }
}
