use num_complex::Complex64 as C64;

use nmqsd::oracle::{
    free_ring_populations, monomer_cumulant, monomer_exact_autocorrelation, pseudomode_dimer,
    pseudomode_dimer_autocorrelation, pseudomode_dimer_populations, PseudomodeConfig,
};
use nmqsd::{
    build_ring, calibrate_delta, kernel_from_spectral_density, BathKernel, ElectronicState,
    LorentzianMode, RingSpec, SpectralDensity, TimeGrid,
};

mod common;
use common::quadrature::{gauss_legendre, integrate, kernel_from_quadrature, line_shape_function};

#[test]
fn legendre_rule_is_exact_for_polynomials() {
    let rule = gauss_legendre(6);
    let v = integrate(|x| C64::new(x.powi(11) + x.powi(10), 0.0), -1.0, 1.0, 1, &rule);
    assert!((v.re - 2.0 / 11.0).abs() < 1e-14);
}

#[test]
fn single_term_line_shape() {
    let kernel = BathKernel::single(1.0, C64::new(1.0, 0.0)).unwrap();
    let g = monomer_cumulant(&kernel, 1.0);
    assert!((g - C64::new((-1.0f64).exp(), 0.0)).norm() < 1e-14);
    let c = (-g).exp();
    assert!((c.re - 0.6922).abs() < 1e-4);
    assert!((line_shape_function(&kernel, 1.0) - g).norm() < 1e-12);
}

#[test]
fn zero_kernel_autocorrelation_is_one() {
    let grid = TimeGrid::new(0.5, 10).unwrap();
    assert!(monomer_exact_autocorrelation(&BathKernel::zero(), &grid)
        .iter()
        .all(|c| *c == C64::new(1.0, 0.0)));
}

#[test]
fn closed_form_matches_double_quadrature() {
    let kernel = kernel_from_spectral_density(&SpectralDensity::structured_default());
    let grid = TimeGrid::new(0.5, 100).unwrap();
    let closed = monomer_exact_autocorrelation(&kernel, &grid);
    for (k, t) in grid.times().enumerate() {
        let reference = (-line_shape_function(&kernel, t)).exp();
        assert!((closed[k] - reference).norm() < 1e-8, "t = {t}: {} vs {reference}", closed[k]);
    }
}

#[test]
fn kernel_matches_fourier_quadrature() {
    let sd = SpectralDensity::structured_default();
    let kernel = kernel_from_spectral_density(&sd);
    for tau in [0.0, 0.3, 1.0, 4.0] {
        let reference = kernel_from_quadrature(&sd, tau, 2000.0);
        assert!((kernel.eval(tau) - reference).norm() < 1e-4, "τ = {tau}");
    }
}

#[test]
fn calibrated_bath_has_unit_variance() {
    let raw = SpectralDensity::structured_raw();
    let factor = calibrate_delta(&raw).unwrap();
    let kernel = kernel_from_spectral_density(&raw.scaled(factor));
    assert!((kernel.alpha0() - C64::new(1.0, 0.0)).norm() < 1e-12);
    assert_eq!(raw.scaled(factor), SpectralDensity::structured_default());
}

#[test]
fn free_ring_is_unitary_and_symmetric() {
    let model = build_ring(&RingSpec::new(15, -1.4)).unwrap();
    let grid = TimeGrid::new(0.05, 200).unwrap();
    let p = free_ring_populations(&model, 7, &grid).unwrap();
    assert!((p[(7, 0)] - 1.0).abs() < 1e-12);
    for k in 0..grid.len() {
        assert!((p.column(k).sum() - 1.0).abs() < 1e-12);
        for d in 1..8 {
            assert!((p[((7 + d) % 15, k)] - p[((7 + 15 - d) % 15, k)]).abs() < 1e-12);
        }
    }
}

#[test]
fn uncoupled_pseudomode_dimer_is_two_monomers() {
    let mode = LorentzianMode::new(0.25, 1.0, 0.1).unwrap();
    let kernel = kernel_from_spectral_density(&SpectralDensity::new(vec![mode]).unwrap());
    let model = build_ring(&RingSpec::new(2, 0.0)).unwrap();
    let grid = TimeGrid::new(0.02, 500).unwrap();
    let psi0 = ElectronicState::localized(2, 0).unwrap();
    let (c, top) =
        pseudomode_dimer_autocorrelation(&model, &mode, &PseudomodeConfig { fock_cutoff: 14 }, &grid, &psi0).unwrap();
    assert!(top < 1e-6);
    let exact = monomer_exact_autocorrelation(&kernel, &grid);
    for (a, b) in c.iter().zip(&exact) {
        assert!((a - b).norm() < 1e-4);
    }
}

#[test]
fn pseudomode_cutoff_converged() {
    let mode = LorentzianMode::new(0.25, 1.0, 0.1).unwrap();
    let model = build_ring(&RingSpec::new(2, -0.5)).unwrap();
    let grid = TimeGrid::new(0.02, 500).unwrap();
    let psi0 = ElectronicState::localized(2, 0).unwrap();
    let run = |k| pseudomode_dimer_populations(&model, &mode, &PseudomodeConfig { fock_cutoff: k }, &grid, &psi0).unwrap().0;
    let a = run(10);
    let b = run(16);
    let d = (&a - &b).mapv(f64::abs).fold(0.0f64, |m, &x| m.max(x));
    assert!(d < 1e-6, "{d:e}");
}

#[test]
fn pseudomode_combined_result_agrees_with_parts() {
    let mode = LorentzianMode::new(0.25, 1.0, 0.1).unwrap();
    let model = build_ring(&RingSpec::new(2, -0.5)).unwrap();
    let grid = TimeGrid::new(0.05, 40).unwrap();
    let psi0 = model.bright_state([1.0, 0.0, 0.0]).unwrap();
    let config = PseudomodeConfig::default();
    let full = pseudomode_dimer(&model, &mode, &config, &grid, &psi0).unwrap();
    let (pops, _) = pseudomode_dimer_populations(&model, &mode, &config, &grid, &psi0).unwrap();
    let (c, _) = pseudomode_dimer_autocorrelation(&model, &mode, &config, &grid, &psi0).unwrap();
    assert_eq!(full.populations, pops);
    assert_eq!(full.autocorrelation, c);
}
