use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use nmqsd::noise::generate_noise;
use nmqsd::observables::{spectrum_from_autocorrelation, Normalization};
use nmqsd::oracle::free_ring_populations;
use nmqsd::propagate::{default_step, propagate_nonlinear, propagate_zero_noise, zero_noise_autocorrelation};
use nmqsd::{
    build_ring, calibrate_delta, kernel_from_spectral_density, BathKernel, ElectronicState, FrequencyGrid,
    LorentzianMode, RingSpec, SpectralDensity, TimeGrid,
};

fn modes() -> impl Strategy<Value = SpectralDensity> {
    prop::collection::vec((0.01f64..1.0, -3.0f64..3.0, 0.05f64..1.0), 1..4).prop_map(|v| {
        SpectralDensity::new(v.into_iter().map(|(p, c, g)| LorentzianMode::new(p, c, g).unwrap()).collect())
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_levels_form_a_cosine_band(n in 3usize..16, v in -3.0f64..3.0, eps in -2.0f64..2.0) {
        let model = build_ring(&RingSpec::new(n, v).with_site_energy(eps)).unwrap();
        let (mut levels, _) = model.eigensystem();
        levels.sort_by(f64::total_cmp);
        let mut band: Vec<f64> = (0..n).map(|k| eps + 2.0 * v * (2.0 * PI * k as f64 / n as f64).cos()).collect();
        band.sort_by(f64::total_cmp);
        for (a, b) in levels.iter().zip(&band) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn shift_round_trips(n in 2usize..30, c in -6.0f64..6.0) {
        prop_assume!(n != 4 && c.abs() > 1e-3);
        let spec = RingSpec::from_shift(n, c).unwrap();
        prop_assert!((spec.shift() - c).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_hermitian(n in 2usize..12, c in -4.0f64..4.0) {
        prop_assume!(n != 4);
        let h = build_ring(&RingSpec::from_shift(n, c).unwrap()).unwrap().electronic_hamiltonian();
        prop_assert!(h.max_abs_diff(&h.adjoint()) < 1e-15);
    }

    #[test]
    fn calibration_gives_unit_variance(sd in modes()) {
        let f = calibrate_delta(&sd).unwrap();
        let kernel = kernel_from_spectral_density(&sd.scaled(f));
        prop_assert!((kernel.alpha0() - C64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn kernel_is_hermitian_in_lag(sd in modes(), tau in 0.0f64..20.0) {
        let kernel = kernel_from_spectral_density(&sd);
        prop_assert!((kernel.eval(-tau) - kernel.eval(tau).conj()).norm() < 1e-14);
        prop_assert!(kernel.eval(tau).norm() <= kernel.alpha0().norm() + 1e-12);
    }

    #[test]
    fn noise_is_reproducible_and_stream_separated(seed in any::<u64>(), traj in 0u64..1000) {
        let kernel = kernel_from_spectral_density(&SpectralDensity::structured_default());
        let grid = TimeGrid::new(0.1, 20).unwrap();
        let a = generate_noise(&kernel, 3, grid, seed, traj).unwrap();
        let b = generate_noise(&kernel, 3, grid, seed, traj).unwrap();
        let c = generate_noise(&kernel, 3, grid, seed, traj + 1).unwrap();
        for site in 0..3 {
            prop_assert_eq!(a.site_samples(site), b.site_samples(site));
            prop_assert_ne!(a.site_samples(site), c.site_samples(site));
        }
        prop_assert_ne!(a.site_samples(0), a.site_samples(1));
    }

    #[test]
    fn free_ring_conserves_population_and_mirror_symmetry(n in 3usize..16, v in -3.0f64..3.0, site in 0usize..16) {
        let site = site % n;
        let model = build_ring(&RingSpec::new(n, v)).unwrap();
        let grid = TimeGrid::new(0.1, 40).unwrap();
        let p = free_ring_populations(&model, site, &grid).unwrap();
        for k in 0..grid.len() {
            prop_assert!((p.column(k).sum() - 1.0).abs() < 1e-10);
            for d in 1..n {
                prop_assert!((p[((site + d) % n, k)] - p[((site + n - d) % n, k)]).abs() < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn uncoupled_bath_keeps_norm(n in 2usize..8, c in -4.0f64..4.0, site in 0usize..8) {
        prop_assume!(n != 4);
        let model = build_ring(&RingSpec::from_shift(n, c).unwrap()).unwrap();
        let psi0 = ElectronicState::localized(n, site % n).unwrap();
        let kernel = BathKernel::zero();
        let grid = TimeGrid::covering(3.0, default_step(&model, &kernel)).unwrap();
        let traj = propagate_zero_noise(&model, &kernel, &psi0, grid).unwrap();
        let drift = traj.norms.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        prop_assert!(drift < 1e-8, "drift {drift}");
    }

    #[test]
    fn bath_only_dissipates_the_zero_noise_state(n in 2usize..7, c in -3.0f64..3.0) {
        prop_assume!(n != 4);
        let model = build_ring(&RingSpec::from_shift(n, c).unwrap()).unwrap();
        let kernel = kernel_from_spectral_density(&SpectralDensity::structured_default());
        let psi0 = ElectronicState::localized(n, 0).unwrap();
        let traj = propagate_zero_noise(&model, &kernel, &psi0, TimeGrid::new(0.01, 100).unwrap()).unwrap();
        // Early times: d‖ψ‖²/dt = -2 t α(0) ‖P ψ‖² + O(t²) < 0.
        prop_assert!(traj.norms[1] < 1.0 && traj.norms[1] > 0.99);
    }

    #[test]
    fn nonlinear_trajectories_stay_normalised(n in 2usize..6, c in -3.0f64..3.0, seed in any::<u64>()) {
        prop_assume!(n != 4);
        let model = build_ring(&RingSpec::from_shift(n, c).unwrap()).unwrap();
        let kernel = kernel_from_spectral_density(&SpectralDensity::structured_default());
        let grid = TimeGrid::new(0.02, 150).unwrap();
        let noise = generate_noise(&kernel, n, grid, seed, 0).unwrap();
        let psi0 = ElectronicState::localized(n, 0).unwrap();
        let traj = propagate_nonlinear(&model, &kernel, &noise, &psi0, grid).unwrap();
        for s in &traj.states {
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn normalised_spectra_have_unit_area(n in 2usize..7, c in -3.0f64..3.0) {
        prop_assume!(n != 4);
        let model = build_ring(&RingSpec::from_shift(n, c).unwrap()).unwrap();
        let kernel = kernel_from_spectral_density(&SpectralDensity::structured_default());
        let grid = TimeGrid::new(0.02, 2000).unwrap();
        let psi0 = ElectronicState::localized(n, 0).unwrap();
        let ac = zero_noise_autocorrelation(&model, &kernel, &psi0, grid).unwrap();
        let freqs = FrequencyGrid::new(-10.0, 10.0, 2001).unwrap();
        let s = spectrum_from_autocorrelation(&ac, &grid, 10.0, &freqs, Normalization::UnitArea).unwrap();
        prop_assert!((s.area() - 1.0).abs() < 1e-9);
        prop_assert!(s.values.iter().all(|x| x.is_finite()));
    }
}
