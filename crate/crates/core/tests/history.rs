mod common;
use common::history::{aux_history_deviation, random_instance};

#[test]
fn aux_equation_matches_history_integration() {
    for seed in [1, 2, 3] {
        let (model, kernel) = random_instance(seed);
        let worst = aux_history_deviation(&model, &kernel);
        assert!(worst <= 1e-4, "seed {seed}: max deviation {worst:e}");
    }
}

#[test]
fn ring_with_structured_bath_matches_history() {
    let model = nmqsd::build_ring(&nmqsd::RingSpec::new(3, -0.8)).unwrap();
    let kernel = nmqsd::kernel_from_spectral_density(&nmqsd::SpectralDensity::structured_default());
    let worst = aux_history_deviation(&model, &kernel);
    assert!(worst <= 1e-4, "max deviation {worst:e}");
}
