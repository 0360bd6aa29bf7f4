//! Shared fixtures for the pipeline benchmarks.

use levy_besov_core::field::{
    sample_coefficient_field, Backend, CoefficientField, SimulationWindow,
};
use levy_besov_core::levy::{LevyFamily, LevyModel};
use levy_besov_core::rng::{stream, Stream};
use levy_besov_core::wavelet::WaveletSpec;
use rand::RngExt;

pub fn bench_stream(role: &str) -> Stream {
    stream(0xBEEF, 0, role)
}

/// Deterministic pseudo-random signal of length `n`.
pub fn random_signal(n: usize, role: &str) -> Vec<f64> {
    let mut rng = bench_stream(role);
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// A Gaussian coefficient field on the unit window at depth `j_fine`.
pub fn gaussian_field(j_fine: u32) -> CoefficientField {
    let model = LevyModel::new(LevyFamily::Gaussian { sigma2: 1.0 }).unwrap();
    let window = SimulationWindow::unit_cube(1, j_fine);
    sample_coefficient_field(
        &model,
        &window,
        &WaveletSpec::haar(),
        Backend::GaussianExact,
        0xBEEF,
        0,
    )
    .unwrap()
}
