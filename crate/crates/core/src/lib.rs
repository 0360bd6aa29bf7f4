//! Core algorithms for synthesizing Levy white noises in the wavelet domain,
//! computing truncated weighted Besov quasi-norms, and recovering the critical
//! smoothness and asymptotic growth exponents from Monte Carlo scale statistics.
//!
//! Module layout mirrors the pipeline:
//!
//! * [`levy`] — noise families, Levy exponents, triplets, and their indices;
//! * [`wavelet`] — Daubechies filters, the cascade algorithm, and separable DWTs;
//! * [`sampler`] — exact draws of cell integrals and compound Poisson impulse fields;
//! * [`field`] — wavelet coefficient fields of a noise over a simulation window;
//! * [`besov`] — per-scale terms of the weighted Besov quasi-norm;
//! * [`analysis`] — slope regressions, tail-index estimation, and theory reports.

pub mod analysis;
pub mod besov;
pub mod field;
pub mod levy;
pub mod numerics;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod wavelet;

pub use besov::BesovParams;
pub use field::{CoefficientField, SimulationWindow};
pub use levy::{LevyModel, LevyTriplet, NoiseIndices};
pub use wavelet::WaveletSpec;
