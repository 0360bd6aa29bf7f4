//! Experiment configuration: the JSON schema read from `--config`, its
//! defaults, and the mapping onto core types. Configs round-trip losslessly
//! through serde so reports can echo them verbatim.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use levy_besov_core::analysis::Tolerances;
use levy_besov_core::field::{Backend, SimulationWindow};
use levy_besov_core::levy::{JumpLaw, LevyFamily, LevyModel};
use levy_besov_core::wavelet::WaveletSpec;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpDescriptor {
    Gaussian { sigma: f64 },
    Uniform { lo: f64, hi: f64 },
    PointMass { value: f64 },
    Pareto { alpha: f64 },
}

impl JumpDescriptor {
    fn to_law(&self) -> JumpLaw {
        match *self {
            JumpDescriptor::Gaussian { sigma } => JumpLaw::Gaussian { sigma },
            JumpDescriptor::Uniform { lo, hi } => JumpLaw::Uniform { lo, hi },
            JumpDescriptor::PointMass { value } => JumpLaw::PointMass { value },
            JumpDescriptor::Pareto { alpha } => JumpLaw::SymmetricPareto { alpha },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelDescriptor {
    Gaussian {
        sigma2: f64,
    },
    Cauchy {
        gamma: f64,
    },
    Sas {
        alpha: f64,
    },
    SumOfStables {
        alpha1: f64,
        alpha2: f64,
    },
    Laplace {
        sigma2: f64,
    },
    SymmetricGamma {
        sigma2: f64,
        lambda: f64,
    },
    CompoundPoisson {
        rate: f64,
        jumps: JumpDescriptor,
    },
    LayeredStable {
        alpha1: f64,
        alpha2: f64,
    },
    InverseGaussian,
    FarkasSingle {
        beta2: f64,
        m_order: u32,
    },
    FarkasDouble {
        beta1: f64,
        beta2: f64,
        m_order: u32,
    },
}

impl ModelDescriptor {
    pub fn to_model(&self) -> Result<LevyModel> {
        let family = match self.clone() {
            ModelDescriptor::Gaussian { sigma2 } => LevyFamily::Gaussian { sigma2 },
            ModelDescriptor::Cauchy { gamma } => LevyFamily::Cauchy { gamma },
            ModelDescriptor::Sas { alpha } => LevyFamily::Sas { alpha },
            ModelDescriptor::SumOfStables { alpha1, alpha2 } => {
                LevyFamily::SumOfStables { alpha1, alpha2 }
            }
            ModelDescriptor::Laplace { sigma2 } => LevyFamily::Laplace { sigma2 },
            ModelDescriptor::SymmetricGamma { sigma2, lambda } => {
                LevyFamily::SymmetricGamma { sigma2, lambda }
            }
            ModelDescriptor::CompoundPoisson { rate, jumps } => LevyFamily::CompoundPoisson {
                rate,
                jumps: jumps.to_law(),
            },
            ModelDescriptor::LayeredStable { alpha1, alpha2 } => {
                LevyFamily::LayeredStable { alpha1, alpha2 }
            }
            ModelDescriptor::InverseGaussian => LevyFamily::InverseGaussian,
            ModelDescriptor::FarkasSingle { beta2, m_order } => {
                LevyFamily::FarkasSingle { beta2, m_order }
            }
            ModelDescriptor::FarkasDouble {
                beta1,
                beta2,
                m_order,
            } => LevyFamily::FarkasDouble {
                beta1,
                beta2,
                m_order,
            },
        };
        Ok(LevyModel::new(family)?)
    }

    pub fn label(&self) -> String {
        match self {
            ModelDescriptor::Gaussian { sigma2 } => format!("gaussian(sigma2={sigma2})"),
            ModelDescriptor::Cauchy { gamma } => format!("cauchy(gamma={gamma})"),
            ModelDescriptor::Sas { alpha } => format!("sas(alpha={alpha})"),
            ModelDescriptor::SumOfStables { alpha1, alpha2 } => {
                format!("sum-of-stables({alpha1},{alpha2})")
            }
            ModelDescriptor::Laplace { sigma2 } => format!("laplace(sigma2={sigma2})"),
            ModelDescriptor::SymmetricGamma { sigma2, lambda } => {
                format!("symmetric-gamma(sigma2={sigma2},lambda={lambda})")
            }
            ModelDescriptor::CompoundPoisson { rate, .. } => {
                format!("compound-poisson(rate={rate})")
            }
            ModelDescriptor::LayeredStable { alpha1, alpha2 } => {
                format!("layered-stable({alpha1},{alpha2})")
            }
            ModelDescriptor::InverseGaussian => "inverse-gaussian".to_string(),
            ModelDescriptor::FarkasSingle { beta2, m_order } => {
                format!("farkas-single(beta2={beta2},M={m_order})")
            }
            ModelDescriptor::FarkasDouble {
                beta1,
                beta2,
                m_order,
            } => {
                format!("farkas-double({beta1},{beta2},M={m_order})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    Auto,
    GaussianExact,
    PoissonExact,
    GridDwt,
}

impl BackendChoice {
    pub fn resolve(&self, model: &LevyModel) -> Backend {
        match self {
            BackendChoice::Auto => levy_besov_core::analysis::auto_backend(model),
            BackendChoice::GaussianExact => Backend::GaussianExact,
            BackendChoice::PoissonExact => Backend::PoissonExact,
            BackendChoice::GridDwt => Backend::GridDwt,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub extent: u64,
    pub j_fine: u32,
    #[serde(default)]
    pub guard_band: usize,
}

/// Settings for the dirac command: a deterministic impulse at `x0` classified
/// over a (p, τ) grid.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiracConfig {
    pub x0: Vec<f64>,
    pub p_values: Vec<f64>,
    pub tau_values: Vec<f64>,
}

impl Default for DiracConfig {
    fn default() -> Self {
        Self {
            x0: vec![0.25],
            p_values: vec![1.0, 2.0],
            tau_values: vec![-0.25, 0.0, 0.25],
        }
    }
}

fn default_wavelet() -> WaveletSpec {
    WaveletSpec::haar()
}
fn default_backend() -> BackendChoice {
    BackendChoice::Auto
}
fn default_p_grid() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_replicates() -> usize {
    100
}
fn default_seed() -> u64 {
    20260808
}
fn default_rho_extent() -> u64 {
    1 << 16
}
fn default_hill_k() -> usize {
    600
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelDescriptor,
    pub d: usize,
    #[serde(default = "default_wavelet")]
    pub wavelet: WaveletSpec,
    #[serde(default = "default_backend")]
    pub backend: BackendChoice,
    pub window: WindowConfig,
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<f64>,
    #[serde(default)]
    pub tau_ref: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Scale range used in slope regressions (defaults to [4, j_fine − 1]).
    #[serde(default)]
    pub j_range: Option<(u32, u32)>,
    /// Window extent for father-coefficient tail samples.
    #[serde(default = "default_rho_extent")]
    pub rho_extent: u64,
    #[serde(default = "default_hill_k")]
    pub hill_k: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub dump_coefficients: bool,
    #[serde(default)]
    pub dirac: Option<DiracConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d == 1 || self.d == 2) {
            bail!("d must be 1 or 2");
        }
        if self.window.extent == 0 || self.window.j_fine == 0 {
            bail!("window must have positive extent and depth");
        }
        if self.p_grid.is_empty() || self.p_grid.iter().any(|p| *p <= 0.0) {
            bail!("p_grid must hold positive values");
        }
        if let Some((lo, hi)) = self.j_range {
            if lo > hi || hi >= self.window.j_fine {
                bail!("j_range must satisfy lo ≤ hi < j_fine");
            }
        }
        Ok(())
    }

    pub fn simulation_window(&self) -> SimulationWindow {
        SimulationWindow {
            d: self.d,
            extent: self.window.extent,
            j_fine: self.window.j_fine,
            guard_band: self.window.guard_band,
        }
    }

    pub fn effective_j_range(&self) -> (u32, u32) {
        self.j_range
            .unwrap_or((4.min(self.window.j_fine - 1), self.window.j_fine - 1))
    }

    pub fn effective_tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_losslessly() {
        let json = r#"{
            "model": { "family": "compound-poisson", "rate": 1.0,
                       "jumps": { "law": "gaussian", "sigma": 1.0 } },
            "d": 1,
            "wavelet": { "kind": "haar", "cascade_depth": 12 },
            "backend": "auto",
            "window": { "extent": 1, "j_fine": 13, "guard_band": 0 },
            "p_grid": [1.0],
            "tau_ref": 0.0,
            "rho": 0.0,
            "replicates": 200,
            "master_seed": 7,
            "j_range": [4, 12],
            "rho_extent": 65536,
            "hill_k": 600,
            "out_dir": "out",
            "dump_coefficients": false
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(back.model, cfg.model);
        assert_eq!(back.master_seed, 7);
        assert_eq!(back.j_range, Some((4, 12)));
        assert_eq!(serde_json::to_string(&back).unwrap(), echoed);
    }

    #[test]
    fn defaults_fill_in() {
        let json = r#"{
            "model": { "family": "gaussian", "sigma2": 1.0 },
            "d": 1,
            "window": { "extent": 1, "j_fine": 12 }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.replicates, 100);
        assert!(cfg.wavelet.is_haar());
        assert_eq!(cfg.effective_j_range(), (4, 11));
    }

    #[test]
    fn daubechies_wavelet_config() {
        let json = r#"{
            "model": { "family": "sas", "alpha": 1.2 },
            "d": 1,
            "wavelet": { "kind": { "daubechies": 2 }, "cascade_depth": 12 },
            "window": { "extent": 1, "j_fine": 10 }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.wavelet.order(), 2);
    }

    #[test]
    fn bad_config_rejected() {
        let json = r#"{
            "model": { "family": "sas", "alpha": 1.2 },
            "d": 3,
            "window": { "extent": 1, "j_fine": 10 }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.validate().is_err());
    }
}
