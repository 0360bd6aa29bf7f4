//! Levy noise families: exponents, triplets, indices, structural conditions.
//!
//! Each family carries an evaluable Levy exponent Ψ with Ψ(0) = 0 and
//! Ψ(−ξ) = conj Ψ(ξ). Closed forms are used wherever the family admits one;
//! piecewise power-law densities go through the truncated cosine moment
//! integral of [`crate::numerics`], and the dyadic-atom chains are summed as a
//! truncated series whose terms collapse doubly exponentially.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{
    adaptive_simpson, cosine_moment_partial, cosine_tail_constant, QuadratureError,
};

#[derive(Debug, Error)]
pub enum LevyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergentQuadrature(#[from] QuadratureError),
    #[error("no closed-form index table row for a custom exponent")]
    NoClosedForm,
    #[error("Ψ(2^{m}) = 0: degenerate ladder point")]
    DegenerateExponent { m: f64 },
    #[error("tail mass ν(|t|>1) does not converge")]
    NonFiniteTailMass,
    #[error("p = {p} requested but the p-th moment is infinite (p_max = {p_max})")]
    MomentInfinite { p: f64, p_max: f64 },
    #[error("moment quadrature failed: {0}")]
    QuadratureFailure(String),
}

/// Jump distribution of a compound Poisson part. `P({0}) = 0` holds for every
/// variant by construction.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// Centered normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Point mass at `value` (nonzero).
    PointMass { value: f64 },
    /// Symmetric Pareto: |a| has density α t^{−α−1} on t ≥ 1, sign ±1/2.
    SymmetricPareto { alpha: f64 },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<(), LevyError> {
        match self {
            JumpLaw::Gaussian { sigma } if *sigma <= 0.0 => {
                Err(LevyError::InvalidParameter("jump sigma must be > 0".into()))
            }
            JumpLaw::Uniform { lo, hi } if lo >= hi => Err(LevyError::InvalidParameter(
                "jump interval must be nonempty".into(),
            )),
            JumpLaw::PointMass { value } if *value == 0.0 => Err(LevyError::InvalidParameter(
                "jump law may not charge 0".into(),
            )),
            JumpLaw::SymmetricPareto { alpha } if *alpha <= 0.0 => Err(
                LevyError::InvalidParameter("Pareto tail index must be > 0".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Characteristic function E[e^{iξa}].
    pub fn cf(&self, xi: f64) -> Complex64 {
        match *self {
            JumpLaw::Gaussian { sigma } => {
                Complex64::new((-0.5 * sigma * sigma * xi * xi).exp(), 0.0)
            }
            JumpLaw::Uniform { lo, hi } => {
                if xi == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                let num = Complex64::new(0.0, hi * xi).exp() - Complex64::new(0.0, lo * xi).exp();
                num / Complex64::new(0.0, xi * (hi - lo))
            }
            JumpLaw::PointMass { value } => Complex64::new(0.0, value * xi).exp(),
            JumpLaw::SymmetricPareto { alpha } => {
                // E[cos(ξa)] = α ∫_1^∞ cos(tξ) t^{−1−α} dt = 1 − α|ξ|^α (c(α) − G(α, |ξ|))
                let ax = xi.abs();
                if ax == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                let g = cosine_moment_partial(alpha, ax).expect("pareto cf quadrature");
                Complex64::new(
                    1.0 - alpha * ax.powf(alpha) * (cosine_tail_constant(alpha) - g),
                    0.0,
                )
            }
        }
    }

    /// Supremum of p with E|a|^p < ∞.
    pub fn moment_index(&self) -> f64 {
        match self {
            JumpLaw::SymmetricPareto { alpha } => *alpha,
            _ => f64::INFINITY,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            JumpLaw::Gaussian { .. } | JumpLaw::SymmetricPareto { .. } => true,
            JumpLaw::Uniform { lo, hi } => (lo + hi).abs() < 1e-15,
            JumpLaw::PointMass { .. } => false,
        }
    }

    /// P(|a| > 1), used when splitting a finite measure at jump size one.
    pub fn prob_above_one(&self) -> f64 {
        match *self {
            JumpLaw::Gaussian { sigma } => erfc_scaled(1.0 / sigma),
            JumpLaw::Uniform { lo, hi } => {
                let len = hi - lo;
                let above = (hi.min(f64::INFINITY) - lo.max(1.0)).max(0.0)
                    + ((-1.0f64).min(hi) - lo).max(0.0);
                (above / len).clamp(0.0, 1.0)
            }
            JumpLaw::PointMass { value } => {
                if value.abs() > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            JumpLaw::SymmetricPareto { .. } => 1.0,
        }
    }
}

/// P(|Z| > x) for standard normal Z.
fn erfc_scaled(x: f64) -> f64 {
    libm::erfc(x / std::f64::consts::SQRT_2)
}

/// One symmetric power-law slice of a Levy density: weight · |t|^{−1−α} on
/// lo < |t| ≤ hi (`hi = None` means unbounded).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPiece {
    pub alpha: f64,
    pub weight: f64,
    pub lo: f64,
    pub hi: Option<f64>,
}

impl PowerPiece {
    /// ∫ over this piece of (cos(tξ) − 1) dν, always ≤ 0.
    fn psi(&self, xi: f64) -> Result<f64, QuadratureError> {
        let ax = xi.abs();
        if ax == 0.0 {
            return Ok(0.0);
        }
        let g_hi = match self.hi {
            Some(h) => cosine_moment_partial(self.alpha, h * ax)?,
            None => cosine_tail_constant(self.alpha),
        };
        let g_lo = cosine_moment_partial(self.alpha, self.lo * ax)?;
        Ok(-2.0 * self.weight * ax.powf(self.alpha) * (g_hi - g_lo))
    }

    /// Total mass of the piece; infinite when lo = 0.
    fn mass(&self) -> f64 {
        if self.lo == 0.0 {
            return f64::INFINITY;
        }
        let upper = match self.hi {
            Some(h) => h.powf(-self.alpha),
            None => 0.0,
        };
        2.0 * self.weight * (self.lo.powf(-self.alpha) - upper) / self.alpha
    }
}

/// Farkas-style chain of symmetric atoms: mass 2^{β₂ M^k − k} at ±2^{−M^k}.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicAtomChain {
    pub beta2: f64,
    pub m_order: u32,
}

const FARKAS_MAX_TERMS: u32 = 12;

impl DyadicAtomChain {
    /// Σ_k 2^{β₂M^k − k} (cos(2^{−M^k} ξ) − 1), truncated once the doubly
    /// exponential collapse puts the remaining terms below 1e−12 relative
    /// (the admissibility constraint M(2−β₂) > 2 guarantees this within
    /// [`FARKAS_MAX_TERMS`] terms for any ξ representable in f64).
    fn psi(&self, xi: f64) -> f64 {
        let ax = xi.abs();
        if ax == 0.0 {
            return 0.0;
        }
        let m = self.m_order as f64;
        let lg_xi = ax.log2();
        let mut total = 0.0;
        let mut scale = m; // M^k
        for k in 1..=FARKAS_MAX_TERMS {
            let weight_log2 = self.beta2 * scale - k as f64;
            let arg_log2 = lg_xi - scale;
            let term = if arg_log2 < -30.0 {
                // small angle: cos x − 1 ≈ −x²/2
                let t_log2 = weight_log2 + 2.0 * arg_log2 - 1.0;
                if t_log2 < -1060.0 {
                    0.0
                } else {
                    -(t_log2).exp2()
                }
            } else {
                let x = ax * (-scale).exp2();
                let one_minus_cos = 2.0 * (0.5 * x).sin().powi(2);
                if one_minus_cos == 0.0 {
                    0.0
                } else {
                    -(weight_log2 + one_minus_cos.log2()).exp2()
                }
            };
            total += term;
            scale *= m;
            // remaining terms are bounded by 2^{β₂·scale − k + 2 arg − 1} which
            // has collapsed once β₂·scale − 2·scale + 2 lg ξ is deeply negative
            if (self.beta2 - 2.0) * scale + 2.0 * lg_xi < -60.0 + total.abs().log2().min(0.0) {
                break;
            }
        }
        total
    }

    fn variance_mass(&self) -> f64 {
        // Σ_k 2^{β₂M^k − k} · 2^{−2M^k} = ∫ t² dν
        let m = self.m_order as f64;
        let mut total = 0.0;
        let mut scale = m;
        for k in 1..=FARKAS_MAX_TERMS {
            let lg = (self.beta2 - 2.0) * scale - k as f64;
            if lg > -1060.0 {
                total += lg.exp2();
            }
            scale *= m;
        }
        total
    }
}

/// Symbolic Levy measure descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasure {
    Zero,
    /// Finite measure λ·P with rate λ > 0 and jump law P.
    Finite {
        rate: f64,
        jumps: JumpLaw,
    },
    /// Symmetric density given by power-law pieces.
    Density(Vec<PowerPiece>),
    /// Dyadic atom chain (optionally on top of a density part).
    Atoms {
        density: Vec<PowerPiece>,
        chain: DyadicAtomChain,
    },
}

/// A Levy–Khintchine triplet (μ, σ², ν) with symbolic ν.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    pub drift: f64,
    pub gaussian_var: f64,
    pub measure: LevyMeasure,
}

impl LevyTriplet {
    pub fn new(drift: f64, gaussian_var: f64, measure: LevyMeasure) -> Result<Self, LevyError> {
        if gaussian_var < 0.0 {
            return Err(LevyError::InvalidParameter("σ² must be ≥ 0".into()));
        }
        if let LevyMeasure::Finite { rate, jumps } = &measure {
            if *rate <= 0.0 {
                return Err(LevyError::InvalidParameter("λ must be > 0".into()));
            }
            jumps.validate()?;
        }
        Ok(Self {
            drift,
            gaussian_var,
            measure,
        })
    }

    pub fn zero() -> Self {
        Self {
            drift: 0.0,
            gaussian_var: 0.0,
            measure: LevyMeasure::Zero,
        }
    }

    /// Evaluate the exponent of this triplet. Finite-measure jump parts are
    /// kept uncompensated (their mass is finite, so no compensator is needed
    /// and the three split parts add exactly).
    pub fn psi(&self, xi: f64) -> Result<Complex64, LevyError> {
        let mut v = Complex64::new(-0.5 * self.gaussian_var * xi * xi, self.drift * xi);
        match &self.measure {
            LevyMeasure::Zero => {}
            LevyMeasure::Finite { rate, jumps } => {
                v += *rate * (jumps.cf(xi) - 1.0);
            }
            LevyMeasure::Density(pieces) => {
                for p in pieces {
                    v += p.psi(xi)?;
                }
            }
            LevyMeasure::Atoms { density, chain } => {
                for p in density {
                    v += p.psi(xi)?;
                }
                v += chain.psi(xi);
            }
        }
        Ok(v)
    }

    /// ∫ min(1, t²) dν, finite for every admissible measure here.
    pub fn measure_integrability(&self) -> Result<f64, LevyError> {
        let kernel = |piece: &PowerPiece| -> Result<f64, LevyError> {
            // 2w [ ∫_{lo}^{min(hi,1)} t^{1−α} dt + ∫_{max(lo,1)}^{hi} t^{−1−α} dt ]
            let a = piece.alpha;
            let hi = piece.hi.unwrap_or(f64::INFINITY);
            let mut total = 0.0;
            let sq_hi = hi.min(1.0);
            if piece.lo < sq_hi {
                if a >= 2.0 {
                    return Err(LevyError::InvalidParameter(
                        "density piece not σ-finite near 0".into(),
                    ));
                }
                total += (sq_hi.powf(2.0 - a) - piece.lo.powf(2.0 - a)) / (2.0 - a);
            }
            let tail_lo = piece.lo.max(1.0);
            if hi > tail_lo {
                let upper = if hi.is_finite() { hi.powf(-a) } else { 0.0 };
                total += (tail_lo.powf(-a) - upper) / a;
            }
            Ok(2.0 * piece.weight * total)
        };
        match &self.measure {
            LevyMeasure::Zero => Ok(0.0),
            LevyMeasure::Finite { rate, jumps } => {
                // λ E[min(1, a²)] by quadrature over the jump law
                let val = match *jumps {
                    JumpLaw::Gaussian { sigma } => adaptive_simpson(
                        &|t: f64| {
                            let d = (-0.5 * (t / sigma) * (t / sigma)).exp()
                                / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                            (t * t).min(1.0) * d
                        },
                        -10.0 * sigma,
                        10.0 * sigma,
                        1e-12,
                        40,
                    )?,
                    JumpLaw::Uniform { lo, hi } => {
                        adaptive_simpson(&|t: f64| (t * t).min(1.0) / (hi - lo), lo, hi, 1e-12, 40)?
                    }
                    JumpLaw::PointMass { value } => (value * value).min(1.0),
                    JumpLaw::SymmetricPareto { .. } => 1.0, // support on |t| ≥ 1
                };
                Ok(rate * val)
            }
            LevyMeasure::Density(pieces) => pieces.iter().map(kernel).sum::<Result<f64, _>>(),
            LevyMeasure::Atoms { density, chain } => {
                let d: f64 = density.iter().map(kernel).sum::<Result<f64, _>>()?;
                Ok(d + chain.variance_mass())
            }
        }
    }
}

/// The ε-condition outcome for one ε on the probe grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonOutcome {
    /// ∫ min(|t|^ε, t²) dν evaluates finite, with the value.
    Finite(f64),
    Diverges,
    /// ν = 0: nothing to check.
    Vacuous,
}

/// Report produced by [`LevyModel::check_conditions`].
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// sup over the grid of |Im Ψ| / |Re Ψ| (∞ if Re vanishes while Im does not).
    pub sector_ratio_sup: f64,
    /// The ξ grid the supremum was taken over.
    pub sector_grid: Vec<f64>,
    /// (ε, outcome) pairs on the ε probe grid.
    pub epsilon_results: Vec<(f64, EpsilonOutcome)>,
    /// Smallest probed ε for which the integral is finite.
    pub smallest_passing_epsilon: Option<f64>,
}

/// Serialize a possibly-infinite exponent as a number or the string "inf"
/// (JSON has no infinity literal).
pub fn serialize_extended_f64<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*x)
    }
}

/// Blumenthal–Getoor and moment indices of a noise.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NoiseIndices {
    pub beta_inf: f64,
    pub beta_inf_lower: f64,
    /// Moment index; `f64::INFINITY` is the distinguished "inf" value.
    #[serde(serialize_with = "serialize_extended_f64")]
    pub p_max: f64,
    /// Pruitt index, always min(p_max, 2).
    pub pruitt_beta0: f64,
}

impl NoiseIndices {
    pub fn new(beta_inf: f64, beta_inf_lower: f64, p_max: f64) -> Self {
        debug_assert!(
            0.0 <= beta_inf_lower && beta_inf_lower <= beta_inf && beta_inf <= 2.0,
            "index ordering violated"
        );
        Self {
            beta_inf,
            beta_inf_lower,
            p_max,
            pruitt_beta0: p_max.min(2.0),
        }
    }
}

/// Ladder-based numeric estimate of the Blumenthal–Getoor indices.
#[derive(Debug, Clone)]
pub struct IndexEstimate {
    pub beta_inf: f64,
    pub beta_inf_lower: f64,
    /// (ladder exponent m, r_m = log₂|Ψ(2^m)| / m) for every ladder point.
    pub points: Vec<(f64, f64)>,
    /// Always true: the estimate probes finitely many ξ of a limit definition.
    pub heuristic: bool,
}

type CustomExponent = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A noise family with its parameters.
#[derive(Clone)]
pub enum LevyFamily {
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
        jumps: JumpLaw,
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
    Custom(CustomExponent),
}

impl fmt::Debug for LevyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevyFamily::Gaussian { sigma2 } => write!(f, "Gaussian(σ²={sigma2})"),
            LevyFamily::Cauchy { gamma } => write!(f, "Cauchy(γ={gamma})"),
            LevyFamily::Sas { alpha } => write!(f, "SαS(α={alpha})"),
            LevyFamily::SumOfStables { alpha1, alpha2 } => {
                write!(f, "SumOfStables(α₁={alpha1}, α₂={alpha2})")
            }
            LevyFamily::Laplace { sigma2 } => write!(f, "Laplace(σ²={sigma2})"),
            LevyFamily::SymmetricGamma { sigma2, lambda } => {
                write!(f, "SymmetricGamma(σ²={sigma2}, λ={lambda})")
            }
            LevyFamily::CompoundPoisson { rate, jumps } => {
                write!(f, "CompoundPoisson(λ={rate}, jumps={jumps:?})")
            }
            LevyFamily::LayeredStable { alpha1, alpha2 } => {
                write!(f, "LayeredStable(α₁={alpha1}, α₂={alpha2})")
            }
            LevyFamily::InverseGaussian => write!(f, "InverseGaussian"),
            LevyFamily::FarkasSingle { beta2, m_order } => {
                write!(f, "FarkasSingle(β₂={beta2}, M={m_order})")
            }
            LevyFamily::FarkasDouble {
                beta1,
                beta2,
                m_order,
            } => {
                write!(f, "FarkasDouble(β₁={beta1}, β₂={beta2}, M={m_order})")
            }
            LevyFamily::Custom(_) => write!(f, "Custom(Ψ)"),
        }
    }
}

/// A validated noise model: family plus the evaluable exponent.
#[derive(Debug, Clone)]
pub struct LevyModel {
    family: LevyFamily,
}

impl LevyModel {
    pub fn new(family: LevyFamily) -> Result<Self, LevyError> {
        let bad = |msg: &str| Err(LevyError::InvalidParameter(msg.into()));
        match &family {
            LevyFamily::Gaussian { sigma2 } if *sigma2 <= 0.0 => return bad("σ² must be > 0"),
            LevyFamily::Cauchy { gamma } if *gamma <= 0.0 => return bad("γ must be > 0"),
            LevyFamily::Sas { alpha } if !(*alpha > 0.0 && *alpha <= 2.0) => {
                return bad("α must lie in (0, 2]")
            }
            LevyFamily::SumOfStables { alpha1, alpha2 } => {
                if !(*alpha1 > 0.0 && *alpha1 <= 2.0 && *alpha2 > 0.0 && *alpha2 <= 2.0) {
                    return bad("both α must lie in (0, 2]");
                }
            }
            LevyFamily::Laplace { sigma2 } if *sigma2 <= 0.0 => return bad("σ² must be > 0"),
            LevyFamily::SymmetricGamma { sigma2, lambda } => {
                if *sigma2 <= 0.0 || *lambda <= 0.0 {
                    return bad("σ² and λ must be > 0");
                }
            }
            LevyFamily::CompoundPoisson { rate, jumps } => {
                if *rate <= 0.0 {
                    return bad("λ must be > 0");
                }
                jumps.validate()?;
            }
            LevyFamily::LayeredStable { alpha1, alpha2 } => {
                if !(*alpha1 > 0.0 && *alpha1 < 2.0 && *alpha2 > 0.0 && *alpha2 < 2.0) {
                    return bad("both α must lie in (0, 2)");
                }
            }
            LevyFamily::FarkasSingle { beta2, m_order } => {
                validate_farkas(0.0, *beta2, *m_order)?;
            }
            LevyFamily::FarkasDouble {
                beta1,
                beta2,
                m_order,
            } => {
                if *beta1 <= 0.0 {
                    return bad("β₁ must be > 0");
                }
                validate_farkas(*beta1, *beta2, *m_order)?;
            }
            _ => {}
        }
        Ok(Self { family })
    }

    pub fn custom(psi: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            family: LevyFamily::Custom(Arc::new(psi)),
        }
    }

    pub fn family(&self) -> &LevyFamily {
        &self.family
    }

    /// Evaluate the Levy exponent Ψ(ξ).
    pub fn evaluate_psi(&self, xi: f64) -> Result<Complex64, LevyError> {
        if xi == 0.0 {
            if let LevyFamily::Custom(f) = &self.family {
                return Ok(f(0.0));
            }
            return Ok(Complex64::new(0.0, 0.0));
        }
        let re = |x: f64| Complex64::new(x, 0.0);
        Ok(match &self.family {
            LevyFamily::Gaussian { sigma2 } => re(-0.5 * sigma2 * xi * xi),
            LevyFamily::Cauchy { gamma } => re(-gamma * xi.abs()),
            LevyFamily::Sas { alpha } => re(-xi.abs().powf(*alpha)),
            LevyFamily::SumOfStables { alpha1, alpha2 } => {
                re(-xi.abs().powf(*alpha1) - xi.abs().powf(*alpha2))
            }
            LevyFamily::Laplace { sigma2 } => re(-(1.0 + 0.5 * sigma2 * xi * xi).ln()),
            LevyFamily::SymmetricGamma { sigma2, lambda } => {
                re(-lambda * (1.0 + 0.5 * sigma2 * xi * xi).ln())
            }
            LevyFamily::CompoundPoisson { rate, jumps } => *rate * (jumps.cf(xi) - 1.0),
            LevyFamily::LayeredStable { alpha1, alpha2 } => {
                let ax = xi.abs();
                let small = -2.0 * ax.powf(*alpha1) * cosine_moment_partial(*alpha1, ax)?;
                let big = -2.0
                    * ax.powf(*alpha2)
                    * (cosine_tail_constant(*alpha2) - cosine_moment_partial(*alpha2, ax)?);
                re(small + big)
            }
            LevyFamily::InverseGaussian => {
                Complex64::new(1.0, 0.0) - (Complex64::new(1.0, -2.0 * xi)).sqrt()
            }
            LevyFamily::FarkasSingle { beta2, m_order } => re(DyadicAtomChain {
                beta2: *beta2,
                m_order: *m_order,
            }
            .psi(xi)),
            LevyFamily::FarkasDouble {
                beta1,
                beta2,
                m_order,
            } => {
                let ax = xi.abs();
                let small = -2.0 * ax.powf(*beta1) * cosine_moment_partial(*beta1, ax)?;
                re(small
                    + DyadicAtomChain {
                        beta2: *beta2,
                        m_order: *m_order,
                    }
                    .psi(xi))
            }
            LevyFamily::Custom(f) => f(xi),
        })
    }

    /// exp(t Ψ(ξ)): characteristic function of ⟨w, 1_A⟩ with Leb(A) = t.
    pub fn cf(&self, xi: f64, t: f64) -> Result<Complex64, LevyError> {
        Ok((self.evaluate_psi(xi)? * t).exp())
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            LevyFamily::CompoundPoisson { jumps, .. } => jumps.is_symmetric(),
            LevyFamily::InverseGaussian | LevyFamily::Custom(_) => false,
            _ => true,
        }
    }

    /// Index table row for the family.
    pub fn closed_form_indices(&self) -> Result<NoiseIndices, LevyError> {
        let idx = match &self.family {
            LevyFamily::Gaussian { .. } => NoiseIndices::new(2.0, 2.0, f64::INFINITY),
            LevyFamily::Cauchy { .. } => NoiseIndices::new(1.0, 1.0, 1.0),
            LevyFamily::Sas { alpha } => {
                if *alpha == 2.0 {
                    NoiseIndices::new(2.0, 2.0, f64::INFINITY)
                } else {
                    NoiseIndices::new(*alpha, *alpha, *alpha)
                }
            }
            LevyFamily::SumOfStables { alpha1, alpha2 } => {
                let hi = alpha1.max(*alpha2);
                let lo = alpha1.min(*alpha2);
                let p_max = if lo == 2.0 { f64::INFINITY } else { lo };
                NoiseIndices::new(hi, hi, p_max)
            }
            LevyFamily::Laplace { .. } | LevyFamily::SymmetricGamma { .. } => {
                NoiseIndices::new(0.0, 0.0, f64::INFINITY)
            }
            LevyFamily::CompoundPoisson { jumps, .. } => {
                NoiseIndices::new(0.0, 0.0, jumps.moment_index())
            }
            LevyFamily::LayeredStable { alpha1, alpha2 } => {
                NoiseIndices::new(*alpha1, *alpha1, *alpha2)
            }
            LevyFamily::InverseGaussian => NoiseIndices::new(0.5, 0.5, f64::INFINITY),
            LevyFamily::FarkasSingle { beta2, .. } => NoiseIndices::new(*beta2, 0.0, f64::INFINITY),
            LevyFamily::FarkasDouble { beta1, beta2, .. } => {
                NoiseIndices::new(*beta2, *beta1, f64::INFINITY)
            }
            LevyFamily::Custom(_) => return Err(LevyError::NoClosedForm),
        };
        Ok(idx)
    }

    /// Numeric Blumenthal–Getoor estimate from a ladder of dyadic exponents:
    /// r_m = log₂|Ψ(2^m)| / m, with β̂∞ (β̲̂∞) the max (min) of r over the tail
    /// half of the ladder, clamped to [0, 2].
    ///
    /// Ladder entries may be fractional so probes can sit on the 2π-aligned
    /// lattice where chain exponents dip.
    pub fn numeric_bg_indices(&self, ladder: &[f64]) -> Result<IndexEstimate, LevyError> {
        if ladder.len() < 2 {
            return Err(LevyError::InvalidParameter(
                "ladder needs at least two points".into(),
            ));
        }
        if ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LevyError::InvalidParameter(
                "ladder must be strictly increasing".into(),
            ));
        }
        // 2^m must stay representable; |Ψ(2^m)| of an order-2 exponent then
        // still fits below the f64 overflow threshold.
        if *ladder.last().unwrap() > 520.0 || ladder[0] <= 0.0 {
            return Err(LevyError::InvalidParameter(
                "ladder exponents must lie in (0, 520]".into(),
            ));
        }
        let mut points = Vec::with_capacity(ladder.len());
        for &m in ladder {
            let xi = m.exp2();
            let psi = self.evaluate_psi(xi)?;
            let mag = psi.norm();
            if mag == 0.0 {
                return Err(LevyError::DegenerateExponent { m });
            }
            points.push((m, mag.log2() / m));
        }
        let tail_start = points.len() / 2;
        let tail = &points[tail_start..];
        let beta_inf = tail.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let beta_lo = tail.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        Ok(IndexEstimate {
            beta_inf: beta_inf.clamp(0.0, 2.0),
            beta_inf_lower: beta_lo.clamp(0.0, 2.0),
            points,
            heuristic: true,
        })
    }

    /// Sector and ε-condition report.
    pub fn check_conditions(&self) -> Result<ConditionReport, LevyError> {
        let grid: Vec<f64> = (-16..=80).map(|i| (i as f64 * 0.25).exp2()).collect();
        let mut sup: f64 = 0.0;
        for &xi in &grid {
            let psi = self.evaluate_psi(xi)?;
            let (re, im) = (psi.re.abs(), psi.im.abs());
            if im == 0.0 {
                continue;
            }
            sup = if re == 0.0 {
                f64::INFINITY
            } else {
                sup.max(im / re)
            };
        }
        let eps_grid = [0.1, 0.5, 1.0];
        let triplet = self.triplet();
        let mut eps_results = Vec::new();
        let mut smallest = None;
        for &eps in &eps_grid {
            let outcome = match &triplet {
                None => EpsilonOutcome::Vacuous,
                Some(t) => epsilon_condition(&t.measure, eps)?,
            };
            if matches!(outcome, EpsilonOutcome::Finite(_)) && smallest.is_none() {
                smallest = Some(eps);
            }
            if matches!(outcome, EpsilonOutcome::Vacuous) && smallest.is_none() {
                smallest = Some(eps);
            }
            eps_results.push((eps, outcome));
        }
        Ok(ConditionReport {
            sector_ratio_sup: sup,
            sector_grid: grid,
            epsilon_results: eps_results,
            smallest_passing_epsilon: smallest,
        })
    }

    /// The Levy triplet, for families whose measure this crate represents
    /// symbolically. Logarithmic-exponent families (Laplace, symmetric gamma,
    /// inverse Gaussian) and custom exponents return `None`.
    pub fn triplet(&self) -> Option<LevyTriplet> {
        let piece = |alpha: f64, weight: f64, lo: f64, hi: Option<f64>| PowerPiece {
            alpha,
            weight,
            lo,
            hi,
        };
        let stable_weight = |alpha: f64| {
            if alpha >= 2.0 {
                None
            } else {
                Some(0.5 / cosine_tail_constant(alpha))
            }
        };
        match &self.family {
            LevyFamily::Gaussian { sigma2 } => Some(LevyTriplet {
                drift: 0.0,
                gaussian_var: *sigma2,
                measure: LevyMeasure::Zero,
            }),
            LevyFamily::Cauchy { gamma } => Some(LevyTriplet {
                drift: 0.0,
                gaussian_var: 0.0,
                measure: LevyMeasure::Density(vec![piece(
                    1.0,
                    gamma / std::f64::consts::PI,
                    0.0,
                    None,
                )]),
            }),
            LevyFamily::Sas { alpha } => {
                let w = stable_weight(*alpha)?;
                Some(LevyTriplet {
                    drift: 0.0,
                    gaussian_var: 0.0,
                    measure: LevyMeasure::Density(vec![piece(*alpha, w, 0.0, None)]),
                })
            }
            LevyFamily::SumOfStables { alpha1, alpha2 } => {
                let w1 = stable_weight(*alpha1)?;
                let w2 = stable_weight(*alpha2)?;
                Some(LevyTriplet {
                    drift: 0.0,
                    gaussian_var: 0.0,
                    measure: LevyMeasure::Density(vec![
                        piece(*alpha1, w1, 0.0, None),
                        piece(*alpha2, w2, 0.0, None),
                    ]),
                })
            }
            LevyFamily::CompoundPoisson { rate, jumps } => Some(LevyTriplet {
                drift: 0.0,
                gaussian_var: 0.0,
                measure: LevyMeasure::Finite {
                    rate: *rate,
                    jumps: jumps.clone(),
                },
            }),
            LevyFamily::LayeredStable { alpha1, alpha2 } => Some(LevyTriplet {
                drift: 0.0,
                gaussian_var: 0.0,
                measure: LevyMeasure::Density(vec![
                    piece(*alpha1, 1.0, 0.0, Some(1.0)),
                    piece(*alpha2, 1.0, 1.0, None),
                ]),
            }),
            LevyFamily::FarkasSingle { beta2, m_order } => Some(LevyTriplet {
                drift: 0.0,
                gaussian_var: 0.0,
                measure: LevyMeasure::Atoms {
                    density: vec![],
                    chain: DyadicAtomChain {
                        beta2: *beta2,
                        m_order: *m_order,
                    },
                },
            }),
            LevyFamily::FarkasDouble {
                beta1,
                beta2,
                m_order,
            } => Some(LevyTriplet {
                drift: 0.0,
                gaussian_var: 0.0,
                measure: LevyMeasure::Atoms {
                    density: vec![piece(*beta1, 1.0, 0.0, Some(1.0))],
                    chain: DyadicAtomChain {
                        beta2: *beta2,
                        m_order: *m_order,
                    },
                },
            }),
            _ => None,
        }
    }

    /// E|X|^p for X with characteristic function exp(t Ψ), via the moment
    /// representation E|X|^p = c_p ∫ (1 − Re φ(ξ)) |ξ|^{−p−1} dξ, 0 < p < 2.
    ///
    /// c_p is calibrated once per call against the standard normal absolute
    /// moment rather than taken from a literature formula, so the quadrature
    /// scheme cancels its own bias. p = 2 is handled by the analytic limit
    /// E X² = lim 2(1 − Re φ(h))/h².
    pub fn pth_moment_via_cf(&self, t: f64, p: f64) -> Result<f64, LevyError> {
        if t <= 0.0 {
            return Err(LevyError::InvalidParameter("t must be > 0".into()));
        }
        if !(p > 0.0 && p <= 2.0) {
            return Err(LevyError::InvalidParameter("p must lie in (0, 2]".into()));
        }
        if let Ok(idx) = self.closed_form_indices() {
            if p >= idx.p_max {
                return Err(LevyError::MomentInfinite {
                    p,
                    p_max: idx.p_max,
                });
            }
        }
        if p == 2.0 {
            // second derivative of the CF at 0, Richardson-extrapolated
            let d2 = |h: f64| -> Result<f64, LevyError> {
                Ok(2.0 * (1.0 - self.cf(h, t)?.re) / (h * h))
            };
            let a = d2(1e-3)?;
            let b = d2(5e-4)?;
            return Ok((4.0 * b - a) / 3.0);
        }
        let target = |xi: f64| -> f64 {
            match self.evaluate_psi(xi) {
                Ok(psi) => one_minus_re_exp(psi * t),
                Err(_) => f64::NAN,
            }
        };
        let c_p = {
            let gauss_moment =
                (0.5 * p).exp2() * libm::tgamma(0.5 * (p + 1.0)) / std::f64::consts::PI.sqrt();
            let integral = cf_moment_integral(&|xi: f64| -(-0.5 * xi * xi).exp_m1(), p, 0.0)
                .map_err(|e| LevyError::QuadratureFailure(e.to_string()))?;
            gauss_moment / integral
        };
        // residual Re φ at infinity: an atom at zero survives for compound Poisson
        let phi_inf = match &self.family {
            LevyFamily::CompoundPoisson { rate, .. } => (-rate * t).exp(),
            _ => 0.0,
        };
        let integral = cf_moment_integral(&target, p, phi_inf)
            .map_err(|e| LevyError::QuadratureFailure(e.to_string()))?;
        Ok(c_p * integral)
    }
}

fn validate_farkas(beta1: f64, beta2: f64, m_order: u32) -> Result<(), LevyError> {
    if !(beta2 > 0.0 && beta2 < 2.0) {
        return Err(LevyError::InvalidParameter("β₂ must lie in (0, 2)".into()));
    }
    if beta1 > beta2 {
        return Err(LevyError::InvalidParameter("β₁ ≤ β₂ required".into()));
    }
    if (m_order as f64) <= 2.0 / (2.0 - beta2) {
        return Err(LevyError::InvalidParameter("M > 2/(2−β₂) required".into()));
    }
    Ok(())
}

/// 1 − Re e^z without cancellation for small |z|:
/// 1 − e^x cos y = −expm1(x) + e^x · 2 sin²(y/2).
fn one_minus_re_exp(z: Complex64) -> f64 {
    -z.re.exp_m1() + z.re.exp() * 2.0 * (0.5 * z.im).sin().powi(2)
}

/// ∫_ℝ (1 − Re φ(|ξ|)) |ξ|^{−p−1} dξ evaluated on a log grid with an analytic
/// power tail; `one_minus_phi` receives ξ > 0.
fn cf_moment_integral<F: Fn(f64) -> f64>(
    one_minus_phi: &F,
    p: f64,
    phi_inf: f64,
) -> Result<f64, QuadratureError> {
    // Locate where the integrand's mass lives. The scan criteria bound the
    // truncated contributions: below lo the integrand is ≤ (1 − φ)(lo)·lo^{−p}
    // up to the local growth order, and past hi it is (1 − φ∞)·ξ^{−p−1} plus
    // a remainder of the same form.
    let mut lo: f64 = 1.0;
    while one_minus_phi(lo) * lo.powf(-p) > 1e-13 && lo > 1e-130 {
        lo *= 0.25;
    }
    let mut hi: f64 = 1.0;
    while (one_minus_phi(hi) - (1.0 - phi_inf)).abs() * hi.powf(-p) > 1e-14 && hi < 1e14 {
        hi *= 4.0;
    }
    // substitute ξ = e^u: integrand (1 − Re φ(e^u)) e^{−pu}, smooth on [ln lo, ln hi]
    let body = adaptive_simpson(
        &|u: f64| one_minus_phi(u.exp()) * (-p * u).exp(),
        lo.ln(),
        hi.ln(),
        1e-12,
        44,
    )?;
    let tail = (1.0 - phi_inf) * hi.powf(-p) / p;
    Ok(2.0 * (body + tail))
}

/// ∫ min(|t|^ε, t²) dν for a symbolic measure; the kink sits at |t| = 1.
fn epsilon_condition(measure: &LevyMeasure, eps: f64) -> Result<EpsilonOutcome, LevyError> {
    let piece_val = |p: &PowerPiece| -> Option<f64> {
        let a = p.alpha;
        let hi = p.hi.unwrap_or(f64::INFINITY);
        let mut total = 0.0;
        let sq_hi = hi.min(1.0);
        if p.lo < sq_hi {
            if a >= 2.0 {
                return None;
            }
            total += (sq_hi.powf(2.0 - a) - p.lo.powf(2.0 - a)) / (2.0 - a);
        }
        let tail_lo = p.lo.max(1.0);
        if hi > tail_lo {
            if hi.is_infinite() && eps >= a {
                return None;
            }
            let upper = if hi.is_finite() {
                hi.powf(eps - a)
            } else {
                0.0
            };
            total += (upper - tail_lo.powf(eps - a)) / (eps - a);
        }
        Some(2.0 * p.weight * total)
    };
    let density_val = |pieces: &[PowerPiece]| -> Option<f64> { pieces.iter().map(piece_val).sum() };
    Ok(match measure {
        LevyMeasure::Zero => EpsilonOutcome::Vacuous,
        LevyMeasure::Finite { rate, jumps } => {
            // λ E[min(|a|^ε, a²)]; divergent only for Pareto tails below ε
            match jumps {
                JumpLaw::SymmetricPareto { alpha } if eps >= *alpha => EpsilonOutcome::Diverges,
                JumpLaw::SymmetricPareto { alpha } => {
                    EpsilonOutcome::Finite(rate * alpha / (alpha - eps))
                }
                JumpLaw::Gaussian { sigma } => {
                    let v = adaptive_simpson(
                        &|x: f64| {
                            let d = (-0.5 * (x / sigma) * (x / sigma)).exp()
                                / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                            x.abs().powf(eps).min(x * x) * d
                        },
                        -10.0 * sigma,
                        10.0 * sigma,
                        1e-12,
                        40,
                    )?;
                    EpsilonOutcome::Finite(rate * v)
                }
                JumpLaw::Uniform { lo, hi } => {
                    let v = adaptive_simpson(
                        &|x: f64| x.abs().powf(eps).min(x * x) / (hi - lo),
                        *lo,
                        *hi,
                        1e-12,
                        40,
                    )?;
                    EpsilonOutcome::Finite(rate * v)
                }
                JumpLaw::PointMass { value } => {
                    EpsilonOutcome::Finite(rate * value.abs().powf(eps).min(value * value))
                }
            }
        }
        LevyMeasure::Density(pieces) => match density_val(pieces) {
            Some(v) => EpsilonOutcome::Finite(v),
            None => EpsilonOutcome::Diverges,
        },
        LevyMeasure::Atoms { density, chain } => match density_val(density) {
            Some(v) => EpsilonOutcome::Finite(v + chain.variance_mass()),
            None => EpsilonOutcome::Diverges,
        },
    })
}

/// Levy–Itô style split of a triplet into Gaussian, compound Poisson
/// (jumps beyond size one), and bounded-jump finite-moment parts.
///
/// The exponents of the three parts add exactly to the input's exponent: the
/// bounded-jump part is left uncompensated, which is valid because its mass
/// is either finite or symmetric here.
pub fn split_triplet(
    triplet: &LevyTriplet,
) -> Result<(LevyTriplet, LevyTriplet, LevyTriplet), LevyError> {
    let gaussian = LevyTriplet {
        drift: triplet.drift,
        gaussian_var: triplet.gaussian_var,
        measure: LevyMeasure::Zero,
    };
    let (big, small) = match &triplet.measure {
        LevyMeasure::Zero => (LevyMeasure::Zero, LevyMeasure::Zero),
        LevyMeasure::Finite { jumps, .. } => {
            let p_big = jumps.prob_above_one();
            if p_big >= 1.0 - 1e-15 {
                (triplet.measure.clone(), LevyMeasure::Zero)
            } else if p_big <= 1e-15 {
                (LevyMeasure::Zero, triplet.measure.clone())
            } else {
                // a jump law straddling |t| = 1 would need truncated-law
                // descriptors on both sides; not represented symbolically
                return Err(LevyError::InvalidParameter(
                    "finite jump law straddles |t| = 1; split not represented".into(),
                ));
            }
        }
        LevyMeasure::Density(pieces) => {
            let mut small_pieces = Vec::new();
            let mut big_pieces = Vec::new();
            for p in pieces {
                let hi = p.hi.unwrap_or(f64::INFINITY);
                if p.lo < 1.0 {
                    small_pieces.push(PowerPiece {
                        alpha: p.alpha,
                        weight: p.weight,
                        lo: p.lo,
                        hi: Some(hi.min(1.0)),
                    });
                }
                if hi > 1.0 {
                    big_pieces.push(PowerPiece {
                        alpha: p.alpha,
                        weight: p.weight,
                        lo: p.lo.max(1.0),
                        hi: p.hi,
                    });
                }
            }
            let big = if big_pieces.is_empty() {
                LevyMeasure::Zero
            } else {
                // rate λ = ν(|t| > 1); single power pieces convert to a
                // symmetric Pareto jump law, multi-piece tails stay symbolic
                let rate: f64 = big_pieces.iter().map(|p| p.mass()).sum();
                if !rate.is_finite() || rate <= 0.0 {
                    return Err(LevyError::NonFiniteTailMass);
                }
                if big_pieces.len() == 1 && big_pieces[0].lo == 1.0 && big_pieces[0].hi.is_none() {
                    LevyMeasure::Finite {
                        rate,
                        jumps: JumpLaw::SymmetricPareto {
                            alpha: big_pieces[0].alpha,
                        },
                    }
                } else {
                    LevyMeasure::Density(big_pieces)
                }
            };
            let small = if small_pieces.is_empty() {
                LevyMeasure::Zero
            } else {
                LevyMeasure::Density(small_pieces)
            };
            (big, small)
        }
        LevyMeasure::Atoms { density, chain } => {
            // every atom 2^{−M^k} lies below one
            let mut small_pieces = Vec::new();
            let mut big_pieces = Vec::new();
            for p in density {
                let hi = p.hi.unwrap_or(f64::INFINITY);
                if p.lo < 1.0 {
                    small_pieces.push(PowerPiece {
                        alpha: p.alpha,
                        weight: p.weight,
                        lo: p.lo,
                        hi: Some(hi.min(1.0)),
                    });
                }
                if hi > 1.0 {
                    big_pieces.push(PowerPiece {
                        alpha: p.alpha,
                        weight: p.weight,
                        lo: p.lo.max(1.0),
                        hi: p.hi,
                    });
                }
            }
            let big = if big_pieces.is_empty() {
                LevyMeasure::Zero
            } else {
                LevyMeasure::Density(big_pieces)
            };
            (
                big,
                LevyMeasure::Atoms {
                    density: small_pieces,
                    chain: chain.clone(),
                },
            )
        }
    };
    let poisson = LevyTriplet {
        drift: 0.0,
        gaussian_var: 0.0,
        measure: big,
    };
    let finite = LevyTriplet {
        drift: 0.0,
        gaussian_var: 0.0,
        measure: small,
    };
    Ok((gaussian, poisson, finite))
}

/// Builds the probe ladder for chain exponents: peaks at m = M^k with
/// geometric midpoints, plus dip probes on the 2π-aligned lattice
/// ξ = 2π·2^i where every active atom's phase is an exact turn. Dips are
/// emitted only where f64 still resolves the alignment and the next chain
/// term has not yet taken over.
pub fn farkas_aligned_ladder(beta2: f64, m_order: u32, k_max: u32) -> Vec<f64> {
    let m = m_order as f64;
    let log2_two_pi = (2.0 * std::f64::consts::PI).log2();
    let mut ladder = Vec::new();
    let mut scale = m;
    for k in 1..=k_max {
        ladder.push(scale);
        if k < k_max {
            ladder.push(0.5 * (scale + scale * m));
        }
        scale *= m;
    }
    let dip_hi = (((2.0 - beta2) * m * m - 4.0) * 0.5).floor() as i64;
    let dip_hi = dip_hi.min(m_order as i64 + 40);
    for i in m_order as i64..=dip_hi {
        ladder.push(i as f64 + log2_two_pi);
    }
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ladder.dedup();
    ladder
}
