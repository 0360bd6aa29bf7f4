//! Truncated weighted Besov quasi-norms computed from a coefficient field:
//! per-scale terms
//!
//! T_j = 2^{j(τp − d + dp/2)} Σ_{G ∈ G^j} Σ_k ⟨2^{−j}k⟩^{ρp} |c_{j,G,k}|^p,
//!
//! their sum (Σ_j T_j)^{1/p}, the p = ∞ sup form, and the slope-based
//! convergent/divergent classification of the truncated series.
//!
//! Terms are accumulated with compensated summation in a fixed order
//! (scale-major, gender, then row-major k) so results are bit-stable across
//! thread schedules.

use crate::field::CoefficientField;
use crate::numerics::CompensatedSum;

/// (p, τ, ρ, d) with p ∈ (0, ∞]; `f64::INFINITY` selects the sup form.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BesovParams {
    pub p: f64,
    pub tau: f64,
    pub rho: f64,
    pub d: usize,
}

impl BesovParams {
    pub fn new(p: f64, tau: f64, rho: f64, d: usize) -> Self {
        assert!(p > 0.0, "p must be positive (or infinite)");
        Self { p, tau, rho, d }
    }
}

/// The scale-j term of the p-th power of the quasi-norm.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ScaleContribution {
    pub j: u32,
    pub t_j: f64,
    /// Number of (G, k) terms included after the guard band.
    pub count: usize,
    pub gender_count: usize,
}

/// Polynomial weight ⟨x⟩ = (1 + ‖x‖²)^{1/2} at x = 2^{−j} k.
#[inline]
fn bracket_weight_sq(d: usize, n_per_axis: usize, idx: usize, inv_scale: f64) -> f64 {
    match d {
        1 => {
            let x = idx as f64 * inv_scale;
            1.0 + x * x
        }
        2 => {
            let x0 = (idx / n_per_axis) as f64 * inv_scale;
            let x1 = (idx % n_per_axis) as f64 * inv_scale;
            1.0 + x0 * x0 + x1 * x1
        }
        _ => unreachable!(),
    }
}

/// Per-scale terms T_j for every scale present in the field; requires p < ∞.
/// The father block participates only when the field reaches scale 0, where
/// it is the G = F^d member of G^0.
pub fn per_scale_contributions(
    field: &CoefficientField,
    params: &BesovParams,
) -> Vec<ScaleContribution> {
    assert!(params.p.is_finite(), "per-scale terms require p < ∞");
    assert_eq!(params.d, field.d, "dimension mismatch");
    let p = params.p;
    let d = field.d as f64;
    let mut out = Vec::new();
    for j in field.coarsest..field.j_fine {
        let prefactor = (j as f64 * (params.tau * p - d + d * p / 2.0)).exp2();
        let inv_scale = (-(j as f64)).exp2();
        let mut sum = CompensatedSum::new();
        let mut count = 0usize;
        let mut gender_count = 0usize;
        // blocks are sorted (j, gender); father blocks above scale 0 span the
        // unanalyzed coarse space and stay out of the norm
        for block in field.blocks.iter().filter(|b| b.j == j) {
            if block.gender.is_pure_father() && j != 0 {
                continue;
            }
            gender_count += 1;
            let half_rp = 0.5 * params.rho * p;
            for idx in field.interior_indices(block) {
                let c = block.data[idx];
                if c == 0.0 {
                    continue;
                }
                let w = bracket_weight_sq(field.d, block.n_per_axis, idx, inv_scale);
                sum.add(w.powf(half_rp) * c.abs().powf(p));
                count += 1;
            }
        }
        out.push(ScaleContribution {
            j,
            t_j: prefactor * sum.value(),
            count,
            gender_count,
        });
    }
    out
}

/// Truncated weighted quasi-norm up to scale `j_cut` inclusive:
/// (Σ_{j ≤ j_cut} T_j)^{1/p} for finite p, and for p = ∞ the sup of
/// 2^{j(τ + d/2)} ⟨2^{−j}k⟩^ρ |c_{j,G,k}|.
pub fn weighted_partial_norm(field: &CoefficientField, params: &BesovParams, j_cut: u32) -> f64 {
    if params.p.is_finite() {
        let mut total = CompensatedSum::new();
        for c in per_scale_contributions(field, params) {
            if c.j <= j_cut {
                total.add(c.t_j);
            }
        }
        total.value().powf(1.0 / params.p)
    } else {
        let d = field.d as f64;
        let mut sup: f64 = 0.0;
        for block in &field.blocks {
            let j = block.j;
            if j > j_cut || (block.gender.is_pure_father() && j != 0) {
                continue;
            }
            let prefactor = (j as f64 * (params.tau + d / 2.0)).exp2();
            let inv_scale = (-(j as f64)).exp2();
            for idx in field.interior_indices(block) {
                let c = block.data[idx].abs();
                if c == 0.0 {
                    continue;
                }
                let w = bracket_weight_sq(field.d, block.n_per_axis, idx, inv_scale);
                sup = sup.max(prefactor * w.powf(0.5 * params.rho) * c);
            }
        }
        sup
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convergence {
    Convergent,
    Divergent,
    Undecided,
}

/// Slope threshold of the convergence discriminator: the truncated series
/// behaves geometrically like 2^{j p (τ − τ_p)}, so the tail slope of
/// log₂ T_j separates the regimes; the dead zone avoids claims at criticality.
pub const CONVERGENCE_SLOPE_THRESHOLD: f64 = 0.2;

/// Classify Σ_j T_j from the tail slope of log₂ T_j over the last five scales.
pub fn classify_convergence(contributions: &[ScaleContribution]) -> Convergence {
    let tail: Vec<&ScaleContribution> = contributions.iter().rev().take(5).rev().collect();
    if tail.len() < 2 {
        return Convergence::Undecided;
    }
    if tail.iter().all(|c| c.t_j == 0.0) {
        return Convergence::Convergent;
    }
    if tail.iter().any(|c| c.t_j <= 0.0) {
        return Convergence::Undecided;
    }
    let xs: Vec<f64> = tail.iter().map(|c| c.j as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|c| c.t_j.log2()).collect();
    let slope = crate::stats::ols(&xs, &ys).slope;
    if slope <= -CONVERGENCE_SLOPE_THRESHOLD {
        Convergence::Convergent
    } else if slope >= CONVERGENCE_SLOPE_THRESHOLD {
        Convergence::Divergent
    } else {
        Convergence::Undecided
    }
}
