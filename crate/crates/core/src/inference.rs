//! Tests of `A₀ = O` against `A₀ ≠ O`.
//!
//! Under the null `Q = I`, `A₀ = O` and `g(B) = g(A)` is upper-triangular,
//! so the strictly lower-triangular parts of `Q`, `A₀` and `g(B)` all
//! vanish. Each statistic standardizes a weighted sum `vᵀθ̂_sub` of one of
//! these sub-vectors by its delta-method variance:
//!
//! * `z₁` uses `q̂_sub` and `Σ̂₁`;
//! * `z₂` uses `â₀_sub` and `Σ̂₂`;
//! * `z₃` uses `β̂_sub` (strictly lower part of `g(B̂)`) and `Σ̂_b`.
//!
//! Only the two-sided test is offered. If `vᵀθ_sub = 0` under the
//! alternative the corresponding statistic has no power; this is not
//! guarded against.

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Result, SvarError};
use crate::identify::{ColumnSelection, StructuralFit};
use crate::linalg::Mat;
use crate::var::ReducedFormFit;

/// Weighted variances at or below this are rejected as degenerate.
pub const MIN_WEIGHTED_VARIANCE: f64 = 1e-14;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `2 (1 − Φ(|z|))`, evaluated through the complementary error function.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `prob ∈ (0, 1)`: an inverse-erfc start
/// polished by one Newton step against [`normal_cdf`].
pub fn normal_quantile(prob: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * prob);
    if !x.is_finite() {
        return x;
    }
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    x - (normal_cdf(x) - prob) / density
}

/// 0-based `vec` positions of the strictly lower-triangular entries of a
/// `k × k` matrix, column by column: `(i, j)` with `i > j` maps to `j k + i`.
pub fn strict_lower_indices(k: usize) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(SvarError::EmptySubvector { k });
    }
    Ok((0..k)
        .flat_map(|j| ((j + 1)..k).map(move |i| j * k + i))
        .collect())
}

/// 0-based `vec(B)` positions of the strictly lower-triangular entries of
/// `g(B)`, in the same order as [`strict_lower_indices`].
pub fn selected_strict_lower_indices(sel: &ColumnSelection, k: usize) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(SvarError::EmptySubvector { k });
    }
    let cols = sel.indices();
    Ok((0..k)
        .flat_map(|m| ((m + 1)..k).map(move |i| (cols[m] - 1) * k + i))
        .collect())
}

pub fn gather(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

pub fn gather_sub(cov: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), idx.len(), |a, b| cov[(idx[a], idx[b])])
}

/// `√T · wᵀd / sqrt(wᵀ Σ w)`.
pub fn standardized_contrast(d: &[f64], cov: &Mat, w: &[f64], t_obs: usize) -> Result<f64> {
    if d.len() != w.len() || cov.shape() != (w.len(), w.len()) {
        return Err(SvarError::DimensionMismatch(format!(
            "weight has {} entries, estimate {}, covariance {}x{}",
            w.len(),
            d.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let wv = nalgebra::DVector::from_column_slice(w);
    let var = (wv.transpose() * cov * &wv)[(0, 0)];
    if !(var > MIN_WEIGHTED_VARIANCE) {
        return Err(SvarError::DegenerateVariance { value: var });
    }
    let num: f64 = d.iter().zip(w).map(|(a, b)| a * b).sum();
    Ok((t_obs as f64).sqrt() * num / var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Z1,
    Z2,
    Z3,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 3] = [StatisticKind::Z1, StatisticKind::Z2, StatisticKind::Z3];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Z1 => "z1",
            StatisticKind::Z2 => "z2",
            StatisticKind::Z3 => "z3",
        }
    }
}

impl std::str::FromStr for StatisticKind {
    type Err = SvarError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z1" => Ok(Self::Z1),
            "z2" => Ok(Self::Z2),
            "z3" => Ok(Self::Z3),
            other => Err(SvarError::Config(format!("unknown statistic '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic_kind: StatisticKind,
    pub weight: Vec<f64>,
    pub z_value: f64,
    /// Two-sided.
    pub p_value: f64,
    pub t_obs: usize,
}

/// The all-ones weight of length `k(k−1)/2`.
pub fn default_weight(k: usize) -> Vec<f64> {
    vec![1.0; k * k.saturating_sub(1) / 2]
}

/// Computes `z₁`, `z₂` or `z₃` for the weight `v`.
pub fn z_statistic(
    kind: StatisticKind,
    fit: &ReducedFormFit,
    structural: &StructuralFit,
    sel: &ColumnSelection,
    v: &[f64],
) -> Result<TestResult> {
    let k = fit.k;
    let lower = strict_lower_indices(k)?;
    let (estimate, cov) = match kind {
        StatisticKind::Z1 => (
            gather(structural.q_hat().as_slice(), &lower),
            gather_sub(&structural.sigma1, &lower),
        ),
        StatisticKind::Z2 => (
            gather(structural.a0_hat().as_slice(), &lower),
            gather_sub(&structural.sigma2, &lower),
        ),
        StatisticKind::Z3 => {
            let idx = selected_strict_lower_indices(sel, k)?;
            (gather(fit.b_hat.as_slice(), &idx), gather_sub(&fit.sigma_b_hat, &idx))
        }
    };
    let z_value = standardized_contrast(&estimate, &cov, v, fit.t_obs)?;
    Ok(TestResult {
        statistic_kind: kind,
        weight: v.to_vec(),
        z_value,
        p_value: two_sided_p(z_value),
        t_obs: fit.t_obs,
    })
}
