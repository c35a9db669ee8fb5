//! Impulse responses and their delta-method covariances.
//!
//! `Ψ_h` is the top-left `k × k` block of `Λ^h`, where `Λ` is the companion
//! matrix of the reduced form. Three response families are produced:
//!
//! * `Ψ_h`, the non-orthogonalized response to reduced-form errors;
//! * `Ψ_h Q`, the response to a structural innovation (a total effect when
//!   the model is read as a linear structural equation model);
//! * `Ψ_h L̃`, the orthogonalized response, `L̃` being the unitriangular LU
//!   factor of the residual covariance. Point estimates only.
//!
//! Bands are pointwise normal intervals at each horizon.

use serde::Serialize;

use crate::error::{Result, SvarError};
use crate::identify::{self, select_columns, ColumnSelection, JacobianMethod};
use crate::inference::normal_quantile;
use crate::linalg::{default_singularity_tol, kron, lu_unitriangular, Mat};
use crate::numdiff::central_jacobian;
use crate::var::{check_stationarity, ReducedFormFit};

/// Default largest horizon.
pub const DEFAULT_H_MAX: usize = 20;

fn check_coefficients(b: &Mat, k: usize, p: usize) -> Result<()> {
    if b.nrows() != k || b.ncols() != 1 + k * p {
        return Err(SvarError::DimensionMismatch(format!(
            "coefficients are {}x{}, expected {k}x{}",
            b.nrows(),
            b.ncols(),
            1 + k * p
        )));
    }
    Ok(())
}

/// Lag block `B_s` (1-based `s`) of `(μ, B_1, …, B_p)`.
pub fn lag_block(b: &Mat, k: usize, s: usize) -> Mat {
    b.view((0, 1 + (s - 1) * k), (k, k)).into_owned()
}

/// VAR(1) form `ξ_t = Λ ξ_{t-1} + ε_t` of a VAR(p).
#[derive(Debug, Clone)]
pub struct Companion {
    lambda: Mat,
    k: usize,
    p: usize,
}

impl Companion {
    /// Builds `Λ` from `(μ, B_1, …, B_p)`; the intercept column is dropped.
    pub fn from_coefficients(b: &Mat, k: usize, p: usize) -> Result<Self> {
        check_coefficients(b, k, p)?;
        let n = k * p;
        let mut lambda = Mat::zeros(n, n);
        lambda.view_mut((0, 0), (k, n)).copy_from(&b.columns(1, n));
        for s in 1..p {
            for i in 0..k {
                lambda[(s * k + i, (s - 1) * k + i)] = 1.0;
            }
        }
        Ok(Self { lambda, k, p })
    }

    pub fn lambda(&self) -> &Mat {
        &self.lambda
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `[Λ^h]` top-left `k × k` block.
    pub fn power_block(&self, h: usize) -> Mat {
        let n = self.k * self.p;
        let mut pow = Mat::identity(n, n);
        for _ in 0..h {
            pow = &self.lambda * pow;
        }
        pow.view((0, 0), (self.k, self.k)).into_owned()
    }
}

/// `Ψ_0, …, Ψ_{h_max}` by `Ψ_h = Σ_{s=1}^{min(h,p)} B_s Ψ_{h−s}`, `Ψ_0 = I`.
pub fn irf(b: &Mat, k: usize, p: usize, h_max: usize) -> Result<Vec<Mat>> {
    check_coefficients(b, k, p)?;
    let blocks: Vec<Mat> = (1..=p).map(|s| lag_block(b, k, s)).collect();
    let mut psi = Vec::with_capacity(h_max + 1);
    psi.push(Mat::identity(k, k));
    for h in 1..=h_max {
        let mut next = Mat::zeros(k, k);
        for s in 1..=h.min(p) {
            next += &blocks[s - 1] * &psi[h - s];
        }
        psi.push(next);
    }
    Ok(psi)
}

/// `Ψ_h L̃` with `L̃` the unitriangular LU factor of `Σ̂`.
pub fn oirf(psi: &[Mat], sigma_hat: &Mat) -> Result<Vec<Mat>> {
    let lu = lu_unitriangular(sigma_hat, default_singularity_tol(sigma_hat))?;
    Ok(psi.iter().map(|m| m * &lu.l).collect())
}

/// `Ψ_h Q̂`.
pub fn total_effect_irf(psi: &[Mat], q_hat: &Mat) -> Vec<Mat> {
    psi.iter().map(|m| m * q_hat).collect()
}

/// Analytic `J_{4,h} = ∂ vec(Ψ_h) / ∂ vec(B)` for `h = 0..=h_max`.
///
/// Each column follows the product rule
/// `dΨ_h = Σ_s (dB_s Ψ_{h−s} + B_s dΨ_{h−s})`; intercept columns are zero.
pub fn jacobians_irf(b: &Mat, k: usize, p: usize, h_max: usize) -> Result<Vec<Mat>> {
    let psi = irf(b, k, p, h_max)?;
    let blocks: Vec<Mat> = (1..=p).map(|s| lag_block(b, k, s)).collect();
    let r = 1 + k * p;
    let mut jac = vec![Mat::zeros(k * k, k * r); h_max + 1];
    let mut dpsi = vec![Mat::zeros(k, k); h_max + 1];
    for col in 1..r {
        let lag = (col - 1) / k + 1;
        let src = (col - 1) % k;
        for row in 0..k {
            let idx = col * k + row;
            for h in 1..=h_max {
                let mut d = Mat::zeros(k, k);
                if h >= lag {
                    // E_{row,src} Ψ_{h−lag}: row `row` takes row `src` of Ψ_{h−lag}.
                    d.row_mut(row).copy_from(&psi[h - lag].row(src));
                }
                for s in 1..=h.min(p) {
                    d += &blocks[s - 1] * &dpsi[h - s];
                }
                jac[h].column_mut(idx).copy_from_slice(d.as_slice());
                dpsi[h] = d;
            }
        }
    }
    Ok(jac)
}

/// `J_{4,h}` for a single horizon.
pub fn jacobian_irf(b: &Mat, k: usize, p: usize, h: usize, method: JacobianMethod) -> Result<Mat> {
    match method {
        JacobianMethod::Analytic => Ok(jacobians_irf(b, k, p, h)?.swap_remove(h)),
        JacobianMethod::FiniteDifference => {
            check_coefficients(b, k, p)?;
            let r = b.ncols();
            central_jacobian(b.as_slice(), |x| {
                let bm = Mat::from_column_slice(k, r, x);
                Ok(irf(&bm, k, p, h)?[h].as_slice().to_vec())
            })
        }
    }
}

/// Analytic `J_{5,h} = ∂ vec(Ψ_h Q) / ∂ vec(B)` for `h = 0..=h_max`:
/// `J_{5,h} = (Qᵀ ⊗ I) J_{4,h} + (I ⊗ Ψ_h) J₁`.
pub fn jacobians_total_effect(
    b: &Mat,
    sel: &ColumnSelection,
    k: usize,
    p: usize,
    h_max: usize,
) -> Result<Vec<Mat>> {
    let point = identify::identify(b, sel)?;
    let j1 = identify::jacobians(b, sel, JacobianMethod::Analytic)?.j1;
    let j4 = jacobians_irf(b, k, p, h_max)?;
    let psi = irf(b, k, p, h_max)?;
    let qt_kron = kron(&point.q.transpose(), &Mat::identity(k, k));
    let eye = Mat::identity(k, k);
    Ok(j4
        .iter()
        .zip(&psi)
        .map(|(j4h, psih)| &qt_kron * j4h + kron(&eye, psih) * &j1)
        .collect())
}

/// `J_{5,h}` for a single horizon.
pub fn jacobian_total_effect(
    b: &Mat,
    sel: &ColumnSelection,
    k: usize,
    p: usize,
    h: usize,
    method: JacobianMethod,
) -> Result<Mat> {
    match method {
        JacobianMethod::Analytic => Ok(jacobians_total_effect(b, sel, k, p, h)?.swap_remove(h)),
        JacobianMethod::FiniteDifference => {
            check_coefficients(b, k, p)?;
            let r = b.ncols();
            central_jacobian(b.as_slice(), |x| {
                let bm = Mat::from_column_slice(k, r, x);
                let q = identify::identify(&bm, sel)?.q;
                Ok((&irf(&bm, k, p, h)?[h] * q).as_slice().to_vec())
            })
        }
    }
}

/// Pointwise lower and upper limits around a `k × k` response.
#[derive(Debug, Clone, Serialize)]
pub struct Bands {
    #[serde(with = "crate::linalg::rows")]
    pub lower: Mat,
    #[serde(with = "crate::linalg::rows")]
    pub upper: Mat,
}

/// Variances above this (negative) floor are treated as rounding and clipped to 0.
pub const NEGATIVE_VARIANCE_FLOOR: f64 = -1e-12;

/// `point ± z_{1−(1−level)/2} · sqrt(diag(Σ)/T)`, with `Σ` indexed by
/// `vec(point)`.
pub fn confidence_bands(point: &Mat, sigma: &Mat, level: f64, t_obs: usize) -> Result<Bands> {
    if !(level > 0.0 && level < 1.0) {
        return Err(SvarError::Config(format!("confidence level {level} outside (0, 1)")));
    }
    let n = point.len();
    if sigma.shape() != (n, n) {
        return Err(SvarError::DimensionMismatch(format!(
            "covariance is {}x{}, expected {n}x{n}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    let mut lower = point.clone();
    let mut upper = point.clone();
    for idx in 0..n {
        let mut var = sigma[(idx, idx)];
        if var < 0.0 {
            if var < NEGATIVE_VARIANCE_FLOOR {
                return Err(SvarError::NegativeVariance { index: idx, value: var });
            }
            var = 0.0;
        }
        let half = z * (var / t_obs as f64).sqrt();
        lower.as_mut_slice()[idx] -= half;
        upper.as_mut_slice()[idx] += half;
    }
    Ok(Bands { lower, upper })
}

/// Responses and bands for horizons `0..=h_max`.
#[derive(Debug, Clone)]
pub struct IrfResult {
    pub horizons: Vec<usize>,
    pub psi: Vec<Mat>,
    /// `Ψ̂_h Q̂`.
    pub psi_o: Vec<Mat>,
    /// `Ψ̂_h L̃`.
    pub oirf: Vec<Mat>,
    pub sigma4: Vec<Mat>,
    pub sigma5: Vec<Mat>,
    /// Bands for `Ψ̂_h` from `Σ̂_{4,h}`.
    pub psi_bands: Vec<Bands>,
    /// Bands for `Ψ̂_h Q̂` from `Σ̂_{5,h}`.
    pub psi_o_bands: Vec<Bands>,
    pub level: f64,
    pub t_obs: usize,
}

pub fn impulse_responses(
    fit: &ReducedFormFit,
    sel: &ColumnSelection,
    h_max: usize,
    level: f64,
) -> Result<IrfResult> {
    let (k, p) = (fit.k, fit.p);
    let b = &fit.b_hat;
    let stat = check_stationarity(b, k, p, 1e-8)?;
    if !stat.stationary {
        log::warn!(
            "reduced form is not stationary (companion spectral radius {:.6}); responses do not decay",
            stat.radius
        );
    }
    // Validates the selection and fails early on identification problems.
    select_columns(b, sel)?;
    let q = identify::identify(b, sel)?.q;
    let psi = irf(b, k, p, h_max)?;
    let psi_o = total_effect_irf(&psi, &q);
    let oirf = oirf(&psi, &fit.sigma_hat)?;
    let j4 = jacobians_irf(b, k, p, h_max)?;
    let j5 = jacobians_total_effect(b, sel, k, p, h_max)?;
    let sigma4: Vec<Mat> = j4.iter().map(|j| identify::sandwich(j, &fit.sigma_b_hat)).collect();
    let sigma5: Vec<Mat> = j5.iter().map(|j| identify::sandwich(j, &fit.sigma_b_hat)).collect();
    let psi_bands = psi
        .iter()
        .zip(&sigma4)
        .map(|(m, s)| confidence_bands(m, s, level, fit.t_obs))
        .collect::<Result<Vec<_>>>()?;
    let psi_o_bands = psi_o
        .iter()
        .zip(&sigma5)
        .map(|(m, s)| confidence_bands(m, s, level, fit.t_obs))
        .collect::<Result<Vec<_>>>()?;
    Ok(IrfResult {
        horizons: (0..=h_max).collect(),
        psi,
        psi_o,
        oirf,
        sigma4,
        sigma5,
        psi_bands,
        psi_o_bands,
        level,
        t_obs: fit.t_obs,
    })
}
