//! Least-squares fit of the reduced-form VAR(p) with intercept.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvarError};
use crate::impulse::Companion;
use crate::linalg::{self, invert_upper, kron, spectral_radius, symmetrize, Mat};

/// Observations `Y_{1-p}, …, Y_T` stacked as rows, one column per series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    values: Mat,
    series_names: Vec<String>,
    time_labels: Vec<String>,
}

impl TimeSeriesPanel {
    pub fn new(values: Mat, series_names: Vec<String>, time_labels: Vec<String>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(SvarError::DimensionMismatch("panel has no series".into()));
        }
        if series_names.len() != values.ncols() {
            return Err(SvarError::DimensionMismatch(format!(
                "{} series names for {} columns",
                series_names.len(),
                values.ncols()
            )));
        }
        if time_labels.len() != values.nrows() {
            return Err(SvarError::DimensionMismatch(format!(
                "{} time labels for {} rows",
                time_labels.len(),
                values.nrows()
            )));
        }
        linalg::check_finite(&values, "panel values")?;
        Ok(Self {
            values,
            series_names,
            time_labels,
        })
    }

    /// Panel with generated names `y1..yk` and time labels `0..n`.
    pub fn from_values(values: Mat) -> Result<Self> {
        let names = (1..=values.ncols()).map(|i| format!("y{i}")).collect();
        let labels = (0..values.nrows()).map(|t| t.to_string()).collect();
        Self::new(values, names, labels)
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn series_names(&self) -> &[String] {
        &self.series_names
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }
}

/// Response matrix and lagged regressors.
///
/// Row `t` of `x` is `(1, Y_{t-1}ᵀ, …, Y_{t-p}ᵀ)`, so `x` has `r = 1 + k p`
/// columns and the lag-`s` block occupies columns `1 + (s-1)k .. 1 + s k`.
#[derive(Debug, Clone)]
pub struct LagDesign {
    pub y: Mat,
    pub x: Mat,
    pub p: usize,
}

impl LagDesign {
    pub fn t_obs(&self) -> usize {
        self.y.nrows()
    }

    pub fn k(&self) -> usize {
        self.y.ncols()
    }

    pub fn r(&self) -> usize {
        self.x.ncols()
    }
}

pub fn build_design(panel: &TimeSeriesPanel, p: usize) -> Result<LagDesign> {
    if p == 0 {
        return Err(SvarError::Config("lag order must be at least 1".into()));
    }
    let rows = panel.n_rows();
    if rows <= p {
        return Err(SvarError::TooShort { rows, p });
    }
    let k = panel.n_series();
    let t_obs = rows - p;
    let data = panel.values();
    let y = data.rows(p, t_obs).into_owned();
    let mut x = Mat::zeros(t_obs, 1 + k * p);
    for t in 0..t_obs {
        x[(t, 0)] = 1.0;
        for s in 1..=p {
            let src = p + t - s;
            for i in 0..k {
                x[(t, 1 + (s - 1) * k + i)] = data[(src, i)];
            }
        }
    }
    Ok(LagDesign { y, x, p })
}

/// Normalization of the residual covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceNorm {
    /// `1/T`, the normalization used by all inference.
    #[default]
    Sample,
    /// `1/(T - r)`, for diagnostics only.
    DofCorrected,
}

/// Reduced-form least-squares fit `Y_t = B X_{t-1} + e_t`.
#[derive(Debug, Clone)]
pub struct ReducedFormFit {
    /// `k × r` coefficients `(μ, B_1, …, B_p)`.
    pub b_hat: Mat,
    /// `T × k`, row `t` is `ê_tᵀ`.
    pub residuals: Mat,
    pub sigma_hat: Mat,
    pub gamma_hat: Mat,
    pub gamma_inv: Mat,
    /// `Γ̂⁻¹ ⊗ Σ̂`, the covariance of `√T (b̂ − b)` in `vec(B)` coordinates.
    pub sigma_b_hat: Mat,
    pub t_obs: usize,
    pub k: usize,
    pub p: usize,
}

impl ReducedFormFit {
    pub fn r(&self) -> usize {
        self.b_hat.ncols()
    }

    /// `vec(B̂)`.
    pub fn b_vec(&self) -> Vec<f64> {
        self.b_hat.as_slice().to_vec()
    }
}

/// Reciprocal-condition floor for the design.
pub const MIN_RCOND: f64 = 1e-12;

pub fn ols_fit(design: &LagDesign) -> Result<ReducedFormFit> {
    ols_fit_with(design, CovarianceNorm::Sample)
}

/// Least squares through a Householder QR of the design.
///
/// `B̂ᵀ = R⁻¹ Qᵀ Y`; `Γ̂⁻¹ = T R⁻¹ R⁻ᵀ` comes from the same factor.
pub fn ols_fit_with(design: &LagDesign, norm: CovarianceNorm) -> Result<ReducedFormFit> {
    let (t_obs, r, k) = (design.t_obs(), design.r(), design.k());
    if t_obs < r {
        return Err(SvarError::SingularDesign { rcond: 0.0 });
    }
    let qr = design.x.clone().qr();
    let rmat = qr.r();
    let diag = rmat.diagonal().map(f64::abs);
    let rcond = diag.min() / diag.max();
    if !(rcond >= MIN_RCOND) {
        return Err(SvarError::SingularDesign { rcond });
    }
    let qty = qr.q().transpose() * &design.y;
    let r_inv = invert_upper(&rmat)?;
    let b_hat = (&r_inv * qty).transpose();
    let residuals = &design.y - &design.x * b_hat.transpose();

    let tf = t_obs as f64;
    let denom = match norm {
        CovarianceNorm::Sample => tf,
        CovarianceNorm::DofCorrected => {
            if t_obs <= r {
                return Err(SvarError::Config(
                    "degrees-of-freedom correction needs T > r".into(),
                ));
            }
            (t_obs - r) as f64
        }
    };
    let sigma_hat = symmetrize(&(residuals.transpose() * &residuals / denom));
    let gamma_hat = symmetrize(&(design.x.transpose() * &design.x / tf));
    let gamma_inv = symmetrize(&(&r_inv * r_inv.transpose() * tf));
    let sigma_b_hat = symmetrize(&kron(&gamma_inv, &sigma_hat));
    Ok(ReducedFormFit {
        b_hat,
        residuals,
        sigma_hat,
        gamma_hat,
        gamma_inv,
        sigma_b_hat,
        t_obs,
        k,
        p: design.p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stationarity {
    pub radius: f64,
    pub stationary: bool,
}

/// Spectral radius of the companion matrix built from the lag blocks of
/// `b_hat` (intercept column excluded); stationary iff `radius < 1 - tol`.
pub fn check_stationarity(b_hat: &Mat, k: usize, p: usize, tol: f64) -> Result<Stationarity> {
    let companion = Companion::from_coefficients(b_hat, k, p)?;
    let radius = spectral_radius(companion.lambda(), linalg::EIGEN_TOL)?;
    Ok(Stationarity {
        radius,
        stationary: radius < 1.0 - tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(rows: usize, cols: usize, row_major: &[f64]) -> TimeSeriesPanel {
        TimeSeriesPanel::from_values(Mat::from_row_slice(rows, cols, row_major)).unwrap()
    }

    #[test]
    fn design_k1_p1() {
        let d = build_design(&panel(3, 1, &[1.0, 2.0, 4.0]), 1).unwrap();
        assert_eq!(d.y.as_slice(), &[2.0, 4.0]);
        assert_eq!(d.x, Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]));
    }

    #[test]
    fn design_shapes() {
        let vals: Vec<f64> = (0..12).map(f64::from).collect();
        let d = build_design(&panel(6, 2, &vals), 2).unwrap();
        assert_eq!(d.y.shape(), (4, 2));
        assert_eq!(d.x.shape(), (4, 5));
        assert!(d.x.column(0).iter().all(|&v| v == 1.0));
        // Row 0 of x holds Y_{t-1} = raw row 1 then Y_{t-2} = raw row 0.
        assert_eq!(d.x.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 0.0, 1.0]);

        let big = TimeSeriesPanel::from_values(Mat::zeros(108, 3)).unwrap();
        let d = build_design(&big, 4).unwrap();
        assert_eq!(d.t_obs(), 104);
        assert_eq!(d.r(), 13);
    }

    #[test]
    fn design_too_short() {
        assert!(matches!(
            build_design(&panel(2, 1, &[1.0, 2.0]), 2),
            Err(SvarError::TooShort { rows: 2, p: 2 })
        ));
    }

    #[test]
    fn two_point_regression_is_exact() {
        // Points (y0 → y1), (y1 → y2): intercept and slope solve the 2x2 system.
        let (y0, y1, y2) = (1.0, 3.0, 4.0);
        let d = build_design(&panel(3, 1, &[y0, y1, y2]), 1).unwrap();
        let fit = ols_fit(&d).unwrap();
        let slope = (y2 - y1) / (y1 - y0);
        let intercept = y1 - slope * y0;
        assert!((fit.b_hat[(0, 0)] - intercept).abs() < 1e-12);
        assert!((fit.b_hat[(0, 1)] - slope).abs() < 1e-12);
        assert!(fit.residuals.amax() < 1e-12);
    }

    #[test]
    fn noise_free_recovery() {
        // Deterministic stationary VAR(1) with intercept, driven from a non-fixed
        // start so the regressors are not collinear.
        let b = Mat::from_row_slice(2, 3, &[0.1, 0.3, 0.2, -0.2, 0.15, 0.35]);
        let mut vals = vec![1.0, -2.0];
        for t in 1..40 {
            let prev = [vals[2 * (t - 1)], vals[2 * (t - 1) + 1]];
            for i in 0..2 {
                vals.push(b[(i, 0)] + b[(i, 1)] * prev[0] + b[(i, 2)] * prev[1]);
            }
        }
        let fit = ols_fit(&build_design(&panel(40, 2, &vals), 1).unwrap()).unwrap();
        assert!((&fit.b_hat - &b).amax() < 1e-10);
        assert!(fit.residuals.amax() < 1e-10);
    }

    #[test]
    fn singular_design_detected() {
        let d = build_design(&panel(5, 1, &[1.0; 5]), 1).unwrap();
        assert!(matches!(ols_fit(&d), Err(SvarError::SingularDesign { .. })));
    }

    #[test]
    fn dof_correction_scales_sigma() {
        let vals: Vec<f64> = (0..30).map(|t| ((t * 7919) % 13) as f64 - 6.0).collect();
        let d = build_design(&panel(30, 1, &vals), 2).unwrap();
        let a = ols_fit_with(&d, CovarianceNorm::Sample).unwrap();
        let b = ols_fit_with(&d, CovarianceNorm::DofCorrected).unwrap();
        let ratio = b.sigma_hat[(0, 0)] / a.sigma_hat[(0, 0)];
        assert!((ratio - 28.0 / 25.0).abs() < 1e-12);
    }

    #[test]
    fn stationarity_examples() {
        let b = Mat::from_row_slice(2, 3, &[0.0, 0.3, 0.2, 0.0, 0.15, 0.35]);
        let s = check_stationarity(&b, 2, 1, 1e-8).unwrap();
        assert!((s.radius - 0.5).abs() < 1e-10 && s.stationary);

        let mut unit = Mat::zeros(2, 3);
        unit[(0, 1)] = 1.0;
        unit[(1, 2)] = 1.0;
        let s = check_stationarity(&unit, 2, 1, 1e-8).unwrap();
        assert!((s.radius - 1.0).abs() < 1e-10 && !s.stationary);

        let s = check_stationarity(&Mat::zeros(2, 3), 2, 1, 1e-8).unwrap();
        assert_eq!(s.radius, 0.0);
        assert!(s.stationary);
    }
}
