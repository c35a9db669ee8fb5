//! Recovery of the structural coefficients from the reduced form.
//!
//! The reduced form is `B = Q A` with `Q = (I − A₀)⁻¹` lower-unitriangular.
//! When `k` chosen columns of `A` form a non-singular upper-triangular
//! block, the same columns of `B` factor as `g(B) = Q g(A)`, so the
//! unitriangular LU factorization of `g(B̂)` yields `Q̂` directly:
//!
//! * `Q̂ = L(g(B̂))`
//! * `Â₀ = I − Q̂⁻¹`
//! * `Â = Q̂⁻¹ B̂`
//!
//! No zero restrictions are imposed during estimation. The restrictions a
//! user believes in (e.g. "series 3 does not react to lag-4 values of
//! series 1 and 2") only motivate the choice of columns; the estimator
//! itself only needs `g(B̂)` to have non-singular leading minors.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvarError};
use crate::linalg::{
    default_singularity_tol, invert_unit_lower, lu_unitriangular, solve_unit_lower, symmetrize,
    LuDifferential, Mat,
};
use crate::numdiff::central_jacobian;
use crate::var::ReducedFormFit;

/// The tuple `(j₁, …, j_k)` of 1-based columns of a `k × r` coefficient
/// matrix; `j_m` supplies column `m` of `g(·)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ColumnSelection(Vec<usize>);

impl ColumnSelection {
    /// Checks that the indices are positive and distinct. Range against a
    /// concrete `r` is checked by [`ColumnSelection::validate`].
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(SvarError::InvalidSelection("empty column tuple".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&j| j == 0) {
            return Err(SvarError::IndexOutOfRange { index: bad, max: usize::MAX });
        }
        for (pos, j) in indices.iter().enumerate() {
            if indices[..pos].contains(j) {
                return Err(SvarError::InvalidSelection(format!("column {j} appears twice")));
            }
        }
        Ok(Self(indices))
    }

    /// Parses `"13,11,4"`.
    pub fn parse(text: &str) -> Result<Self> {
        let indices = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| SvarError::InvalidSelection(format!("'{s}' is not a column index")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the tuple against a `k × r` coefficient matrix.
    pub fn validate(&self, k: usize, r: usize) -> Result<()> {
        if self.0.len() != k {
            return Err(SvarError::InvalidSelection(format!(
                "need {k} columns, got {}",
                self.0.len()
            )));
        }
        if let Some(&bad) = self.0.iter().find(|&&j| j > r) {
            return Err(SvarError::IndexOutOfRange { index: bad, max: r });
        }
        Ok(())
    }

    /// Position `m` (0-based) within `g(·)` of 0-based column `col`, if selected.
    pub fn position_of(&self, col: usize) -> Option<usize> {
        self.0.iter().position(|&j| j == col + 1)
    }
}

impl TryFrom<Vec<usize>> for ColumnSelection {
    type Error = SvarError;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ColumnSelection> for Vec<usize> {
    fn from(s: ColumnSelection) -> Self {
        s.0
    }
}

/// `g(b)`: the selected columns of `b`, in tuple order.
pub fn select_columns(b: &Mat, sel: &ColumnSelection) -> Result<Mat> {
    sel.validate(b.nrows(), b.ncols())?;
    let k = b.nrows();
    let mut out = Mat::zeros(k, k);
    for (m, &j) in sel.indices().iter().enumerate() {
        out.set_column(m, &b.column(j - 1));
    }
    Ok(out)
}

/// Point estimates of the structural coefficients.
#[derive(Debug, Clone)]
pub struct StructuralPoint {
    /// Lower-unitriangular `Q̂`.
    pub q: Mat,
    /// Strictly lower-triangular `Â₀`.
    pub a0: Mat,
    /// `k × r` matrix `(μ̂, Â₁, …, Â_p)`.
    pub a: Mat,
    /// Upper factor, equal to `g(Â)`.
    pub u: Mat,
}

/// Identifies `(Q, A₀, A)` from reduced-form coefficients `b`.
///
/// A [`SvarError::SingularMinor`] names the smallest failing leading
/// principal minor of `g(b)`, which points at the column of the tuple
/// to revisit.
pub fn identify(b: &Mat, sel: &ColumnSelection) -> Result<StructuralPoint> {
    let g = select_columns(b, sel)?;
    let lu = lu_unitriangular(&g, default_singularity_tol(&g))?;
    let k = b.nrows();
    let q_inv = invert_unit_lower(&lu.l);
    let a0 = Mat::identity(k, k) - &q_inv;
    let a = solve_unit_lower(&lu.l, b);
    Ok(StructuralPoint {
        q: lu.l,
        a0,
        a,
        u: lu.u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMethod {
    #[default]
    Analytic,
    FiniteDifference,
}

/// Derivatives of `q̂`, `â₀`, `â` with respect to `b = vec(B)`.
#[derive(Debug, Clone)]
pub struct StructuralJacobians {
    /// `k² × kr`.
    pub j1: Mat,
    /// `k² × kr`.
    pub j2: Mat,
    /// `kr × kr`.
    pub j3: Mat,
}

pub fn jacobians(b: &Mat, sel: &ColumnSelection, method: JacobianMethod) -> Result<StructuralJacobians> {
    match method {
        JacobianMethod::Analytic => analytic_jacobians(b, sel),
        JacobianMethod::FiniteDifference => fd_jacobians(b, sel),
    }
}

/// Exact directional derivatives, one column per coordinate of `b`:
/// `dQ = dL`, `dA₀ = Q⁻¹ dL Q⁻¹`, `dA = Q⁻¹ (dB − dL A)`.
fn analytic_jacobians(b: &Mat, sel: &ColumnSelection) -> Result<StructuralJacobians> {
    let (k, r) = b.shape();
    let g = select_columns(b, sel)?;
    let lu = lu_unitriangular(&g, default_singularity_tol(&g))?;
    let diff = LuDifferential::new(&lu)?;
    let q_inv = diff.l_inv().clone();
    let a = solve_unit_lower(&lu.l, b);

    let mut j1 = Mat::zeros(k * k, k * r);
    let mut j2 = Mat::zeros(k * k, k * r);
    let mut j3 = Mat::zeros(k * r, k * r);
    for col in 0..r {
        let position = sel.position_of(col);
        for row in 0..k {
            let idx = col * k + row;
            // dA from dB = E_{row,col}: column `col` of Q⁻¹ E is Q⁻¹ e_row.
            let mut da = Mat::zeros(k, r);
            da.set_column(col, &q_inv.column(row));
            if let Some(m) = position {
                let dl = diff.apply_unit(row, m);
                let da0 = &q_inv * &dl * &q_inv;
                da -= &q_inv * &dl * &a;
                j1.column_mut(idx).copy_from_slice(dl.as_slice());
                j2.column_mut(idx).copy_from_slice(da0.as_slice());
            }
            j3.column_mut(idx).copy_from_slice(da.as_slice());
        }
    }
    Ok(StructuralJacobians { j1, j2, j3 })
}

fn fd_jacobians(b: &Mat, sel: &ColumnSelection) -> Result<StructuralJacobians> {
    let (k, r) = b.shape();
    sel.validate(k, r)?;
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let bm = Mat::from_column_slice(k, r, x);
        let s = identify(&bm, sel)?;
        let mut out = Vec::with_capacity(2 * k * k + k * r);
        out.extend_from_slice(s.q.as_slice());
        out.extend_from_slice(s.a0.as_slice());
        out.extend_from_slice(s.a.as_slice());
        Ok(out)
    };
    let full = central_jacobian(b.as_slice(), f)?;
    let kk = k * k;
    Ok(StructuralJacobians {
        j1: full.rows(0, kk).into_owned(),
        j2: full.rows(kk, kk).into_owned(),
        j3: full.rows(2 * kk, k * r).into_owned(),
    })
}

/// `J Σ Jᵀ`, symmetrized against rounding skew.
pub fn sandwich(j: &Mat, sigma: &Mat) -> Mat {
    symmetrize(&(j * sigma * j.transpose()))
}

/// `(Σ̂₁, Σ̂₂, Σ̂₃)` from the Jacobians and `Σ̂_b`.
pub fn delta_covariances(jac: &StructuralJacobians, sigma_b: &Mat) -> (Mat, Mat, Mat) {
    (
        sandwich(&jac.j1, sigma_b),
        sandwich(&jac.j2, sigma_b),
        sandwich(&jac.j3, sigma_b),
    )
}

/// Structural point estimates together with their delta-method covariances.
#[derive(Debug, Clone)]
pub struct StructuralFit {
    pub point: StructuralPoint,
    pub jacobians: StructuralJacobians,
    pub sigma1: Mat,
    pub sigma2: Mat,
    pub sigma3: Mat,
}

impl StructuralFit {
    pub fn q_hat(&self) -> &Mat {
        &self.point.q
    }

    pub fn a0_hat(&self) -> &Mat {
        &self.point.a0
    }

    pub fn a_hat(&self) -> &Mat {
        &self.point.a
    }
}

pub fn estimate_structural(
    fit: &ReducedFormFit,
    sel: &ColumnSelection,
    method: JacobianMethod,
) -> Result<StructuralFit> {
    let point = identify(&fit.b_hat, sel)?;
    let jacobians = jacobians(&fit.b_hat, sel, method)?;
    let (sigma1, sigma2, sigma3) = delta_covariances(&jacobians, &fit.sigma_b_hat);
    Ok(StructuralFit {
        point,
        jacobians,
        sigma1,
        sigma2,
        sigma3,
    })
}
