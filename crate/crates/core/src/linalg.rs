//! Dense matrix kernel shared by every estimator.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, which stores entries in
//! column-major order. All vectorizations in this crate follow that order:
//! entry `(i, j)` of a `rows × cols` matrix sits at position `j * rows + i`
//! of `vec(m)`. Every Jacobian is indexed against this convention.

use nalgebra::{DMatrix, Schur};

use crate::error::{Result, SvarError};

/// Dense real matrix, column-major.
pub type Mat = DMatrix<f64>;

/// Iteration cap for the eigenvalue sweep in [`spectral_radius`].
pub const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Default convergence tolerance for [`spectral_radius`].
pub const EIGEN_TOL: f64 = 1e-10;

/// Column-major stacking of `m` into a `rows*cols × 1` matrix.
pub fn vec(m: &Mat) -> Mat {
    Mat::from_column_slice(m.len(), 1, m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<Mat> {
    if v.len() != rows * cols {
        return Err(SvarError::DimensionMismatch(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Mat::from_column_slice(rows, cols, v))
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Largest absolute entry, 0 for an empty matrix.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn check_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SvarError::NonFinite(what.to_string()))
    }
}

fn check_square(m: &Mat, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(SvarError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Scale-aware pivot tolerance: `1e-10 * max(1, ‖c‖_max)`.
pub fn default_singularity_tol(c: &Mat) -> f64 {
    1e-10 * max_abs(c).max(1.0)
}

/// Factors `C = L U` with `L` lower-unitriangular and `U` upper-triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct LuPair {
    pub l: Mat,
    pub u: Mat,
}

/// Doolittle factorization without pivoting.
///
/// Row exchanges are never performed: the `L` factor is the identified
/// object, so a vanishing pivot is reported as
/// [`SvarError::SingularMinor`] carrying the 1-based order of the first
/// singular leading principal minor.
pub fn lu_unitriangular(c: &Mat, tol: f64) -> Result<LuPair> {
    let k = check_square(c, "LU input")?;
    check_finite(c, "LU input")?;
    let mut l = Mat::identity(k, k);
    let mut u = Mat::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut s = c[(i, j)];
            for m in 0..i {
                s -= l[(i, m)] * u[(m, j)];
            }
            u[(i, j)] = s;
        }
        let pivot = u[(i, i)];
        if pivot.abs() <= tol {
            return Err(SvarError::SingularMinor {
                index: i + 1,
                pivot,
            });
        }
        for r in (i + 1)..k {
            let mut s = c[(r, i)];
            for m in 0..i {
                s -= l[(r, m)] * u[(m, i)];
            }
            l[(r, i)] = s / pivot;
        }
    }
    Ok(LuPair { l, u })
}

/// Inverse of a lower-unitriangular matrix by forward substitution.
/// Only the strictly lower part of `l` is read; the diagonal is taken as 1.
pub fn invert_unit_lower(l: &Mat) -> Mat {
    let k = l.nrows();
    let mut inv = Mat::identity(k, k);
    for col in 0..k {
        for i in (col + 1)..k {
            let mut s = 0.0;
            for m in col..i {
                s -= l[(i, m)] * inv[(m, col)];
            }
            inv[(i, col)] = s;
        }
    }
    inv
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn invert_upper(u: &Mat) -> Result<Mat> {
    let k = check_square(u, "upper-triangular factor")?;
    let mut inv = Mat::zeros(k, k);
    for col in 0..k {
        for i in (0..=col).rev() {
            let d = u[(i, i)];
            if d == 0.0 {
                return Err(SvarError::SingularMinor {
                    index: i + 1,
                    pivot: d,
                });
            }
            let mut s = if i == col { 1.0 } else { 0.0 };
            for m in (i + 1)..=col {
                s -= u[(i, m)] * inv[(m, col)];
            }
            inv[(i, col)] = s / d;
        }
    }
    Ok(inv)
}

/// Solves `L X = B` for lower-unitriangular `L`.
pub fn solve_unit_lower(l: &Mat, b: &Mat) -> Mat {
    let k = l.nrows();
    let mut x = b.clone();
    for col in 0..x.ncols() {
        for i in 0..k {
            let mut s = x[(i, col)];
            for m in 0..i {
                s -= l[(i, m)] * x[(m, col)];
            }
            x[(i, col)] = s;
        }
    }
    x
}

/// Precomputed pieces for repeated directional derivatives of the `L`
/// factor at a fixed point `C = L U`.
///
/// Differentiating `C = L U` gives `L⁻¹ dC U⁻¹ = L⁻¹ dL + dU U⁻¹`, where the
/// first term is strictly lower-triangular and the second upper-triangular.
/// Hence `dL = L · low(L⁻¹ dC U⁻¹)` with `low` keeping the strictly lower part.
#[derive(Debug, Clone)]
pub struct LuDifferential {
    l: Mat,
    l_inv: Mat,
    u_inv: Mat,
}

impl LuDifferential {
    pub fn new(lu: &LuPair) -> Result<Self> {
        Ok(Self {
            l: lu.l.clone(),
            l_inv: invert_unit_lower(&lu.l),
            u_inv: invert_upper(&lu.u)?,
        })
    }

    /// `dL` for the perturbation direction `dc`.
    pub fn apply(&self, dc: &Mat) -> Mat {
        let mut x = &self.l_inv * dc * &self.u_inv;
        let k = x.nrows();
        for j in 0..k {
            for i in 0..=j {
                x[(i, j)] = 0.0;
            }
        }
        &self.l * x
    }

    /// `dL` for the rank-one direction `E_{row,col}` without forming it.
    pub fn apply_unit(&self, row: usize, col: usize) -> Mat {
        let k = self.l.nrows();
        let mut x = Mat::zeros(k, k);
        for j in 0..k {
            let right = self.u_inv[(col, j)];
            if right == 0.0 {
                continue;
            }
            for i in (j + 1)..k {
                x[(i, j)] = self.l_inv[(i, row)] * right;
            }
        }
        &self.l * x
    }

    pub fn l(&self) -> &Mat {
        &self.l
    }

    pub fn l_inv(&self) -> &Mat {
        &self.l_inv
    }
}

/// Directional derivative of the `L` factor of `lu_unitriangular(c)`
/// along `dc`, where `lu` is that factorization.
pub fn lu_differential(dc: &Mat, lu: &LuPair) -> Result<Mat> {
    if dc.shape() != lu.l.shape() {
        return Err(SvarError::DimensionMismatch(format!(
            "direction is {}x{}, factor is {}x{}",
            dc.nrows(),
            dc.ncols(),
            lu.l.nrows(),
            lu.l.ncols()
        )));
    }
    Ok(LuDifferential::new(lu)?.apply(dc))
}

/// Largest eigenvalue modulus of a square matrix.
///
/// Reduces to real Schur form by shifted QR sweeps; `tol` is the
/// deflation tolerance and the sweep count is capped at
/// [`EIGEN_MAX_SWEEPS`].
pub fn spectral_radius(m: &Mat, tol: f64) -> Result<f64> {
    let k = check_square(m, "spectral radius input")?;
    check_finite(m, "spectral radius input")?;
    if k == 0 {
        return Ok(0.0);
    }
    let schur = Schur::try_new(m.clone(), tol, EIGEN_MAX_SWEEPS)
        .ok_or(SvarError::NoConvergence(EIGEN_MAX_SWEEPS))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm())))
}

/// Serde adapter writing a matrix as a list of rows.
pub mod rows {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Mat;

    pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat, String> {
        let n = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err("rows have different lengths".into());
        }
        Ok(Mat::from_fn(n, c, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

/// [`rows`] for a list of matrices.
pub mod rows_list {
    use serde::{Serialize, Serializer};

    use super::{rows::to_rows, Mat};

    pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }
}
