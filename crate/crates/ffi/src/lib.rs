//! C interface to the structural VAR estimator.
//!
//! Every fallible call returns an [`SvarStatus`]; on failure the message is
//! kept per thread and can be copied out with [`svar_last_error`]. Matrices
//! cross the boundary as row-major `double` buffers. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use svar_lu::identify::{estimate_structural, StructuralFit};
use svar_lu::impulse::{impulse_responses, IrfResult};
use svar_lu::inference::{two_sided_p, z_statistic};
use svar_lu::var::{build_design, ols_fit, ReducedFormFit};
use svar_lu::{ColumnSelection, JacobianMethod, Mat, StatisticKind, SvarError, TimeSeriesPanel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvarStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid dimensions, selection or settings.
    InvalidArgument = 2,
    /// Singular minors, singular designs, degenerate variances and similar.
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvarMatrix {
    /// `k × r` reduced-form coefficients.
    BHat = 0,
    SigmaHat = 1,
    /// `k r × k r`.
    SigmaB = 2,
    QHat = 3,
    A0Hat = 4,
    AHat = 5,
    Sigma1 = 6,
    Sigma2 = 7,
    Sigma3 = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvarStatistic {
    Z1 = 1,
    Z2 = 2,
    Z3 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvarResponse {
    Psi = 0,
    /// `Ψ_h Q`.
    PsiO = 1,
    /// `Ψ_h L̃`.
    Oirf = 2,
    PsiLower = 3,
    PsiUpper = 4,
    PsiOLower = 5,
    PsiOUpper = 6,
}

/// A fitted model.
pub struct SvarModel {
    fit: ReducedFormFit,
    structural: StructuralFit,
    selection: ColumnSelection,
}

/// Impulse responses and bands of a model.
pub struct SvarIrf {
    irf: IrfResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &SvarError) -> SvarStatus {
    match e.exit_code() {
        3 => SvarStatus::Numerical,
        _ => SvarStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F: FnOnce() -> Result<(), (SvarStatus, String)>>(f: F) -> SvarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SvarStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SvarStatus::Panic
        }
    }
}

fn lift<T>(r: svar_lu::Result<T>) -> Result<T, (SvarStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SvarStatus, String) {
    (SvarStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (SvarStatus, String) {
    (SvarStatus::InvalidArgument, msg.into())
}

/// Copies `m` row-major into `out` when it holds at least `rows × cols`
/// values; always reports the shape through `rows`/`cols` when non-null.
unsafe fn copy_out(m: &Mat, out: *mut f64, len: usize, rows: *mut usize, cols: *mut usize) -> Result<(), (SvarStatus, String)> {
    if !rows.is_null() {
        *rows = m.nrows();
    }
    if !cols.is_null() {
        *cols = m.ncols();
    }
    if out.is_null() {
        return if len == 0 { Ok(()) } else { Err(null("out")) };
    }
    let need = m.len();
    if len < need {
        return Err((SvarStatus::BufferTooSmall, format!("buffer holds {len} values, need {need}")));
    }
    let dst = std::slice::from_raw_parts_mut(out, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dst[i * m.ncols() + j] = m[(i, j)];
        }
    }
    Ok(())
}

/// Fits a VAR(`p`) with intercept to `n_rows × k` row-major observations
/// and identifies it from the 1-based column selection `jtuple` (length `k`).
///
/// # Safety
/// `data` must point to `n_rows * k` doubles, `jtuple` to `k` values and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn svar_model_fit(
    data: *const f64,
    n_rows: usize,
    k: usize,
    p: usize,
    jtuple: *const usize,
    out: *mut *mut SvarModel,
) -> SvarStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if jtuple.is_null() {
            return Err(null("jtuple"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if k == 0 || n_rows == 0 {
            return Err(invalid("data must have at least one row and one series"));
        }
        let values = Mat::from_row_slice(n_rows, k, std::slice::from_raw_parts(data, n_rows * k));
        let selection = lift(ColumnSelection::new(std::slice::from_raw_parts(jtuple, k).to_vec()))?;
        let panel = lift(TimeSeriesPanel::from_values(values))?;
        let design = lift(build_design(&panel, p))?;
        lift(selection.validate(k, design.r()))?;
        let fit = lift(ols_fit(&design))?;
        let structural = lift(estimate_structural(&fit, &selection, JacobianMethod::Analytic))?;
        *out = Box::into_raw(Box::new(SvarModel {
            fit,
            structural,
            selection,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a pointer from [`svar_model_fit`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svar_model_free(model: *mut SvarModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Reports the number of series, the lag order and the effective sample size.
///
/// # Safety
/// `model` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn svar_model_dims(
    model: *const SvarModel,
    k: *mut usize,
    p: *mut usize,
    t_obs: *mut usize,
) -> SvarStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        for (dst, v) in [(k, m.fit.k), (p, m.fit.p), (t_obs, m.fit.t_obs)] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        Ok(())
    })
}

/// Copies one estimated matrix row-major into `out`. With `out` null and
/// `len` zero only the shape is reported.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn svar_model_matrix(
    model: *const SvarModel,
    which: SvarMatrix,
    out: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> SvarStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let st = &m.structural;
        let src = match which {
            SvarMatrix::BHat => &m.fit.b_hat,
            SvarMatrix::SigmaHat => &m.fit.sigma_hat,
            SvarMatrix::SigmaB => &m.fit.sigma_b_hat,
            SvarMatrix::QHat => st.q_hat(),
            SvarMatrix::A0Hat => st.a0_hat(),
            SvarMatrix::AHat => st.a_hat(),
            SvarMatrix::Sigma1 => &st.sigma1,
            SvarMatrix::Sigma2 => &st.sigma2,
            SvarMatrix::Sigma3 => &st.sigma3,
        };
        copy_out(src, out, len, rows, cols)
    })
}

/// Test of `A₀ = O` with weight `v` of length `k(k−1)/2`; a null `weight`
/// means all ones. Writes the statistic and its two-sided p-value.
///
/// # Safety
/// `model` must be a live handle, `weight` null or `weight_len` doubles,
/// and `z`/`p_value` null or writable.
#[no_mangle]
pub unsafe extern "C" fn svar_model_test(
    model: *const SvarModel,
    statistic: SvarStatistic,
    weight: *const f64,
    weight_len: usize,
    z: *mut f64,
    p_value: *mut f64,
) -> SvarStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let k = m.fit.k;
        let w = if weight.is_null() {
            svar_lu::inference::default_weight(k)
        } else {
            std::slice::from_raw_parts(weight, weight_len).to_vec()
        };
        if w.len() != k * (k.saturating_sub(1)) / 2 {
            return Err(invalid(format!("weight has {} entries, expected {}", w.len(), k * k.saturating_sub(1) / 2)));
        }
        let kind = match statistic {
            SvarStatistic::Z1 => StatisticKind::Z1,
            SvarStatistic::Z2 => StatisticKind::Z2,
            SvarStatistic::Z3 => StatisticKind::Z3,
        };
        let t = lift(z_statistic(kind, &m.fit, &m.structural, &m.selection, &w))?;
        if !z.is_null() {
            *z = t.z_value;
        }
        if !p_value.is_null() {
            *p_value = t.p_value;
        }
        Ok(())
    })
}

/// Responses for horizons `0..=h_max` with pointwise bands at `level`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn svar_irf_compute(
    model: *const SvarModel,
    h_max: usize,
    level: f64,
    out: *mut *mut SvarIrf,
) -> SvarStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let irf = lift(impulse_responses(&m.fit, &m.selection, h_max, level))?;
        *out = Box::into_raw(Box::new(SvarIrf { irf }));
        Ok(())
    })
}

/// # Safety
/// `irf` must be null or a pointer from [`svar_irf_compute`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svar_irf_free(irf: *mut SvarIrf) {
    if !irf.is_null() {
        drop(Box::from_raw(irf));
    }
}

/// Copies the `k × k` response of kind `which` at horizon `h` row-major.
///
/// # Safety
/// `irf` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn svar_irf_response(
    irf: *const SvarIrf,
    h: usize,
    which: SvarResponse,
    out: *mut f64,
    len: usize,
) -> SvarStatus {
    guard(|| {
        let r = &irf.as_ref().ok_or_else(|| null("irf"))?.irf;
        if h >= r.psi.len() {
            return Err(invalid(format!("horizon {h} beyond {}", r.psi.len() - 1)));
        }
        let src = match which {
            SvarResponse::Psi => &r.psi[h],
            SvarResponse::PsiO => &r.psi_o[h],
            SvarResponse::Oirf => &r.oirf[h],
            SvarResponse::PsiLower => &r.psi_bands[h].lower,
            SvarResponse::PsiUpper => &r.psi_bands[h].upper,
            SvarResponse::PsiOLower => &r.psi_o_bands[h].lower,
            SvarResponse::PsiOUpper => &r.psi_o_bands[h].upper,
        };
        copy_out(src, out, len, ptr::null_mut(), ptr::null_mut())
    })
}

/// `2 (1 − Φ(|z|))`.
#[no_mangle]
pub extern "C" fn svar_two_sided_p(z: f64) -> f64 {
    two_sided_p(z)
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full length including
/// the terminator. An empty message means the last call succeeded.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn svar_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn svar_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}
