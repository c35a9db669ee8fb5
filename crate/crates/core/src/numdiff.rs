//! Central finite-difference Jacobians.
//!
//! Used for the finite-difference Jacobian mode and as the cross-check for
//! every analytic derivative in the crate.

use crate::error::Result;
use crate::linalg::Mat;

/// Number of times a step is halved when a perturbed point is infeasible.
pub const MAX_STEP_HALVINGS: usize = 3;

/// Step for coordinate value `x`: `cbrt(eps) * max(1, |x|)`.
pub fn central_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Jacobian of `f` at `x` by central differences, one column per coordinate.
///
/// When `f` fails at a perturbed point the step for that coordinate is
/// halved, at most [`MAX_STEP_HALVINGS`] times, before the error is
/// returned.
pub fn central_jacobian<F>(x: &[f64], f: F) -> Result<Mat>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n_out = f(x)?.len();
    let mut jac = Mat::zeros(n_out, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let mut h = central_step(x[j]);
        let mut attempt = 0;
        let column = loop {
            probe[j] = x[j] + h;
            let plus = f(&probe);
            probe[j] = x[j] - h;
            let minus = f(&probe);
            probe[j] = x[j];
            match (plus, minus) {
                (Ok(p), Ok(m)) => {
                    // The realized step is exact in floating point only up to rounding.
                    let width = (x[j] + h) - (x[j] - h);
                    break p
                        .iter()
                        .zip(&m)
                        .map(|(a, b)| (a - b) / width)
                        .collect::<Vec<_>>();
                }
                (Err(e), _) | (_, Err(e)) => {
                    if attempt == MAX_STEP_HALVINGS {
                        return Err(e);
                    }
                    attempt += 1;
                    h *= 0.5;
                }
            }
        };
        jac.column_mut(j).copy_from_slice(&column);
    }
    Ok(jac)
}

/// `‖a − b‖_max / max(1, ‖a‖_max)`.
pub fn relative_max_error(a: &Mat, b: &Mat) -> f64 {
    let scale = a.amax().max(1.0);
    (a - b).amax() / scale
}
