#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svar_lu::var::check_stationarity;
use svar_lu::{ColumnSelection, Mat, TimeSeriesPanel};

/// A structural model `(A₀, A)` whose selected block `g(A)` is
/// upper-triangular with pivots bounded away from zero.
#[derive(Debug, Clone)]
pub struct Instance {
    pub k: usize,
    pub p: usize,
    pub sel: ColumnSelection,
    pub a0: Mat,
    pub a: Mat,
    pub q: Mat,
    pub b: Mat,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    rng.random_range(-half_width..half_width)
}

/// Draws a feasible instance. With `max_radius`, the lag blocks of `A` are
/// damped geometrically until the companion spectral radius is below it.
pub fn random_instance(rng: &mut ChaCha8Rng, k: usize, p: usize, max_radius: Option<f64>) -> Instance {
    let r = 1 + k * p;
    let mut cols: Vec<usize> = (1..=r).collect();
    cols.shuffle(rng);
    cols.truncate(k);
    let sel = ColumnSelection::new(cols.clone()).unwrap();

    let mut a0 = Mat::zeros(k, k);
    for j in 0..k {
        for i in (j + 1)..k {
            a0[(i, j)] = uniform(rng, 0.5);
        }
    }
    let mut a = Mat::from_fn(k, r, |_, _| uniform(rng, 0.5));
    for (m, &c) in cols.iter().enumerate() {
        let col = c - 1;
        for i in (m + 1)..k {
            a[(i, col)] = 0.0;
        }
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        a[(m, col)] = sign * rng.random_range(0.3..0.8);
    }
    let q = (Mat::identity(k, k) - &a0).try_inverse().unwrap();
    let mut b = &q * &a;
    if let Some(target) = max_radius {
        let radius = check_stationarity(&b, k, p, 0.0).unwrap().radius;
        if radius > target {
            let c = target / radius * 0.999;
            for s in 1..=p {
                let f = c.powi(s as i32);
                for j in 0..k {
                    a.column_mut(1 + (s - 1) * k + j).scale_mut(f);
                }
            }
            b = &q * &a;
        }
    }
    Instance {
        k,
        p,
        sel,
        a0,
        a,
        q,
        b,
    }
}

/// Simulates `n` rows of the reduced-form VAR driven by uniform noise of the given scale.
pub fn simulate_panel(rng: &mut ChaCha8Rng, b: &Mat, p: usize, n: usize, noise: f64) -> TimeSeriesPanel {
    let k = b.nrows();
    let burn = 200;
    let mut y = Mat::zeros(n + burn, k);
    for t in 0..(n + burn) {
        for i in 0..k {
            let mut v = b[(i, 0)] + noise * uniform(rng, 1.0);
            for s in 1..=p.min(t) {
                for j in 0..k {
                    v += b[(i, 1 + (s - 1) * k + j)] * y[(t - s, j)];
                }
            }
            y[(t, i)] = v;
        }
    }
    TimeSeriesPanel::from_values(y.rows(burn, n).into_owned()).unwrap()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
