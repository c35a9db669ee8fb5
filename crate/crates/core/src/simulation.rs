//! Monte Carlo study of the estimators and tests.
//!
//! Structural innovations are `v_t = A_W W_t + u_t` with independent
//! Laplace components, so `Var[v_t] = var_w A_W A_Wᵀ + var_u I` is not
//! diagonal: the common factor `W_t` confounds the equations
//! contemporaneously. Data are simulated from the reduced form
//! `Y_t = Q A X_{t−1} + Q v_t`, starting from a zero state and discarding a
//! burn-in.
//!
//! Every replication draws from its own ChaCha stream seeded by a
//! SplitMix64 mix of `(seed, sample size index, replication index)`, and
//! the aggregation runs in replication order, so reports do not depend on
//! the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SvarError};
use crate::identify::{estimate_structural, select_columns, ColumnSelection, JacobianMethod};
use crate::impulse::{irf, jacobians_total_effect, total_effect_irf};
use crate::inference::{self, standardized_contrast, StatisticKind};
use crate::linalg::{invert_unit_lower, Mat};
use crate::var::{build_design, check_stationarity, ols_fit, TimeSeriesPanel};

/// Tail threshold used in the size tables.
pub const TAIL_THRESHOLD: f64 = 1.96;

/// Paths with an entry above this magnitude are treated as explosive.
pub const EXPLOSION_BOUND: f64 = 1e8;

pub const DEFAULT_BURN_IN: usize = 500;

/// Largest share of replications allowed to fail before a run aborts.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Inverse-CDF Laplace draw with mean 0 and the given variance, from a
/// uniform `u ∈ (0, 1)`. The scale is `sqrt(variance / 2)`.
pub fn laplace_from_uniform(u: f64, variance: f64) -> f64 {
    let scale = (variance / 2.0).sqrt();
    let c = u - 0.5;
    -scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

pub fn laplace_sample<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> f64 {
    let u = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    laplace_from_uniform(u, variance)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the independent stream for `(stream, index)` under `master`.
pub fn substream_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

/// Structural data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvarDgp {
    /// Strictly lower-triangular contemporaneous effects.
    #[serde(with = "crate::linalg::rows")]
    pub a0: Mat,
    /// `(μ, A_1, …, A_p)`.
    #[serde(with = "crate::linalg::rows")]
    pub a: Mat,
    /// Confounder loadings, `k × m`.
    #[serde(with = "crate::linalg::rows")]
    pub a_w: Mat,
    pub var_w: f64,
    pub var_u: f64,
    pub k: usize,
    pub p: usize,
    pub selection: ColumnSelection,
}

/// Loadings of the two common shocks on the five innovations.
pub fn reference_confounder_loadings() -> Mat {
    Mat::from_row_slice(5, 2, &[0.5, -0.5, 0.5, 0.5, -0.5, 0.5, 0.4, 0.6, -0.4, -0.6])
}

impl SvarDgp {
    pub fn new(
        a0: Mat,
        a: Mat,
        a_w: Mat,
        var_w: f64,
        var_u: f64,
        p: usize,
        selection: ColumnSelection,
    ) -> Result<Self> {
        let k = a0.nrows();
        let dgp = Self {
            a0,
            a,
            a_w,
            var_w,
            var_u,
            k,
            p,
            selection,
        };
        dgp.validate()?;
        Ok(dgp)
    }

    /// Checks shapes, the triangular patterns that make the selection
    /// identifying, and stationarity of the implied reduced form.
    pub fn validate(&self) -> Result<()> {
        let (k, p) = (self.k, self.p);
        if p == 0 || k == 0 {
            return Err(SvarError::Config("k and p must be positive".into()));
        }
        if self.a0.shape() != (k, k) || self.a.shape() != (k, 1 + k * p) || self.a_w.nrows() != k {
            return Err(SvarError::DimensionMismatch("data-generating process shapes".into()));
        }
        if !(self.var_w >= 0.0 && self.var_u > 0.0) {
            return Err(SvarError::Config("innovation variances must be positive".into()));
        }
        for j in 0..k {
            for i in 0..=j {
                if self.a0[(i, j)] != 0.0 {
                    return Err(SvarError::Config("A0 must be strictly lower-triangular".into()));
                }
            }
        }
        let g = select_columns(&self.a, &self.selection)?;
        for j in 0..k {
            if g[(j, j)].abs() < 1e-8 {
                return Err(SvarError::Config(format!("selected block has zero pivot {}", j + 1)));
            }
            for i in (j + 1)..k {
                if g[(i, j)] != 0.0 {
                    return Err(SvarError::Config("selected block of A is not upper-triangular".into()));
                }
            }
        }
        let stat = check_stationarity(&self.b(), k, p, 1e-8)?;
        if !stat.stationary {
            return Err(SvarError::Config(format!(
                "reduced form is not stationary (spectral radius {:.6})",
                stat.radius
            )));
        }
        Ok(())
    }

    /// `Q = (I − A₀)⁻¹`.
    pub fn q(&self) -> Mat {
        invert_unit_lower(&(Mat::identity(self.k, self.k) - &self.a0))
    }

    /// `B = Q A`.
    pub fn b(&self) -> Mat {
        self.q() * &self.a
    }

    /// `var_w A_W A_Wᵀ + var_u I`.
    pub fn innovation_covariance(&self) -> Mat {
        &self.a_w * self.a_w.transpose() * self.var_w + Mat::identity(self.k, self.k) * self.var_u
    }

    /// True values of every estimated quantity, responses up to `h_max`.
    pub fn truth(&self, h_max: usize) -> Result<TrueValues> {
        let b = self.b();
        let q = self.q();
        let psi = irf(&b, self.k, self.p, h_max)?;
        let psi_o = total_effect_irf(&psi, &q);
        Ok(TrueValues {
            b,
            q,
            a0: self.a0.clone(),
            a: self.a.clone(),
            psi,
            psi_o,
        })
    }

    pub fn null_holds(&self) -> bool {
        self.a0.iter().all(|&x| x == 0.0)
    }

    /// Same process with `A₀ = O`.
    pub fn with_null(&self) -> Result<Self> {
        let mut d = self.clone();
        d.a0 = Mat::zeros(self.k, self.k);
        d.validate()?;
        Ok(d)
    }

    /// Five-variable, five-lag process with nonzero contemporaneous effects.
    ///
    /// `A_1` is upper-triangular with pivots 0.36 to 0.4 and supplies the
    /// identifying columns `(2, …, 6)`; lags 2–5 carry small mixed-sign
    /// coefficients. Innovations load on two common Laplace shocks.
    pub fn reference() -> Self {
        let k = 5;
        let p = 5;
        #[rustfmt::skip]
        let a0 = Mat::from_row_slice(k, k, &[
            0.0,  0.0, 0.0, 0.0, 0.0,
            0.3,  0.0, 0.0, 0.0, 0.0,
            0.2,  0.3, 0.0, 0.0, 0.0,
            -0.2, 0.2, 0.3, 0.0, 0.0,
            0.1, -0.1, 0.2, 0.3, 0.0,
        ]);
        let mu = [0.1, -0.1, 0.05, 0.0, 0.2];
        #[rustfmt::skip]
        let lags: [[f64; 25]; 5] = [
            [
                0.4, 0.08, -0.08, 0.08, 0.04,
                0.0, 0.36, 0.08, -0.04, 0.08,
                0.0, 0.0, 0.36, 0.08, -0.08,
                0.0, 0.0, 0.0, 0.36, 0.08,
                0.0, 0.0, 0.0, 0.0, 0.4,
            ],
            [
                -0.1, 0.05, 0.0, 0.05, 0.0,
                0.05, -0.1, 0.05, 0.0, 0.0,
                0.0, 0.05, 0.1, 0.0, -0.05,
                0.05, 0.0, 0.0, -0.1, 0.05,
                0.0, -0.05, 0.05, 0.0, 0.1,
            ],
            [
                0.05, 0.0, 0.05, 0.0, 0.0,
                0.0, 0.05, 0.0, -0.05, 0.0,
                -0.05, 0.0, 0.05, 0.0, 0.0,
                0.0, 0.0, 0.05, 0.05, 0.0,
                0.0, 0.05, 0.0, 0.0, -0.05,
            ],
            [
                0.0, -0.05, 0.0, 0.0, 0.05,
                0.05, 0.0, 0.0, 0.0, 0.0,
                0.0, 0.0, -0.05, 0.05, 0.0,
                0.0, 0.05, 0.0, 0.0, 0.0,
                -0.05, 0.0, 0.0, 0.05, 0.0,
            ],
            [
                0.05, 0.0, 0.0, 0.0, 0.0,
                0.0, 0.0, 0.05, 0.0, 0.0,
                0.0, 0.0, 0.0, 0.0, 0.05,
                0.0, -0.05, 0.0, 0.05, 0.0,
                0.0, 0.0, 0.0, 0.0, 0.05,
            ],
        ];
        let mut a = Mat::zeros(k, 1 + k * p);
        for i in 0..k {
            a[(i, 0)] = mu[i];
        }
        for (s, block) in lags.iter().enumerate() {
            let m = Mat::from_row_slice(k, k, block);
            a.view_mut((0, 1 + s * k), (k, k)).copy_from(&m);
        }
        let selection = ColumnSelection::new((2..=6).collect()).expect("distinct columns");
        Self::new(a0, a, reference_confounder_loadings(), 0.5, 0.5, p, selection)
            .expect("reference process is valid")
    }

    /// [`SvarDgp::reference`] with `A₀ = O`.
    pub fn reference_null() -> Self {
        Self::reference().with_null().expect("null reference process is valid")
    }
}

#[derive(Debug, Clone)]
pub struct TrueValues {
    pub b: Mat,
    pub q: Mat,
    pub a0: Mat,
    pub a: Mat,
    pub psi: Vec<Mat>,
    pub psi_o: Vec<Mat>,
}

/// Simulates `t_obs + p` observations after `burn_in` discarded periods.
pub fn generate_svar(dgp: &SvarDgp, t_obs: usize, burn_in: usize, seed: u64) -> Result<TimeSeriesPanel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with_rng(dgp, t_obs, burn_in, &mut rng)
}

fn generate_with_rng<R: Rng + ?Sized>(
    dgp: &SvarDgp,
    t_obs: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeriesPanel> {
    let (k, p) = (dgp.k, dgp.p);
    let q = dgp.q();
    let b = &q * &dgp.a;
    let m = dgp.a_w.ncols();
    let keep = t_obs + p;
    let total = burn_in + keep;
    // Row t holds Y_t; lags before the first period are zero.
    let mut path = Mat::zeros(total, k);
    let mut w = nalgebra::DVector::zeros(m);
    let mut v = nalgebra::DVector::zeros(k);
    for t in 0..total {
        for x in w.iter_mut() {
            *x = laplace_sample(rng, dgp.var_w);
        }
        for x in v.iter_mut() {
            *x = laplace_sample(rng, dgp.var_u);
        }
        v += &dgp.a_w * &w;
        let e = &q * &v;
        for i in 0..k {
            let mut y = b[(i, 0)] + e[i];
            for s in 1..=p.min(t) {
                for j in 0..k {
                    y += b[(i, 1 + (s - 1) * k + j)] * path[(t - s, j)];
                }
            }
            if !(y.abs() <= EXPLOSION_BOUND) {
                return Err(SvarError::ExplodedPath { period: t });
            }
            path[(t, i)] = y;
        }
    }
    TimeSeriesPanel::from_values(path.rows(burn_in, keep).into_owned())
}

/// Settings of a replication study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplicationConfig {
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Largest horizon of the response estimators (`h = 1..=irf_horizons`).
    pub irf_horizons: usize,
    /// Test weight; all ones when absent.
    pub weight: Option<Vec<f64>>,
    /// Worker threads; the global pool when absent.
    pub threads: Option<usize>,
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![100, 200, 500],
            reps: 1000,
            seed: 20_250_218,
            burn_in: DEFAULT_BURN_IN,
            irf_horizons: 3,
            weight: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorMetric {
    pub name: String,
    /// Mean over entries and replications of `estimate − truth`.
    pub mb: f64,
    /// Mean over entries and replications of `|estimate − truth|`.
    pub mmae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rate {
    pub name: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeReport {
    pub t_obs: usize,
    pub completed: usize,
    pub failures: usize,
    pub estimators: Vec<EstimatorMetric>,
    /// Share of `|s| > 1.96` per standardized estimator.
    pub tail: Vec<Rate>,
    /// Share of `|z| > 1.96`: size when the process satisfies the null, power otherwise.
    pub rejection: Vec<Rate>,
}

impl SampleSizeReport {
    pub fn estimator(&self, name: &str) -> Option<&EstimatorMetric> {
        self.estimators.iter().find(|m| m.name == name)
    }

    pub fn tail_rate(&self, name: &str) -> Option<f64> {
        self.tail.iter().find(|r| r.name == name).map(|r| r.rate)
    }

    pub fn rejection_rate(&self, name: &str) -> Option<f64> {
        self.rejection.iter().find(|r| r.name == name).map(|r| r.rate)
    }
}

/// Raw statistics of one sample size, one row per completed replication.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    pub t_obs: usize,
    pub columns: Vec<String>,
    pub replication: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub k: usize,
    pub p: usize,
    pub selection: Vec<usize>,
    pub null_holds: bool,
    pub reps: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub results: Vec<SampleSizeReport>,
    #[serde(skip)]
    pub draws: Vec<DrawTable>,
}

impl ReplicationReport {
    pub fn at(&self, t_obs: usize) -> Option<&SampleSizeReport> {
        self.results.iter().find(|r| r.t_obs == t_obs)
    }
}

/// Per-replication output.
struct Outcome {
    /// `(Σ (est − truth), Σ |est − truth|)` per estimator.
    errors: Vec<(f64, f64)>,
    /// `s` statistics then `z` statistics.
    stats: Vec<f64>,
}

fn estimator_names(h_max: usize) -> Vec<String> {
    let mut names: Vec<String> = ["b", "q", "a0", "a"].iter().map(|s| s.to_string()).collect();
    names.extend((1..=h_max).map(|h| format!("psi_{h}")));
    names.extend((1..=h_max).map(|h| format!("psi_o_{h}")));
    names
}

fn tail_names(h_max: usize) -> Vec<String> {
    let mut names: Vec<String> = ["s1", "s2", "s3"].iter().map(|s| s.to_string()).collect();
    names.extend((1..=h_max).map(|h| format!("s5_{h}")));
    names
}

fn entry_errors(est: &Mat, truth: &Mat) -> (f64, f64) {
    est.iter()
        .zip(truth.iter())
        .fold((0.0, 0.0), |(s, a), (x, y)| (s + (x - y), a + (x - y).abs()))
}

fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

fn diff(est: &Mat, truth: &Mat) -> Vec<f64> {
    est.iter().zip(truth.iter()).map(|(x, y)| x - y).collect()
}

fn replicate(
    dgp: &SvarDgp,
    truth: &TrueValues,
    t_obs: usize,
    burn_in: usize,
    h_max: usize,
    weight: &[f64],
    seed: u64,
) -> Result<Outcome> {
    let (k, p) = (dgp.k, dgp.p);
    let sel = &dgp.selection;
    let panel = generate_svar(dgp, t_obs, burn_in, seed)?;
    let fit = ols_fit(&build_design(&panel, p)?)?;
    let st = estimate_structural(&fit, sel, JacobianMethod::Analytic)?;
    let psi = irf(&fit.b_hat, k, p, h_max)?;
    let psi_o = total_effect_irf(&psi, st.q_hat());
    let j5 = jacobians_total_effect(&fit.b_hat, sel, k, p, h_max)?;

    let mut errors = vec![
        entry_errors(&fit.b_hat, &truth.b),
        entry_errors(st.q_hat(), &truth.q),
        entry_errors(st.a0_hat(), &truth.a0),
        entry_errors(st.a_hat(), &truth.a),
    ];
    errors.extend((1..=h_max).map(|h| entry_errors(&psi[h], &truth.psi[h])));
    errors.extend((1..=h_max).map(|h| entry_errors(&psi_o[h], &truth.psi_o[h])));

    let kk = k * k;
    let mut stats = vec![
        standardized_contrast(&diff(st.q_hat(), &truth.q), &st.sigma1, &ones(kk), t_obs)?,
        standardized_contrast(&diff(st.a0_hat(), &truth.a0), &st.sigma2, &ones(kk), t_obs)?,
        standardized_contrast(&diff(st.a_hat(), &truth.a), &st.sigma3, &ones(k * fit.r()), t_obs)?,
    ];
    for h in 1..=h_max {
        let sigma5 = crate::identify::sandwich(&j5[h], &fit.sigma_b_hat);
        stats.push(standardized_contrast(
            &diff(&psi_o[h], &truth.psi_o[h]),
            &sigma5,
            &ones(kk),
            t_obs,
        )?);
    }
    for kind in StatisticKind::ALL {
        stats.push(inference::z_statistic(kind, &fit, &st, sel, weight)?.z_value);
    }
    Ok(Outcome { errors, stats })
}

/// Runs the study over every sample size.
///
/// Replications whose pipeline fails (identification, degenerate
/// variance, explosive path) are counted; the run aborts with
/// [`SvarError::IdentificationRate`] once they reach 1% of a sample size.
pub fn run_replications(dgp: &SvarDgp, cfg: &ReplicationConfig) -> Result<ReplicationReport> {
    dgp.validate()?;
    if cfg.reps == 0 || cfg.sample_sizes.is_empty() {
        return Err(SvarError::Config("need at least one replication and one sample size".into()));
    }
    let k = dgp.k;
    let h_max = cfg.irf_horizons;
    let weight = cfg.weight.clone().unwrap_or_else(|| inference::default_weight(k));
    if weight.len() != k * (k - 1) / 2 {
        return Err(SvarError::Config(format!(
            "test weight has {} entries, expected {}",
            weight.len(),
            k * (k - 1) / 2
        )));
    }
    let truth = dgp.truth(h_max)?;
    let run = || -> Result<ReplicationReport> {
        let mut results = Vec::with_capacity(cfg.sample_sizes.len());
        let mut draws = Vec::with_capacity(cfg.sample_sizes.len());
        for (ti, &t_obs) in cfg.sample_sizes.iter().enumerate() {
            let outcomes: Vec<Result<Outcome>> = (0..cfg.reps)
                .into_par_iter()
                .map(|rep| {
                    let seed = substream_seed(cfg.seed, ti as u64, rep as u64);
                    replicate(dgp, &truth, t_obs, cfg.burn_in, h_max, &weight, seed)
                })
                .collect();
            let (report, table) = aggregate(t_obs, cfg.reps, h_max, &truth, outcomes)?;
            results.push(report);
            draws.push(table);
        }
        Ok(ReplicationReport {
            k,
            p: dgp.p,
            selection: dgp.selection.indices().to_vec(),
            null_holds: dgp.null_holds(),
            reps: cfg.reps,
            seed: cfg.seed,
            burn_in: cfg.burn_in,
            results,
            draws,
        })
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SvarError::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn aggregate(
    t_obs: usize,
    reps: usize,
    h_max: usize,
    truth: &TrueValues,
    outcomes: Vec<Result<Outcome>>,
) -> Result<(SampleSizeReport, DrawTable)> {
    let est_names = estimator_names(h_max);
    let tail_names = tail_names(h_max);
    let z_names: Vec<String> = StatisticKind::ALL.iter().map(|k| k.name().to_string()).collect();
    let entry_counts: Vec<usize> = {
        let mut v = vec![truth.b.len(), truth.q.len(), truth.a0.len(), truth.a.len()];
        v.extend(truth.psi.iter().skip(1).take(h_max).map(|m| m.len()));
        v.extend(truth.psi_o.iter().skip(1).take(h_max).map(|m| m.len()));
        v
    };

    let mut sums = vec![(0.0, 0.0); est_names.len()];
    let mut exceed = vec![0usize; tail_names.len() + z_names.len()];
    let mut failures = 0usize;
    let mut replication = Vec::new();
    let mut rows = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                for (acc, e) in sums.iter_mut().zip(&o.errors) {
                    acc.0 += e.0;
                    acc.1 += e.1;
                }
                for (c, s) in exceed.iter_mut().zip(&o.stats) {
                    if s.abs() > TAIL_THRESHOLD {
                        *c += 1;
                    }
                }
                replication.push(rep);
                rows.push(o.stats);
            }
            Err(e) => {
                log::debug!("replication {rep} at T={t_obs} failed: {e}");
                failures += 1;
            }
        }
    }
    if failures as f64 >= MAX_FAILURE_RATE * reps as f64 && failures > 0 {
        return Err(SvarError::IdentificationRate { failures, reps });
    }
    let completed = reps - failures;
    let n = completed as f64;
    let estimators = est_names
        .into_iter()
        .zip(&sums)
        .zip(&entry_counts)
        .map(|((name, &(s, a)), &cnt)| EstimatorMetric {
            name,
            mb: s / (n * cnt as f64),
            mmae: a / (n * cnt as f64),
        })
        .collect();
    let rate = |c: usize| c as f64 / n;
    let n_tail = tail_names.len();
    let tail = tail_names
        .iter()
        .zip(&exceed[..n_tail])
        .map(|(name, &c)| Rate { name: name.clone(), rate: rate(c) })
        .collect();
    let rejection = z_names
        .iter()
        .zip(&exceed[n_tail..])
        .map(|(name, &c)| Rate { name: name.clone(), rate: rate(c) })
        .collect();
    let mut columns = tail_names;
    columns.extend(z_names);
    Ok((
        SampleSizeReport {
            t_obs,
            completed,
            failures,
            estimators,
            tail,
            rejection,
        },
        DrawTable {
            t_obs,
            columns,
            replication,
            rows,
        },
    ))
}
