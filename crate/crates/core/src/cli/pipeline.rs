//! Command implementations: each reads the configured inputs, runs the
//! estimation chain and writes its artifacts into an output directory.

use std::path::Path;

use serde::Serialize;

use crate::cli::config::RunConfig;
use crate::cli::export::{format_real, write_json, write_matrix_csv, write_panel_csv};
use crate::cli::ingest::ingest;
use crate::error::{Result, SvarError};
use crate::identify::{estimate_structural, ColumnSelection, JacobianMethod, StructuralFit};
use crate::impulse::{impulse_responses, Bands, IrfResult};
use crate::inference::{default_weight, z_statistic, StatisticKind, TestResult};
use crate::linalg::Mat;
use crate::simulation::{run_replications, ReplicationReport};
use crate::var::{build_design, check_stationarity, ols_fit, LagDesign, ReducedFormFit, Stationarity, TimeSeriesPanel};

/// In-sample accuracy of one equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesAccuracy {
    pub name: String,
    /// Sample standard deviation of the dependent series.
    pub series_sd: f64,
    /// Sample standard deviation of the one-step fitted values.
    pub fitted_sd: f64,
    /// `sqrt(SSR / T)`.
    pub rmse: f64,
    /// `None` for a constant series.
    pub r_squared: Option<f64>,
    /// `1 − (1 − R²)(T − 1)/(T − r)`; `None` when `T ≤ r` or the series is constant.
    pub adjusted_r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub t_obs: usize,
    pub r: usize,
    pub series: Vec<SeriesAccuracy>,
}

fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn accuracy_report(names: &[String], design: &LagDesign, fit: &ReducedFormFit) -> AccuracyReport {
    let t = design.t_obs();
    let r = design.r();
    let series = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let y: Vec<f64> = design.y.column(i).iter().copied().collect();
            let e: Vec<f64> = fit.residuals.column(i).iter().copied().collect();
            let fitted: Vec<f64> = y.iter().zip(&e).map(|(a, b)| a - b).collect();
            let mean = y.iter().sum::<f64>() / t as f64;
            let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
            let ssr: f64 = e.iter().map(|v| v * v).sum();
            let r_squared = (sst > 0.0).then(|| 1.0 - ssr / sst);
            let adjusted_r_squared = r_squared
                .filter(|_| t > r)
                .map(|r2| 1.0 - (1.0 - r2) * (t as f64 - 1.0) / (t - r) as f64);
            SeriesAccuracy {
                name: name.clone(),
                series_sd: sample_sd(&y),
                fitted_sd: sample_sd(&fitted),
                rmse: (ssr / t as f64).sqrt(),
                r_squared,
                adjusted_r_squared,
            }
        })
        .collect();
    AccuracyReport { t_obs: t, r, series }
}

/// Everything estimated from one panel.
#[derive(Debug, Clone)]
pub struct Estimation {
    pub series_names: Vec<String>,
    /// Labels of the `T` periods entering the regression.
    pub sample_labels: Vec<String>,
    pub selection: ColumnSelection,
    pub jacobian: JacobianMethod,
    pub fit: ReducedFormFit,
    pub stationarity: Stationarity,
    pub structural: StructuralFit,
    pub irf: IrfResult,
    pub tests: Vec<TestResult>,
    pub accuracy: AccuracyReport,
}

/// Runs the full estimation chain on an in-memory panel.
pub fn estimate_panel(cfg: &RunConfig, panel: &TimeSeriesPanel) -> Result<Estimation> {
    cfg.validate()?;
    let (k, p) = (panel.n_series(), cfg.lag);
    cfg.validate_for(k, p)?;
    let sel = cfg.require_jtuple()?.clone();
    let design = build_design(panel, p)?;
    let fit = ols_fit(&design)?;
    let stationarity = check_stationarity(&fit.b_hat, k, p, 1e-8)?;
    let structural = estimate_structural(&fit, &sel, cfg.jacobian)?;
    let irf = impulse_responses(&fit, &sel, cfg.horizons, cfg.level)?;
    let weight = cfg.weight.clone().unwrap_or_else(|| default_weight(k));
    let tests = if k >= 2 {
        StatisticKind::ALL
            .iter()
            .map(|&kind| z_statistic(kind, &fit, &structural, &sel, &weight))
            .collect::<Result<Vec<_>>>()?
    } else {
        log::warn!("a single series has no contemporaneous effects to test");
        Vec::new()
    };
    let names = panel.series_names().to_vec();
    let accuracy = accuracy_report(&names, &design, &fit);
    Ok(Estimation {
        series_names: names,
        sample_labels: panel.time_labels()[p..].to_vec(),
        selection: sel,
        jacobian: cfg.jacobian,
        fit,
        stationarity,
        structural,
        irf,
        tests,
        accuracy,
    })
}

#[derive(Serialize)]
struct IrfExport<'a> {
    horizons: &'a [usize],
    level: f64,
    #[serde(with = "crate::linalg::rows_list")]
    psi: &'a [Mat],
    #[serde(with = "crate::linalg::rows_list")]
    psi_o: &'a [Mat],
    #[serde(with = "crate::linalg::rows_list")]
    oirf: &'a [Mat],
    psi_bands: &'a [Bands],
    psi_o_bands: &'a [Bands],
}

impl<'a> IrfExport<'a> {
    fn new(irf: &'a IrfResult) -> Self {
        Self {
            horizons: &irf.horizons,
            level: irf.level,
            psi: &irf.psi,
            psi_o: &irf.psi_o,
            oirf: &irf.oirf,
            psi_bands: &irf.psi_bands,
            psi_o_bands: &irf.psi_o_bands,
        }
    }
}

#[derive(Serialize)]
struct FitBundle<'a> {
    series_names: &'a [String],
    first_period: Option<&'a String>,
    last_period: Option<&'a String>,
    k: usize,
    p: usize,
    t_obs: usize,
    selection: &'a ColumnSelection,
    jacobian: JacobianMethod,
    stationarity: &'a Stationarity,
    #[serde(with = "crate::linalg::rows")]
    b_hat: &'a Mat,
    #[serde(with = "crate::linalg::rows")]
    sigma_hat: &'a Mat,
    #[serde(with = "crate::linalg::rows")]
    q_hat: &'a Mat,
    #[serde(with = "crate::linalg::rows")]
    a0_hat: &'a Mat,
    #[serde(with = "crate::linalg::rows")]
    a_hat: &'a Mat,
    #[serde(with = "crate::linalg::rows")]
    sigma1: &'a Mat,
    #[serde(with = "crate::linalg::rows")]
    sigma2: &'a Mat,
    #[serde(with = "crate::linalg::rows")]
    sigma3: &'a Mat,
    tests: &'a [TestResult],
    accuracy: &'a AccuracyReport,
    irf: IrfExport<'a>,
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// Long-format response table for plotting: one row per horizon, kind and
/// `(response i, shock j)`, both 1-based.
pub fn write_irf_csv(path: &Path, irf: &IrfResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["horizon", "kind", "i", "j", "point", "lower", "upper"])?;
    let kinds: [(&str, &[Mat], &[Bands]); 2] = [
        ("psi", &irf.psi, &irf.psi_bands),
        ("psi_o", &irf.psi_o, &irf.psi_o_bands),
    ];
    for (h, &horizon) in irf.horizons.iter().enumerate() {
        for (kind, points, bands) in kinds {
            let (m, b) = (&points[h], &bands[h]);
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    w.write_record([
                        horizon.to_string(),
                        kind.to_string(),
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        format_real(m[(i, j)]),
                        format_real(b.lower[(i, j)]),
                        format_real(b.upper[(i, j)]),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_accuracy_csv(path: &Path, acc: &AccuracyReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["series", "series_sd", "fitted_sd", "rmse", "r_squared", "adjusted_r_squared"])?;
    let opt = |x: Option<f64>| x.map(format_real).unwrap_or_default();
    for s in &acc.series {
        w.write_record([
            s.name.clone(),
            format_real(s.series_sd),
            format_real(s.fitted_sd),
            format_real(s.rmse),
            opt(s.r_squared),
            opt(s.adjusted_r_squared),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Estimates from the configured inputs and writes the bundle
/// (`fit.json`), one CSV per matrix, `irf.csv` and `accuracy.csv`.
pub fn run_fit(cfg: &RunConfig, out: &Path) -> Result<Estimation> {
    let panel = ingest(cfg)?;
    let est = estimate_panel(cfg, &panel)?;
    write_fit_outputs(&est, out)?;
    Ok(est)
}

pub fn write_fit_outputs(est: &Estimation, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let st = &est.structural;
    let bundle = FitBundle {
        series_names: &est.series_names,
        first_period: est.sample_labels.first(),
        last_period: est.sample_labels.last(),
        k: est.fit.k,
        p: est.fit.p,
        t_obs: est.fit.t_obs,
        selection: &est.selection,
        jacobian: est.jacobian,
        stationarity: &est.stationarity,
        b_hat: &est.fit.b_hat,
        sigma_hat: &est.fit.sigma_hat,
        q_hat: st.q_hat(),
        a0_hat: st.a0_hat(),
        a_hat: st.a_hat(),
        sigma1: &st.sigma1,
        sigma2: &st.sigma2,
        sigma3: &st.sigma3,
        tests: &est.tests,
        accuracy: &est.accuracy,
        irf: IrfExport::new(&est.irf),
    };
    write_json(&out.join("fit.json"), &bundle)?;
    let matrices: [(&str, &Mat); 9] = [
        ("b_hat", &est.fit.b_hat),
        ("sigma_hat", &est.fit.sigma_hat),
        ("sigma_b_hat", &est.fit.sigma_b_hat),
        ("q_hat", st.q_hat()),
        ("a0_hat", st.a0_hat()),
        ("a_hat", st.a_hat()),
        ("sigma1", &st.sigma1),
        ("sigma2", &st.sigma2),
        ("sigma3", &st.sigma3),
    ];
    for (name, m) in matrices {
        write_matrix_csv(&out.join(format!("{name}.csv")), m)?;
    }
    write_irf_csv(&out.join("irf.csv"), &est.irf)?;
    write_accuracy_csv(&out.join("accuracy.csv"), &est.accuracy)?;
    Ok(())
}

/// Writes `irf.json` and `irf.csv`.
pub fn run_irf(cfg: &RunConfig, out: &Path) -> Result<Estimation> {
    let panel = ingest(cfg)?;
    let est = estimate_panel(cfg, &panel)?;
    ensure_dir(out)?;
    write_json(&out.join("irf.json"), &IrfExport::new(&est.irf))?;
    write_irf_csv(&out.join("irf.csv"), &est.irf)?;
    Ok(est)
}

/// Writes `test.json` with `z₁`, `z₂` and `z₃`.
pub fn run_test(cfg: &RunConfig, out: &Path) -> Result<Estimation> {
    let panel = ingest(cfg)?;
    let est = estimate_panel(cfg, &panel)?;
    if est.tests.is_empty() {
        return Err(SvarError::EmptySubvector { k: est.fit.k });
    }
    ensure_dir(out)?;
    write_json(&out.join("test.json"), &est.tests)?;
    Ok(est)
}

/// Writes `simulation.json` and one `draws_T<n>.csv` per sample size.
pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<ReplicationReport> {
    let dgp = cfg.simulation.dgp.build()?;
    let report = run_replications(&dgp, &cfg.simulation.replication)?;
    ensure_dir(out)?;
    write_json(&out.join("simulation.json"), &report)?;
    for table in &report.draws {
        let mut w = csv::Writer::from_path(out.join(format!("draws_T{}.csv", table.t_obs)))?;
        let mut header = vec!["replication".to_string()];
        header.extend(table.columns.iter().cloned());
        w.write_record(&header)?;
        for (rep, row) in table.replication.iter().zip(&table.rows) {
            let mut rec = vec![rep.to_string()];
            rec.extend(row.iter().map(|&x| format_real(x)));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(report)
}

/// Writes the joined, transformed panel to `panel.csv`.
pub fn run_transform(cfg: &RunConfig, out: &Path) -> Result<TimeSeriesPanel> {
    cfg.validate()?;
    let panel = ingest(cfg)?;
    ensure_dir(out)?;
    write_panel_csv(&out.join("panel.csv"), &panel)?;
    Ok(panel)
}
