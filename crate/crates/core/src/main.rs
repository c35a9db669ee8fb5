use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use svar_lu::cli::config::InputSpec;
use svar_lu::cli::pipeline::{self, Estimation};
use svar_lu::cli::RunConfig;
use svar_lu::{ColumnSelection, Result, SvarError};

/// Structural VAR estimation identified by an LU decomposition of
/// selected reduced-form columns.
#[derive(Parser)]
#[command(name = "svar-lu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the model and write the full artifact bundle.
    Fit(Opts),
    /// Impulse responses with confidence bands.
    Irf(Opts),
    /// Tests of zero contemporaneous effects.
    Test(Opts),
    /// Monte Carlo study on a simulated process.
    Simulate(Opts),
    /// Join and transform the inputs without estimating.
    Transform(Opts),
}

#[derive(Args)]
struct Opts {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Wide CSV input (date column first); may be repeated.
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lag: Option<usize>,
    /// 1-based column selection, e.g. `13,11,4`.
    #[arg(long)]
    jtuple: Option<String>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    horizons: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
}

impl Opts {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path).map_err(|e| match e {
                SvarError::Io(io) => SvarError::Config(format!("{}: {io}", path.display())),
                other => other,
            })?,
            None => RunConfig::default(),
        };
        cfg.inputs.extend(self.input.iter().map(|path| InputSpec {
            path: path.clone(),
            date_column: None,
            series: Vec::new(),
        }));
        if let Some(seed) = self.seed {
            cfg.simulation.replication.seed = seed;
        }
        if let Some(lag) = self.lag {
            cfg.lag = lag;
        }
        if let Some(j) = &self.jtuple {
            cfg.jtuple = Some(ColumnSelection::parse(j)?);
        }
        if let Some(level) = self.level {
            cfg.level = level;
        }
        if let Some(h) = self.horizons {
            cfg.horizons = h;
        }
        if let Some(reps) = self.reps {
            cfg.simulation.replication.reps = reps;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_estimation(est: &Estimation) {
    println!(
        "k={} p={} T={} selection={:?} spectral radius {:.4}",
        est.fit.k,
        est.fit.p,
        est.fit.t_obs,
        est.selection.indices(),
        est.stationarity.radius
    );
    let q = est.structural.q_hat();
    let lower: Vec<String> = (0..q.ncols())
        .flat_map(|j| ((j + 1)..q.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| format!("{:.4}", q[(i, j)]))
        .collect();
    println!("Q lower entries: {}", lower.join(", "));
    for t in &est.tests {
        println!("{}: z = {:.4}, p = {:.4}", t.statistic_kind.name(), t.z_value, t.p_value);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(o) => {
            let est = pipeline::run_fit(&o.config()?, &o.out)?;
            print_estimation(&est);
            for s in &est.accuracy.series {
                println!(
                    "{}: sd {:.4}, fitted sd {:.4}, rmse {:.4}, adj R2 {}",
                    s.name,
                    s.series_sd,
                    s.fitted_sd,
                    s.rmse,
                    s.adjusted_r_squared.map_or("n/a".into(), |v| format!("{v:.4}"))
                );
            }
        }
        Command::Irf(o) => {
            let est = pipeline::run_irf(&o.config()?, &o.out)?;
            println!("responses for h = 0..={} written", est.irf.horizons.len() - 1);
        }
        Command::Test(o) => {
            let est = pipeline::run_test(&o.config()?, &o.out)?;
            print_estimation(&est);
        }
        Command::Simulate(o) => {
            let report = pipeline::run_simulate(&o.config()?, &o.out)?;
            for r in &report.results {
                let rates: Vec<String> = r
                    .rejection
                    .iter()
                    .map(|x| format!("{} {:.3}", x.name, x.rate))
                    .collect();
                println!("T={} completed {} rejection: {}", r.t_obs, r.completed, rates.join(", "));
            }
        }
        Command::Transform(o) => {
            let panel = pipeline::run_transform(&o.config()?, &o.out)?;
            println!("{} rows x {} series written", panel.n_rows(), panel.n_series());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
