//! Command-line front end.

use crate::error::{Error, Result};
use crate::filtration::build_filtered_complex;
use crate::harness::{run_with_replications, worker_pool, write_outputs, ExperimentConfig};
use crate::limits::{
    c_k, indicator_integral, lifetime_integral, mu_integral, simulate_v_family, xi_integral, z_covariance, z_mean,
    IntegralKind, ModelParams, ProcessPath, SeriesParams, YSimulator,
};
use crate::oracles::{component_status, hole_thresholds};
use crate::persistence::{barcode, betti_curve, write_lifetime_csv};
use crate::sampler::{sample_cloud, sample_cloud_outside, DensitySpec, PointCloud, Regime, RegimeSpec};
use crate::seed::SeedRecord;
use crate::verify::{run_criterion, suite};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "barsum", version, about = "Lifetime sums of Čech barcodes over heavy-tailed point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a Poisson cloud with a power-law density and write it as CSV.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: f64,
        /// Keep only points beyond the cutoff radius of this regime.
        #[arg(long)]
        regime: Option<Regime>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the filtration of a cloud and write barcode, Betti curve and lifetime sums.
    Persist {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        t_max: f64,
        /// Times at which lifetime sums are written.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the indicator oracles on a small configuration.
    Indicators {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        t: f64,
    },
    /// Evaluate limit constants, integrals and covariances as JSON.
    Limits {
        #[command(flatten)]
        model: ModelArgs,
        /// Normalizing constant of the hole count.
        #[arg(long)]
        ck: bool,
        #[arg(long, value_enum)]
        integral: Option<IntegralArg>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long)]
        s: Option<f64>,
        /// Weak-core cluster integral, given as `i,j,j'`.
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<usize>>,
        /// Weak-core overlap integral, given as `i,j,i',j'`.
        #[arg(long, value_delimiter = ',')]
        xi: Option<Vec<usize>>,
        /// Truncated weak-core covariance at (t, s).
        #[arg(long)]
        covariance: bool,
        /// Truncated weak-core mean at t.
        #[arg(long)]
        mean: bool,
        #[arg(long, default_value_t = 0.05)]
        lambda: f64,
        /// Localization radius multiplier; unbounded when absent.
        #[arg(long)]
        localization: Option<f64>,
        #[arg(long, default_value_t = 6)]
        truncation: usize,
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate limit-process paths on a time grid.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        process: ProcessArg,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        paths: usize,
        /// Window radius for the Poisson-limit simulation; defaults to the largest grid time.
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance criteria: `all`, `quick`, a criterion name or number.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum IntegralArg {
    Hole,
    HolePlus,
    HoleMinus,
    HolePair,
    Lifetime,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProcessArg {
    /// Poisson limit with its increasing and decreasing parts.
    V,
    /// Gaussian limit with its increasing and decreasing parts.
    Y,
}

impl ModelArgs {
    fn density(&self) -> Result<DensitySpec> {
        DensitySpec::power_law(self.d, self.alpha)
    }

    fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.d, self.k, self.alpha)
    }
}

/// Runs the command line and maps failures to exit codes: 2 for configuration
/// problems, 1 for everything else.
pub fn run(cli: Cli) -> ExitCode {
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Sample {
            model,
            n,
            regime,
            lambda,
            gamma,
            seed,
            out,
        } => {
            let density = model.density()?;
            let seed = SeedRecord::new(seed);
            let cloud = match regime {
                Some(regime) => {
                    let spec = RegimeSpec::resolve(&density, regime, n, model.k, lambda, gamma)?;
                    sample_cloud_outside(&density, n, spec.radius, seed)?
                }
                None => sample_cloud(&density, n, seed)?,
            };
            cloud.save_csv(&out)?;
            println!("{} points written to {}", cloud.len(), out.display());
        }
        Command::Persist {
            input,
            k,
            t_max,
            grid,
            out,
        } => persist(&input, k, t_max, grid, &out)?,
        Command::Indicators { input, k, t } => {
            let cloud = PointCloud::load_csv(&input)?;
            let pts: Vec<&[f64]> = cloud.view().iter().collect();
            let mut report = Map::new();
            if pts.len() == k + 2 {
                let th = hole_thresholds(&pts, k)?;
                report.insert("h".into(), json!(th.h(t) as u8));
                report.insert("h_plus".into(), json!(th.h_plus(t) as u8));
                report.insert("h_minus".into(), json!(th.h_minus(t) as u8));
                report.insert("plus".into(), json!(th.plus));
                report.insert("minus".into(), json!(th.minus));
            }
            if pts.len() <= 64 {
                let status = component_status(&pts, t, k);
                report.insert("connected".into(), json!(status.connected));
                report.insert("betti".into(), json!(status.betti));
            }
            if report.is_empty() {
                return Err(Error::InvalidArgument("configurations hold at most 64 points".into()));
            }
            println!("{}", serde_json::to_string_pretty(&Value::Object(report))?);
        }
        Command::Limits {
            model,
            ck,
            integral,
            t,
            s,
            mu,
            xi,
            covariance,
            mean,
            lambda,
            localization,
            truncation,
            samples,
            seed,
        } => {
            let params = model.params()?;
            let seed = SeedRecord::new(seed);
            let mut report = Map::new();
            if ck {
                report.insert("c_k".into(), json!(c_k(model.d, model.k, model.alpha)?));
            }
            if let Some(kind) = integral {
                let est = match kind {
                    IntegralArg::Hole => indicator_integral(IntegralKind::Hole, &params, t, samples, seed)?,
                    IntegralArg::HolePlus => indicator_integral(IntegralKind::HolePlus, &params, t, samples, seed)?,
                    IntegralArg::HoleMinus => indicator_integral(IntegralKind::HoleMinus, &params, t, samples, seed)?,
                    IntegralArg::HolePair => {
                        let s = s.unwrap_or(t);
                        indicator_integral(IntegralKind::HolePair { s }, &params, t, samples, seed)?
                    }
                    IntegralArg::Lifetime => lifetime_integral(&params, t, s, samples, seed)?,
                };
                report.insert("integral".into(), serde_json::to_value(est)?);
            }
            let mut series = SeriesParams::new(params, lambda, localization.unwrap_or(f64::INFINITY), seed);
            series.samples = samples;
            series.xi_samples = (samples / 4).max(2);
            let s = s.unwrap_or(t);
            if let Some(ix) = mu {
                let [i, j, jp] = ix[..] else {
                    return Err(Error::InvalidArgument("--mu takes i,j,j'".into()));
                };
                report.insert("mu".into(), serde_json::to_value(mu_integral(i, j, jp, t, s, &series)?)?);
            }
            if let Some(ix) = xi {
                let [i, j, ip, jp] = ix[..] else {
                    return Err(Error::InvalidArgument("--xi takes i,j,i',j'".into()));
                };
                report.insert("xi".into(), serde_json::to_value(xi_integral(i, j, ip, jp, t, s, &series)?)?);
            }
            if mean {
                report.insert("mean".into(), serde_json::to_value(z_mean(t, truncation, &series)?)?);
            }
            if covariance {
                report.insert(
                    "covariance".into(),
                    serde_json::to_value(z_covariance(t, s, truncation, &series)?)?,
                );
            }
            if report.is_empty() {
                return Err(Error::InvalidArgument("nothing requested".into()));
            }
            println!("{}", serde_json::to_string_pretty(&Value::Object(report))?);
        }
        Command::Simulate {
            model,
            process,
            grid,
            paths,
            window,
            samples,
            seed,
            out,
        } => {
            let params = model.params()?;
            let seed = SeedRecord::new(seed);
            std::fs::create_dir_all(&out)?;
            let write = |name: String, path: &ProcessPath| -> Result<()> {
                path.write_csv(BufWriter::new(File::create(out.join(name))?))
            };
            match process {
                ProcessArg::V => {
                    let window = window.unwrap_or_else(|| *grid.last().unwrap_or(&0.0));
                    for p in 0..paths {
                        let family = simulate_v_family(&grid, &params, window, seed.named("v").child(p as u64))?;
                        write(format!("v_{p}.csv"), &family.v)?;
                        write(format!("v_plus_{p}.csv"), &family.v_plus)?;
                        write(format!("v_minus_{p}.csv"), &family.v_minus)?;
                    }
                }
                ProcessArg::Y => {
                    let sim = YSimulator::new(&grid, &params, samples, seed.named("covariance"))?;
                    let mut rng = seed.named("y").rng();
                    for p in 0..paths {
                        let (y, plus, minus) = sim.sample(&mut rng);
                        write(format!("y_{p}.csv"), &y)?;
                        write(format!("y_plus_{p}.csv"), &plus)?;
                        write(format!("y_minus_{p}.csv"), &minus)?;
                    }
                }
            }
            println!("{paths} paths written to {}", out.display());
        }
        Command::Experiment { config, workers, out } => {
            if !config.exists() {
                return Err(Error::Config {
                    line: 0,
                    column: 0,
                    message: format!("config file {} not found", config.display()),
                });
            }
            let mut config = ExperimentConfig::load(&config)?;
            if out.is_some() {
                config.output_dir = out;
            }
            let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("experiment_out"));
            let (report, reps) = worker_pool(workers)?.install(|| run_with_replications(&config))?;
            write_outputs(&report, &reps, &dir)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("report written to {}", dir.join("report.json").display());
        }
        Command::Verify { suite: name } => {
            let mut failed = 0;
            for id in suite(&name)? {
                let outcome = run_criterion(id);
                println!("{outcome}");
                failed += !outcome.passed as usize;
            }
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn persist(input: &Path, k: usize, t_max: f64, grid: Option<Vec<f64>>, out: &Path) -> Result<()> {
    let cloud = PointCloud::load_csv(input)?;
    let complex = build_filtered_complex(cloud.view(), k + 1, t_max)?;
    let bc = barcode(&complex, k)?;
    std::fs::create_dir_all(out)?;
    bc.write_csv(BufWriter::new(File::create(out.join("barcode.csv"))?))?;
    betti_curve(&bc).write_csv(BufWriter::new(File::create(out.join("betti_curve.csv"))?))?;
    let grid = grid.unwrap_or_else(|| (1..=20).map(|i| t_max * i as f64 / 20.0).collect());
    write_lifetime_csv(&bc, &grid, BufWriter::new(File::create(out.join("lifetime.csv"))?))?;
    println!("{} bars in degree {k} written to {}", bc.len(), out.display());
    Ok(())
}
