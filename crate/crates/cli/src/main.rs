//! `deconcave`: estimate a concave distribution function from noisy
//! observations.
//!
//! Exit status: 0 success (and all verifications passed), 1 a verification
//! failed, 2 usage/validation/IO problems, 3 an estimator did not converge.

mod commands;
mod config;
mod io;
mod svg;

use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// bad flags, bad config, unparseable files, IO failures — exit 2
    Usage(String),
    /// an iterative fit ran out of budget — exit 3
    NotConverged(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<deconcave::Error> for CliError {
    fn from(e: deconcave::Error) -> Self {
        match e {
            deconcave::Error::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Flags shared by every subcommand; each mirrors a config-file key and
/// overrides it.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// flat key-value config file applied before any flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// noise kernel: exponential, uniform01, triangular or custom:<path>
    #[arg(long)]
    kernel: Option<String>,
    /// signal law: sqrt5, sqrt:<scale> or mixture:w@theta,...
    #[arg(long)]
    truth: Option<String>,
    /// sample size for gen
    #[arg(long)]
    n: Option<String>,
    /// RNG seed
    #[arg(long)]
    seed: Option<String>,
    /// which estimators to run: mle, lse or both
    #[arg(long)]
    estimators: Option<String>,
    /// characterization tolerance for the fitters
    #[arg(long)]
    tol: Option<String>,
    /// iteration budget for the fitters
    #[arg(long)]
    max_iter: Option<String>,
    /// output directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// step of the reciprocal-kernel solve
    #[arg(long)]
    recip_h: Option<String>,
    /// reach of the reciprocal-kernel solve (defaults to the data range)
    #[arg(long)]
    recip_horizon: Option<String>,
    /// points per emitted curve
    #[arg(long)]
    grid_points: Option<String>,
    /// evaluation point for bounds and rate studies
    #[arg(long)]
    x0: Option<String>,
    /// comma-separated sample sizes for rate studies
    #[arg(long)]
    sizes: Option<String>,
    /// Monte Carlo replications per sample size
    #[arg(long)]
    replications: Option<String>,
    /// comma-separated perturbation sizes
    #[arg(long)]
    eps: Option<String>,
}

impl CommonArgs {
    fn merge(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.load_file(path)?;
        }
        let out_dir = self.out_dir.as_ref().map(|p| p.display().to_string());
        let pairs: [(&str, &Option<String>); 15] = [
            ("kernel", &self.kernel),
            ("truth", &self.truth),
            ("n", &self.n),
            ("seed", &self.seed),
            ("estimators", &self.estimators),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("out_dir", &out_dir),
            ("recip_h", &self.recip_h),
            ("recip_horizon", &self.recip_horizon),
            ("grid_points", &self.grid_points),
            ("x0", &self.x0),
            ("sizes", &self.sizes),
            ("replications", &self.replications),
            ("eps", &self.eps),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "deconcave",
    version,
    about = "concave distribution function estimation from noisy samples"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Draw a sample from a known model and write it with its sidecar.
    Gen(CommonArgs),
    /// Fit the estimators to a sample file and write fits and curves.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// sample file; defaults to <out_dir>/sample.txt
        #[arg(long)]
        sample: Option<PathBuf>,
    },
    /// Recompute the characterization of stored fits and report PASS/FAIL.
    Verify {
        /// fit files to check
        #[arg(required = true)]
        fits: Vec<PathBuf>,
        /// sample file; defaults to sample.txt next to the first fit
        #[arg(long)]
        sample: Option<PathBuf>,
        /// kernel spec, required only for custom kernels
        #[arg(long)]
        kernel: Option<String>,
        /// tolerance on the likelihood slack
        #[arg(long, default_value_t = 1e-6)]
        mle_tol: f64,
        /// tolerance on the least squares defect
        #[arg(long, default_value_t = 1e-8)]
        lse_tol: f64,
        /// step of the reciprocal-kernel solve
        #[arg(long, default_value_t = 1e-3)]
        recip_h: f64,
    },
    /// Reproduce the three benchmark figures with their curve files.
    Figures(CommonArgs),
    /// Monte Carlo rate study: error medians, slopes and a log-log plot.
    Rates(CommonArgs),
    /// Print minimax lower bounds and limit-law scale constants.
    Bounds(CommonArgs),
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Gen(common) => commands::gen(&common.merge()?).map(|_| true),
        Cmd::Fit { common, sample } => {
            let cfg = common.merge()?;
            let sample = sample.unwrap_or_else(|| cfg.out_dir.join("sample.txt"));
            commands::fit(&cfg, &sample).map(|_| true)
        }
        Cmd::Verify { fits, sample, kernel, mle_tol, lse_tol, recip_h } => {
            commands::verify(&commands::VerifyArgs {
                fits,
                sample,
                kernel,
                mle_tol,
                lse_tol,
                recip_h,
            })
        }
        Cmd::Figures(common) => commands::figures(&common.merge()?).map(|_| true),
        Cmd::Rates(common) => commands::rates(&common.merge()?).map(|_| true),
        Cmd::Bounds(common) => commands::bounds(&common.merge()?).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
