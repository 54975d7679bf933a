//! Command-line surface and configuration merging.
//!
//! Settings resolve in three layers: built-in defaults, then an optional
//! JSON settings file (`--config`), then command-line flags. A flag always
//! overrides the file; the file always overrides the default.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use fsim_core::estimator::KnotRule;
use fsim_core::OptimizerConfig;
use fsim_sim::{Model, SimSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Parsed invocation: one subcommand plus global switches.
#[derive(Debug, Parser)]
#[command(
    name = "fsim",
    version,
    about = "Single-index functional regression: fit a model, predict from a saved fit, \
             or run a replicated simulation study",
    propagate_version = true
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Print extra progress detail to stderr (repeat for more).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the model from a curve file and a scalar table.
    Fit(FitArgs),
    /// Evaluate a saved fit on new observations.
    Predict(PredictArgs),
    /// Run a replicated synthetic-data study and write its report.
    Simulate(SimulateArgs),
}

/// Estimator tuning flags shared by `fit` and `simulate`.
#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Frequency cut-off for the profiling smoother [default: 5]
    #[arg(long)]
    pub m: Option<usize>,
    /// Knot-spacing scale: spacing = c0 * n^(-1/(2s-1)) for degree s [default: 1]
    #[arg(long)]
    pub c0: Option<f64>,
    /// B-spline degree s [default: 3]
    #[arg(long)]
    pub degree: Option<usize>,
    /// Lower bound for the last index coefficient [default: 0.01]
    #[arg(long)]
    pub rho0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Curve file: optional grid row, then one curve per row.
    #[arg(long, value_name = "FILE")]
    pub curves: PathBuf,
    /// Scalar table: header `y,w1..wq,z1..zd`, one observation per row.
    #[arg(long, value_name = "FILE")]
    pub scalars: PathBuf,
    /// Output path for the fit artifact (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// JSON settings file; flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for the optimizer's deterministic fallback jitter [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Fit artifact written by `fsim fit`.
    #[arg(long, value_name = "FILE")]
    pub artifact: PathBuf,
    /// Curve file for the new observations (same grid as training).
    #[arg(long, value_name = "FILE")]
    pub curves: PathBuf,
    /// Scalar table for the new observations (`y` column optional, ignored).
    #[arg(long, value_name = "FILE")]
    pub scalars: PathBuf,
    /// Output path for the predictions, one per input row.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Data model: m41 (sinusoidal link) or m42 (affine link) [default: m41]
    #[arg(long)]
    pub model: Option<Model>,
    /// Training sample size per replication [default: 200]
    #[arg(long)]
    pub n: Option<usize>,
    /// Eigenvalue-decay exponent [default: 1.5]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of replications [default: 100]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; every draw in the study derives from it [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise standard deviation [default: the model's own]
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Worker threads for the replication pool [default: available cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output path for the study report (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Output path for the per-replication table [default: report path with .csv]
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// Directory to export replication 1's train/test data into
    /// (curves.csv, scalars.csv, new-curves.csv, new-scalars.csv).
    #[arg(long, value_name = "DIR")]
    pub export_data: Option<PathBuf>,
    /// JSON settings file; flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

/// Optional JSON settings file. Every field is optional; present fields
/// replace the built-in defaults and are themselves overridden by flags.
///
/// `seed` is the simulate master seed; `optimizer_seed` is the fallback
/// jitter seed the `fit` flag `--seed` also controls. At most one of `c0`,
/// `knot_spacing`, `knot_subintervals` may be set (including via flag).
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    // Estimator settings.
    pub m: Option<usize>,
    pub c0: Option<f64>,
    pub knot_spacing: Option<f64>,
    pub knot_subintervals: Option<usize>,
    pub degree: Option<usize>,
    pub rho0: Option<f64>,
    pub max_iter: Option<usize>,
    pub ridge: Option<f64>,
    pub tol_obj: Option<f64>,
    pub tol_step: Option<f64>,
    pub optimizer_seed: Option<u64>,
    pub m_tilde_grid: Option<Vec<usize>>,
    pub k_star_grid: Option<Vec<usize>>,
    // Study settings (simulate only).
    pub model: Option<String>,
    pub n: Option<usize>,
    pub delta: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub noise_sd: Option<f64>,
    pub test_size: Option<usize>,
    pub grid_len: Option<usize>,
    pub jobs: Option<usize>,
}

/// Reads the settings file when a path was given.
pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::file(path, format!("invalid settings: {e}")))
}

/// Builds the estimator configuration from defaults, file, and flags.
pub fn optimizer_config(est: &EstimatorArgs, file: &FileConfig) -> Result<OptimizerConfig> {
    let mut cfg = OptimizerConfig::default();
    if let Some(v) = est.m.or(file.m) {
        cfg.m = v;
    }
    if let Some(v) = est.degree.or(file.degree) {
        cfg.degree = v;
    }
    if let Some(v) = est.rho0.or(file.rho0) {
        cfg.rho0 = v;
    }
    if let Some(v) = file.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = file.ridge {
        cfg.ridge = v;
    }
    if let Some(v) = file.tol_obj {
        cfg.tol_obj = v;
    }
    if let Some(v) = file.tol_step {
        cfg.tol_step = v;
    }
    if let Some(v) = file.optimizer_seed {
        cfg.seed = v;
    }
    cfg.m_tilde_grid = file.m_tilde_grid.clone();
    cfg.k_star_grid = file.k_star_grid.clone();

    let c0 = est.c0.or(file.c0);
    let knot_choices =
        usize::from(c0.is_some()) + usize::from(file.knot_spacing.is_some()) + usize::from(file.knot_subintervals.is_some());
    if knot_choices > 1 {
        return Err(CliError::Config(
            "choose at most one of c0, knot_spacing, knot_subintervals".into(),
        ));
    }
    if let Some(v) = c0 {
        cfg.knots = KnotRule::ScaledSpacing { c0: v };
    } else if let Some(h) = file.knot_spacing {
        cfg.knots = KnotRule::Spacing(h);
    } else if let Some(k) = file.knot_subintervals {
        cfg.knots = KnotRule::Subintervals(k);
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Builds and validates the full study spec for `simulate`.
pub fn sim_spec(args: &SimulateArgs, file: &FileConfig) -> Result<SimSpec> {
    let model = match (args.model, &file.model) {
        (Some(m), _) => m,
        (None, Some(s)) => s
            .parse()
            .map_err(|e: fsim_sim::SimError| CliError::Config(e.to_string()))?,
        (None, None) => Model::M41,
    };
    let mut spec = SimSpec::new(
        model,
        args.n.or(file.n).unwrap_or(200),
        args.delta.or(file.delta).unwrap_or(1.5),
        args.reps.or(file.reps).unwrap_or(100),
        args.seed.or(file.seed).unwrap_or(0),
    );
    if let Some(sd) = args.noise_sd.or(file.noise_sd) {
        spec.noise_sd = Some(sd);
    }
    if let Some(t) = file.test_size {
        spec.test_size = t;
    }
    if let Some(g) = file.grid_len {
        spec.grid_len = g;
    }
    spec.config = optimizer_config(&args.estimator, file)?;
    spec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}
