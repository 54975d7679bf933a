//! Replicated simulation studies with deterministic aggregation.
//!
//! [`monte_carlo`] runs `R` independent replications of draw → fit → score.
//! Replications execute in parallel, but each one derives its own seeds from
//! `(master seed, replication index)` and results are folded in replication
//! order, so the report is a pure function of the [`SimSpec`] regardless of
//! scheduling. Wall-clock timings are kept in memory only — every serialized
//! form of a report is byte-identical across runs of the same spec.

use std::time::{Duration, Instant};

use fsim_core::{estimator, Grid, OptimizerConfig, ProfileFit, DEFAULT_GRID_LEN};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::metrics::{mae_prediction, mise};
use crate::models::{generate, Model, SimulatedData};
use crate::rng;

/// Seed-derivation tags for the two draws of one replication.
const TAG_TRAIN: u64 = 1;
const TAG_TEST: u64 = 2;

/// Evaluation points for the link-error integral over the training index
/// range.
const LINK_ERROR_GRID_LEN: usize = 201;

/// Full description of a replicated study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    /// Data model to draw from.
    pub model: Model,
    /// Training sample size per replication.
    pub n: usize,
    /// Eigenvalue-decay exponent δ.
    pub delta: f64,
    /// Number of replications.
    pub replications: usize,
    /// Master seed; every random number in the study derives from it.
    pub seed: u64,
    /// Independent test-sample size for prediction error.
    pub test_size: usize,
    /// Number of grid points for the synthesized curves.
    pub grid_len: usize,
    /// Noise standard deviation; `None` uses the model's default.
    pub noise_sd: Option<f64>,
    /// Estimator configuration applied to every replication.
    pub config: OptimizerConfig,
}

impl SimSpec {
    /// A spec with the default test size (300), grid (101 points), noise
    /// level, and estimator configuration.
    pub fn new(model: Model, n: usize, delta: f64, replications: usize, seed: u64) -> Self {
        SimSpec {
            model,
            n,
            delta,
            replications,
            seed,
            test_size: 300,
            grid_len: DEFAULT_GRID_LEN,
            noise_sd: None,
            config: OptimizerConfig::default(),
        }
    }

    /// Noise level actually used for draws.
    pub fn noise_sd(&self) -> f64 {
        self.noise_sd.unwrap_or(self.model.default_noise_sd())
    }

    /// Checks the study invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n < 30 {
            return Err(SimError::Spec(format!(
                "training size must be at least 30, got {}",
                self.n
            )));
        }
        if !self.delta.is_finite() || self.delta <= 1.0 {
            return Err(SimError::Spec(format!(
                "decay exponent must exceed 1, got {}",
                self.delta
            )));
        }
        if self.replications == 0 {
            return Err(SimError::Spec("need at least one replication".into()));
        }
        if self.test_size == 0 {
            return Err(SimError::Spec("test size must be at least 1".into()));
        }
        if self.grid_len < 2 {
            return Err(SimError::Spec(format!(
                "grid needs at least 2 points, got {}",
                self.grid_len
            )));
        }
        if let Some(sd) = self.noise_sd {
            if !sd.is_finite() || sd < 0.0 {
                return Err(SimError::Spec(format!(
                    "noise standard deviation must be finite and nonnegative, got {sd}"
                )));
            }
        }
        self.config.validate()?;
        Ok(())
    }
}

/// Results of one successful replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    /// 1-based replication index.
    pub replication: usize,
    /// Child seed of the training draw (test draw uses a sibling seed).
    pub seed: u64,
    /// Estimated linear coefficients.
    pub alpha: Vec<f64>,
    /// Estimated index direction.
    pub beta: Vec<f64>,
    /// Linear-reference (identity-link) estimates from the same data.
    pub linear_alpha: Vec<f64>,
    /// Linear-reference index direction (normalized).
    pub linear_beta: Vec<f64>,
    /// Integrated squared link error over the training index range.
    pub mise_link: f64,
    /// Integrated squared slope error over the curve domain.
    pub mise_slope: f64,
    /// Mean absolute prediction error on the independent test draw.
    pub mae: f64,
    /// Selected slope cut-off.
    pub m_tilde: usize,
    /// Selected second-stage basis dimension.
    pub k_star: usize,
    /// Whether the optimizer met its tolerances.
    pub converged: bool,
    /// Outer iterations used.
    pub iterations: usize,
    /// Wall-clock time of the fit; in-memory only, never serialized, so
    /// reports from identical specs are byte-identical.
    #[serde(skip)]
    pub runtime: Duration,
}

/// A replication whose fit raised an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    /// 1-based replication index.
    pub replication: usize,
    /// Child seed of the training draw, for replaying the failure.
    pub seed: u64,
    /// The error message.
    pub message: String,
}

/// Summary statistics over the successful replications.
///
/// Bias is `mean(estimate) − truth` per component; spreads are sample
/// standard deviations (zero for a single replication). Quartiles use
/// linear interpolation between order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Successful replication count.
    pub completed: usize,
    /// Failed replication count.
    pub failed: usize,
    /// True linear coefficients (for the bias columns).
    pub true_alpha: Vec<f64>,
    /// True index direction.
    pub true_beta: Vec<f64>,
    /// Component means of α̂.
    pub alpha_mean: Vec<f64>,
    /// `alpha_mean − true_alpha`.
    pub alpha_bias: Vec<f64>,
    /// Component standard deviations of α̂.
    pub alpha_sd: Vec<f64>,
    /// Component means of β̂.
    pub beta_mean: Vec<f64>,
    /// `beta_mean − true_beta`.
    pub beta_bias: Vec<f64>,
    /// Component standard deviations of β̂.
    pub beta_sd: Vec<f64>,
    /// Component means of the linear-reference α̂.
    pub linear_alpha_mean: Vec<f64>,
    /// Component standard deviations of the linear-reference α̂.
    pub linear_alpha_sd: Vec<f64>,
    /// Component means of the linear-reference β̂.
    pub linear_beta_mean: Vec<f64>,
    /// Component standard deviations of the linear-reference β̂.
    pub linear_beta_sd: Vec<f64>,
    /// Mean integrated squared link error.
    pub mise_link_mean: f64,
    /// Median integrated squared link error.
    pub mise_link_median: f64,
    /// Mean integrated squared slope error.
    pub mise_slope_mean: f64,
    /// Median integrated squared slope error.
    pub mise_slope_median: f64,
    /// Mean prediction error.
    pub mae_mean: f64,
    /// Lower quartile, median, upper quartile of prediction error.
    pub mae_quartiles: [f64; 3],
}

/// Full output of a replicated study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    /// The spec that produced this report.
    pub spec: SimSpec,
    /// Successful replications, in replication order.
    pub records: Vec<RepRecord>,
    /// Failed replications, in replication order.
    pub failures: Vec<FailureRecord>,
    /// Summary statistics over `records`.
    pub aggregates: Aggregates,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of pre-sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Per-component mean and sd over a field of vectors.
fn component_stats(records: &[RepRecord], len: usize, get: impl Fn(&RepRecord) -> &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut means = Vec::with_capacity(len);
    let mut sds = Vec::with_capacity(len);
    for j in 0..len {
        let column: Vec<f64> = records.iter().map(|r| get(r)[j]).collect();
        let m = mean(&column);
        sds.push(sample_sd(&column, m));
        means.push(m);
    }
    (means, sds)
}

fn scalar_summary(records: &[RepRecord], get: impl Fn(&RepRecord) -> f64) -> (f64, Vec<f64>) {
    let mut column: Vec<f64> = records.iter().map(get).collect();
    let m = mean(&column);
    column.sort_by(|a, b| a.partial_cmp(b).expect("metrics are finite"));
    (m, column)
}

impl Aggregates {
    /// Folds the per-replication records; `records` must be nonempty.
    fn from_records(records: &[RepRecord], failed: usize, model: Model) -> Aggregates {
        let true_alpha = model.true_alpha();
        let true_beta = model.true_beta();
        let (alpha_mean, alpha_sd) = component_stats(records, true_alpha.len(), |r| &r.alpha);
        let (beta_mean, beta_sd) = component_stats(records, true_beta.len(), |r| &r.beta);
        let (linear_alpha_mean, linear_alpha_sd) =
            component_stats(records, true_alpha.len(), |r| &r.linear_alpha);
        let (linear_beta_mean, linear_beta_sd) =
            component_stats(records, true_beta.len(), |r| &r.linear_beta);
        let alpha_bias: Vec<f64> = alpha_mean
            .iter()
            .zip(&true_alpha)
            .map(|(m, t)| m - t)
            .collect();
        let beta_bias: Vec<f64> = beta_mean
            .iter()
            .zip(&true_beta)
            .map(|(m, t)| m - t)
            .collect();
        let (mise_link_mean, link_sorted) = scalar_summary(records, |r| r.mise_link);
        let (mise_slope_mean, slope_sorted) = scalar_summary(records, |r| r.mise_slope);
        let (mae_mean, mae_sorted) = scalar_summary(records, |r| r.mae);
        Aggregates {
            completed: records.len(),
            failed,
            true_alpha,
            true_beta,
            alpha_mean,
            alpha_bias,
            alpha_sd,
            beta_mean,
            beta_bias,
            beta_sd,
            linear_alpha_mean,
            linear_alpha_sd,
            linear_beta_mean,
            linear_beta_sd,
            mise_link_mean,
            mise_link_median: quantile(&link_sorted, 0.5),
            mise_slope_mean,
            mise_slope_median: quantile(&slope_sorted, 0.5),
            mae_mean,
            mae_quartiles: [
                quantile(&mae_sorted, 0.25),
                quantile(&mae_sorted, 0.5),
                quantile(&mae_sorted, 0.75),
            ],
        }
    }
}

/// Integrated squared link error of a fit over its training index range.
pub fn link_error(fit: &ProfileFit, truth: &crate::models::TruthBundle) -> Result<f64> {
    let grid = Grid::uniform(
        LINK_ERROR_GRID_LEN,
        fit.basis_second.lo(),
        fit.basis_second.hi(),
    )?;
    let est: Vec<f64> = grid.points().iter().map(|&u| fit.link_value(u)).collect();
    let tru: Vec<f64> = grid.points().iter().map(|&u| truth.link_value(u)).collect();
    mise(&est, &tru, &grid)
}

/// Integrated squared slope error of a fit against the generating truth.
pub fn slope_error(fit: &ProfileFit, truth: &crate::models::TruthBundle) -> Result<f64> {
    mise(&fit.a_curve, &truth.slope_curve, &fit.grid)
}

/// Draws the train and test sets replication `r` (0-based) works from.
///
/// Exactly the datasets the harness itself fits, so exports and external
/// cross-checks see the same draws as the study.
pub fn replication_data(spec: &SimSpec, r: usize) -> Result<(SimulatedData, SimulatedData)> {
    spec.validate()?;
    let train_seed = rng::derive(spec.seed, r as u64, TAG_TRAIN);
    let test_seed = rng::derive(spec.seed, r as u64, TAG_TEST);
    let noise_sd = spec.noise_sd();
    let train = generate(spec.model, spec.n, spec.delta, train_seed, spec.grid_len, noise_sd)?;
    let test = generate(
        spec.model,
        spec.test_size,
        spec.delta,
        test_seed,
        spec.grid_len,
        noise_sd,
    )?;
    Ok((train, test))
}

fn run_replication(spec: &SimSpec, r: usize) -> std::result::Result<RepRecord, FailureRecord> {
    let train_seed = rng::derive(spec.seed, r as u64, TAG_TRAIN);
    let fail = |message: String| FailureRecord {
        replication: r + 1,
        seed: train_seed,
        message,
    };
    let (train, test) = replication_data(spec, r).map_err(|e| fail(e.to_string()))?;

    let started = Instant::now();
    let data = train.to_regression_data().map_err(|e| fail(e.to_string()))?;
    let fit = estimator::fit(&data, &spec.config).map_err(|e| fail(e.to_string()))?;
    let linear = estimator::init_linear_fit(&data, &spec.config).map_err(|e| fail(e.to_string()))?;
    let runtime = started.elapsed();

    let mise_link = link_error(&fit, &train.truth).map_err(|e| fail(e.to_string()))?;
    let mise_slope = slope_error(&fit, &train.truth).map_err(|e| fail(e.to_string()))?;
    let mae = mae_prediction(&fit, &test).map_err(|e| fail(e.to_string()))?;

    Ok(RepRecord {
        replication: r + 1,
        seed: train_seed,
        alpha: fit.alpha,
        beta: fit.beta,
        linear_alpha: linear.alpha,
        linear_beta: linear.beta,
        mise_link,
        mise_slope,
        mae,
        m_tilde: fit.m_tilde,
        k_star: fit.k_star,
        converged: fit.converged,
        iterations: fit.iterations,
        runtime,
    })
}

/// Whether the failure share exceeds 20% (exact integer comparison).
fn too_many_failures(failed: usize, total: usize) -> bool {
    failed * 5 > total
}

/// Runs the replicated study described by `spec`.
///
/// Replications run in parallel; the report is identical for any thread
/// count. A replication whose fit raises an error becomes a
/// [`FailureRecord`]; if more than 20% of replications fail, the whole study
/// errors out.
pub fn monte_carlo(spec: &SimSpec) -> Result<McReport> {
    spec.validate()?;
    let outcomes: Vec<std::result::Result<RepRecord, FailureRecord>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| run_replication(spec, r))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(fail) => failures.push(fail),
        }
    }
    if too_many_failures(failures.len(), spec.replications) {
        let first = &failures[0];
        return Err(SimError::TooManyFailures {
            failed: failures.len(),
            total: spec.replications,
            first_replication: first.replication,
            first_seed: first.seed,
            first_message: first.message.clone(),
        });
    }
    let aggregates = Aggregates::from_records(&records, failures.len(), spec.model);
    Ok(McReport {
        spec: spec.clone(),
        records,
        failures,
        aggregates,
    })
}

impl McReport {
    /// Serializes the report as pretty-printed JSON (timings excluded).
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SimError::Serialize(e.to_string()))
    }

    /// Parses a report back from [`McReport::to_json`] output.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SimError::Serialize(e.to_string()))
    }

    /// Flat comma-separated per-replication table for external plotting.
    ///
    /// One row per successful replication; failures are not rows (they carry
    /// no metrics) but appear in the JSON report.
    pub fn replication_table(&self) -> String {
        let (q, d) = self.spec.model.dims();
        let mut head: Vec<String> = vec![
            "replication".into(),
            "seed".into(),
            "converged".into(),
            "iterations".into(),
            "m_tilde".into(),
            "k_star".into(),
            "mise_link".into(),
            "mise_slope".into(),
            "mae".into(),
        ];
        for k in 1..=q {
            head.push(format!("alpha{k}"));
        }
        for k in 1..=d {
            head.push(format!("beta{k}"));
        }
        for k in 1..=q {
            head.push(format!("linear_alpha{k}"));
        }
        for k in 1..=d {
            head.push(format!("linear_beta{k}"));
        }
        let mut out = head.join(",");
        out.push('\n');
        for r in &self.records {
            let mut row: Vec<String> = vec![
                r.replication.to_string(),
                r.seed.to_string(),
                r.converged.to_string(),
                r.iterations.to_string(),
                r.m_tilde.to_string(),
                r.k_star.to_string(),
                r.mise_link.to_string(),
                r.mise_slope.to_string(),
                r.mae.to_string(),
            ];
            row.extend(r.alpha.iter().map(|v| v.to_string()));
            row.extend(r.beta.iter().map(|v| v.to_string()));
            row.extend(r.linear_alpha.iter().map(|v| v.to_string()));
            row.extend(r.linear_beta.iter().map(|v| v.to_string()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Human-readable summary: per-parameter bias and spread for both the
    /// full fit and the linear reference, then the curve-error and
    /// prediction-error aggregates.
    pub fn summary(&self) -> String {
        let a = &self.aggregates;
        let mut out = String::new();
        out.push_str(&format!(
            "model {}  n={}  delta={}  replications={} (failed {})\n",
            self.spec.model, self.spec.n, self.spec.delta, self.spec.replications, a.failed
        ));
        out.push_str(&format!(
            "{:<12} {:>10} {:>10} {:>12} {:>10}\n",
            "parameter", "bias", "sd", "linear bias", "linear sd"
        ));
        for j in 0..a.true_alpha.len() {
            out.push_str(&format!(
                "{:<12} {:>10.4} {:>10.4} {:>12.4} {:>10.4}\n",
                format!("alpha[{}]", j + 1),
                a.alpha_bias[j],
                a.alpha_sd[j],
                a.linear_alpha_mean[j] - a.true_alpha[j],
                a.linear_alpha_sd[j],
            ));
        }
        for j in 0..a.true_beta.len() {
            out.push_str(&format!(
                "{:<12} {:>10.4} {:>10.4} {:>12.4} {:>10.4}\n",
                format!("beta[{}]", j + 1),
                a.beta_bias[j],
                a.beta_sd[j],
                a.linear_beta_mean[j] - a.true_beta[j],
                a.linear_beta_sd[j],
            ));
        }
        out.push_str(&format!(
            "link MISE    mean {:.6}  median {:.6}\n",
            a.mise_link_mean, a.mise_link_median
        ));
        out.push_str(&format!(
            "slope MISE   mean {:.6}  median {:.6}\n",
            a.mise_slope_mean, a.mise_slope_median
        ));
        out.push_str(&format!(
            "MAE          mean {:.6}  quartiles {:.6} / {:.6} / {:.6}\n",
            a.mae_mean, a.mae_quartiles[0], a.mae_quartiles[1], a.mae_quartiles[2]
        ));
        out
    }
}
