//! The three subcommand drivers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fsim_core::curves::{load_curves, HeaderMode};
use fsim_core::estimator::{self, FitArtifact};
use fsim_core::{FunctionalSample, ProfileFit, RegressionData};
use fsim_sim::{monte_carlo, replication_data, SimSpec};

use crate::args::{self, FitArgs, PredictArgs, SimulateArgs};
use crate::error::{in_file, CliError, Result};
use crate::tables;

/// Fits the model from files and writes the artifact.
pub fn run_fit(fit_args: &FitArgs, verbose: u8) -> Result<()> {
    let file = args::load_file_config(fit_args.config.as_deref())?;
    let mut cfg = args::optimizer_config(&fit_args.estimator, &file)?;
    if let Some(s) = fit_args.seed {
        cfg.seed = s;
    }

    let sample: FunctionalSample =
        load_curves(&fit_args.curves, HeaderMode::Auto).map_err(|e| in_file(&fit_args.curves, e))?;
    if verbose > 0 {
        eprintln!(
            "read {} curves on {} grid points from {}",
            sample.n(),
            sample.grid_len(),
            fit_args.curves.display()
        );
    }
    let table = tables::load_scalars(&fit_args.scalars, true)?;
    if table.rows() != sample.n() {
        return Err(CliError::Run(format!(
            "{} has {} observations but {} has {} curves",
            fit_args.scalars.display(),
            table.rows(),
            fit_args.curves.display(),
            sample.n()
        )));
    }
    let y = table.y.expect("y required at parse time");
    let data = RegressionData::from_sample(y, table.w, table.z, sample)
        .map_err(|e| CliError::Run(e.to_string()))?;

    let started = Instant::now();
    let fit = estimator::fit(&data, &cfg).map_err(|e| CliError::Run(e.to_string()))?;
    if verbose > 0 {
        eprintln!("fit finished in {:.2}s", started.elapsed().as_secs_f64());
    }

    let artifact = FitArtifact::from_fit(&fit);
    let json = artifact.to_json().map_err(|e| CliError::Run(e.to_string()))?;
    tables::atomic_write(&fit_args.out, &json)?;

    if !fit.converged {
        eprintln!(
            "warning: fit stopped at the iteration cap ({}) without meeting the tolerances",
            fit.iterations
        );
    }
    print!("{}", fit_summary(&fit));
    println!("wrote {}", fit_args.out.display());
    Ok(())
}

/// Human-readable fit summary: coefficients, selections, convergence.
fn fit_summary(fit: &ProfileFit) -> String {
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = String::new();
    writeln!(out, "alpha:      {}", join(&fit.alpha)).unwrap();
    writeln!(out, "beta:       {}", join(&fit.beta)).unwrap();
    writeln!(out, "m_tilde:    {}", fit.m_tilde).unwrap();
    writeln!(out, "k_star:     {}", fit.k_star).unwrap();
    writeln!(out, "objective:  {:.6e}", fit.objective_value).unwrap();
    writeln!(
        out,
        "status:     {} after {} iterations",
        if fit.converged { "converged" } else { "not converged" },
        fit.iterations
    )
    .unwrap();
    out
}

/// Evaluates a saved fit on new observations, one prediction per row.
pub fn run_predict(pred_args: &PredictArgs, verbose: u8) -> Result<()> {
    let text = std::fs::read_to_string(&pred_args.artifact)
        .map_err(|e| CliError::file(&pred_args.artifact, e))?;
    let artifact =
        FitArtifact::from_json(&text).map_err(|e| in_file(&pred_args.artifact, e))?;
    let fit = artifact.to_fit().map_err(|e| in_file(&pred_args.artifact, e))?;

    let table = tables::load_scalars(&pred_args.scalars, false)?;
    let mut preds = Vec::with_capacity(table.rows());
    if table.rows() > 0 {
        let sample: FunctionalSample = load_curves(&pred_args.curves, HeaderMode::Auto)
            .map_err(|e| in_file(&pred_args.curves, e))?;
        if sample.grid().points() != fit.grid.points() {
            return Err(CliError::file(
                &pred_args.curves,
                format!(
                    "curve grid ({} points on [{}, {}]) does not match the training grid \
                     ({} points on [{}, {}])",
                    sample.grid_len(),
                    sample.grid().min(),
                    sample.grid().max(),
                    fit.grid.len(),
                    fit.grid.min(),
                    fit.grid.max()
                ),
            ));
        }
        if sample.n() != table.rows() {
            return Err(CliError::Run(format!(
                "{} has {} observations but {} has {} curves",
                pred_args.scalars.display(),
                table.rows(),
                pred_args.curves.display(),
                sample.n()
            )));
        }
        for i in 0..sample.n() {
            let p = estimator::predict(&fit, sample.curve(i), table.w.row(i), table.z.row(i))
                .map_err(|e| CliError::Run(format!("observation {}: {e}", i + 1)))?;
            preds.push(p);
        }
    }
    tables::atomic_write(&pred_args.out, &tables::predictions_text(&preds))?;
    if verbose > 0 {
        eprintln!("evaluated the fit from {}", pred_args.artifact.display());
    }
    println!("wrote {} predictions to {}", preds.len(), pred_args.out.display());
    Ok(())
}

/// Default table path: the report path with a `.csv` extension.
fn default_table_path(out: &Path) -> PathBuf {
    let mut p = out.to_path_buf();
    p.set_extension("csv");
    if p == out {
        p.set_extension("replications.csv");
    }
    p
}

/// Runs the replicated study, writes the report and table, prints the
/// summary.
pub fn run_simulate(sim_args: &SimulateArgs, verbose: u8) -> Result<()> {
    let file = args::load_file_config(sim_args.config.as_deref())?;
    let spec = args::sim_spec(sim_args, &file)?;

    if let Some(dir) = &sim_args.export_data {
        export_replication(&spec, dir)?;
        if verbose > 0 {
            eprintln!("exported replication 1 data to {}", dir.display());
        }
    }

    let jobs = sim_args.jobs.or(file.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Run(format!("could not start the worker pool: {e}")))?;
    if verbose > 0 {
        eprintln!(
            "running {} x (n={}) replications of {} on {} worker(s)",
            spec.replications,
            spec.n,
            spec.model,
            pool.current_num_threads()
        );
    }
    let started = Instant::now();
    let report = pool
        .install(|| monte_carlo(&spec))
        .map_err(|e| CliError::Run(e.to_string()))?;
    let wall = started.elapsed();

    tables::atomic_write(
        &sim_args.out,
        &report.to_json().map_err(|e| CliError::Run(e.to_string()))?,
    )?;
    let table_path = sim_args
        .table
        .clone()
        .unwrap_or_else(|| default_table_path(&sim_args.out));
    tables::atomic_write(&table_path, &report.replication_table())?;

    println!("{}", report.summary());
    println!(
        "completed {} replications in {:.1}s",
        spec.replications,
        wall.as_secs_f64()
    );
    println!("wrote {} and {}", sim_args.out.display(), table_path.display());
    Ok(())
}

/// Writes replication 1's train and test draws as table files.
fn export_replication(spec: &SimSpec, dir: &Path) -> Result<()> {
    let (train, test) =
        replication_data(spec, 0).map_err(|e| CliError::Run(e.to_string()))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    tables::atomic_write(&dir.join("curves.csv"), &tables::curves_text(&train.curves))?;
    tables::atomic_write(
        &dir.join("scalars.csv"),
        &tables::scalars_text(Some(&train.y), &train.w, &train.z),
    )?;
    tables::atomic_write(&dir.join("new-curves.csv"), &tables::curves_text(&test.curves))?;
    tables::atomic_write(
        &dir.join("new-scalars.csv"),
        &tables::scalars_text(Some(&test.y), &test.w, &test.z),
    )?;
    Ok(())
}
