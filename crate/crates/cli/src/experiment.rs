//! Recovery sweeps: for every sample size and trial, generate, solve and
//! compare with the truth.

use std::io::{Read, Write};

use mlrmip::numfmt::fmt17;
use mlrmip::{generate, match_permutation, GeneratorSpec};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::solve::{run_solver, SolverOptions};
use crate::svg::{LinePlot, Series};
use crate::CliError;

pub const EXPERIMENT_HEADER: &str = "n,trial,cluster,error,objective,recovered,clusters_match";

/// One true cluster in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub n: usize,
    pub trial: usize,
    /// Index of the true cluster.
    pub cluster: usize,
    /// Distance from the true coefficients to the estimate matched to them.
    pub error: f64,
    pub objective: f64,
    pub recovered: bool,
    /// The estimated partition equals the true one under the matching.
    pub clusters_match: bool,
}

/// Rows sorted by `(n, trial, cluster)`; trials run in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, CliError> {
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let per_job: Vec<Vec<ExperimentRow>> = jobs
        .par_iter()
        .map(|&(n, trial)| run_trial(cfg, n, trial))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<ExperimentRow> = per_job.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.n, r.trial, r.cluster));
    Ok(rows)
}

fn run_trial(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<Vec<ExperimentRow>, CliError> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let ds = generate(&GeneratorSpec {
        n,
        seed,
        ..cfg.generator.clone()
    })?;
    let truth = ds.truth().expect("generated data carries its truth");
    let true_coeffs = truth.coefficients.as_ref().expect("generated truth has coefficients");
    let k = true_coeffs.k();
    let opts = SolverOptions {
        solver: cfg.solver,
        time_limit: cfg.time_limit,
        restarts: Some(cfg.restarts),
        seed,
    };
    let result = run_solver(&ds, k, cfg.loss, &cfg.reg, &opts)?;
    let m = match_permutation(&result.coefficients, true_coeffs)?;
    let clusters_match = m.partition_matches(&result.assignment, &truth.labels);
    Ok(m.errors_by_truth()
        .into_iter()
        .enumerate()
        .map(|(cluster, error)| ExperimentRow {
            n,
            trial,
            cluster,
            error,
            objective: result.objective,
            recovered: error <= cfg.tolerance,
            clusters_match,
        })
        .collect())
}

pub fn write_experiment_csv_to<W: Write>(rows: &[ExperimentRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(EXPERIMENT_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.trial.to_string(),
            r.cluster.to_string(),
            fmt17(r.error),
            fmt17(r.objective),
            r.recovered.to_string(),
            r.clusters_match.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_experiment_csv_from<R: Read>(input: R) -> Result<Vec<ExperimentRow>, CliError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != EXPERIMENT_HEADER {
        return Err(CliError::Usage(format!(
            "experiment CSV header must be `{EXPERIMENT_HEADER}`"
        )));
    }
    let bad = |line: u64, what: &str| CliError::Usage(format!("experiment CSV line {line}: bad {what}"));
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        rows.push(ExperimentRow {
            n: field(0).parse().map_err(|_| bad(line, "n"))?,
            trial: field(1).parse().map_err(|_| bad(line, "trial"))?,
            cluster: field(2).parse().map_err(|_| bad(line, "cluster"))?,
            error: field(3).parse().map_err(|_| bad(line, "error"))?,
            objective: field(4).parse().map_err(|_| bad(line, "objective"))?,
            recovered: field(5).parse().map_err(|_| bad(line, "recovered"))?,
            clusters_match: field(6).parse().map_err(|_| bad(line, "clusters_match"))?,
        });
    }
    Ok(rows)
}

/// Mean matched error against `n`, one line per true cluster, log-log.
pub fn experiment_plot(rows: &[ExperimentRow]) -> LinePlot {
    let k = rows.iter().map(|r| r.cluster + 1).max().unwrap_or(0);
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.dedup();
    let series = (0..k)
        .map(|c| {
            let points = ns
                .iter()
                .map(|&n| {
                    let errs: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.n == n && r.cluster == c)
                        .map(|r| r.error)
                        .collect();
                    (n as f64, errs.iter().sum::<f64>() / errs.len() as f64)
                })
                .collect();
            Series {
                name: format!("cluster {c}"),
                points,
            }
        })
        .collect();
    LinePlot {
        title: "coefficient error vs sample size".into(),
        x_label: "n".into(),
        y_label: "mean matched error".into(),
        log_x: true,
        log_y: true,
        series,
    }
}
