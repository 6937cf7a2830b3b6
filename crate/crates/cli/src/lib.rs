//! Command-line front end for `mlrmip`.
//!
//! Every subcommand writes its report to the given writer and files to the
//! paths it is told about; nothing depends on the clock, so repeated runs
//! produce identical bytes.

pub mod config;
pub mod counterexample;
pub mod experiment;
pub mod solve;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use mlrmip::diagnostics::write_rate_csv_to;
use mlrmip::{
    build_model, export_lp, generate, rate_slope, rate_trace, read_csv, write_csv, CounterexampleSpec, Dataset,
    LossConfig,
};

use crate::config::{reg_from_strings, Config, Solver};
use crate::experiment::{experiment_plot, run_experiment, write_experiment_csv_to};
use crate::solve::{run_solver, SolverOptions};
use crate::svg::{LinePlot, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mlrmip::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("solver stopped at a limit without an optimality certificate")]
    Uncertified,
}

impl CliError {
    /// 2 for a missing certificate under `--require-certificate`, else 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Uncertified => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mlrmip",
    version,
    about = "Mixed linear regression by big-M mixed-integer programming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset from a config's [generator] section.
    Generate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a K-cluster mixture to a dataset.
    Solve(SolveArgs),
    /// Write the big-M model of a dataset in LP format.
    ExportLp(ExportArgs),
    /// Run a recovery sweep from a config's [generator] and [experiment] sections.
    Experiment {
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Solve the symmetric two-cluster counterexample exactly.
    Counterexample(CounterexampleArgs),
    /// Trace single-cluster estimation error against the rate bounds.
    Diagnose {
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    p: u8,
    /// none, l0, l1 or l2.
    #[arg(long)]
    q: Option<String>,
    /// One bound for all clusters or a comma list, one per cluster.
    #[arg(long)]
    bound: Option<String>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// bnb, brute or am.
    #[arg(long, default_value = "bnb")]
    solver: String,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    restarts: Option<usize>,
    /// Exit with status 2 when the solve ends without an optimality certificate.
    #[arg(long)]
    require_certificate: bool,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    big_m: Option<f64>,
    /// Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Both losses when absent.
    #[arg(long)]
    p: Option<u8>,
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{}", e.render())?;
                return Ok(());
            }
            return Err(CliError::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    match cli.command {
        Command::Generate { config, out: path } => cmd_generate(&config, &path, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::ExportLp(a) => cmd_export_lp(&a, out),
        Command::Experiment { config, output_dir } => cmd_experiment(&config, output_dir, out),
        Command::Counterexample(a) => cmd_counterexample(&a, out),
        Command::Diagnose { config, output_dir } => cmd_diagnose(&config, output_dir, out),
    }
}

fn load_data(path: &Path) -> Result<Dataset, CliError> {
    read_csv(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn loss_from(p: u8) -> Result<LossConfig, CliError> {
    LossConfig::from_p(p).map_err(|e| CliError::Usage(e.to_string()))
}

fn model_inputs(m: &ModelArgs) -> Result<(Dataset, LossConfig, mlrmip::RegConstraint), CliError> {
    if m.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let ds = load_data(&m.data)?;
    let loss = loss_from(m.p)?;
    let reg = reg_from_strings(m.q.as_deref(), m.bound.as_deref(), m.k).map_err(CliError::Usage)?;
    mlrmip::regress::check_supported(loss, reg.kind()).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((ds, loss, reg))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_generate(config: &Path, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = Config::load(config)?.generate_config()?;
    let ds = generate(&spec)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_csv(&ds, path)?;
    writeln!(
        out,
        "wrote {} samples (d = {}, K = {}) to {}",
        ds.n(),
        ds.d(),
        spec.k(),
        path.display()
    )?;
    Ok(())
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (ds, loss, reg) = model_inputs(&a.model)?;
    let solver: Solver = a.solver.parse()?;
    let time_limit = Duration::try_from_secs_f64(a.time_limit)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| CliError::Usage("--time-limit must be a positive number of seconds".into()))?;
    let opts = SolverOptions {
        solver,
        time_limit,
        restarts: a.restarts,
        seed: a.seed,
    };
    let r = run_solver(&ds, a.model.k, loss, &reg, &opts)?;
    log::info!("solve finished in {:?}", r.wall_time);

    let mut doc = serde_json::Map::new();
    doc.insert("solver".into(), solver.name().into());
    doc.insert("n".into(), ds.n().into());
    doc.insert("d".into(), ds.d().into());
    doc.insert("k".into(), a.model.k.into());
    doc.insert("p".into(), loss.p().into());
    doc.insert("q".into(), reg.kind().name().into());
    doc.insert("bounds".into(), reg.bounds().to_vec().into());
    doc.insert("objective".into(), r.objective.into());
    doc.insert("certified".into(), r.certified_optimal.into());
    doc.insert("nodes".into(), r.nodes_explored.into());
    for (k, b) in r.coefficients.betas().iter().enumerate() {
        doc.insert(format!("beta_{k}"), b.clone().into());
    }
    doc.insert("labels".into(), r.assignment.labels().to_vec().into());
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("finite values serialize");
    writeln!(out, "{text}")?;

    if a.require_certificate && !r.certified_optimal {
        return Err(CliError::Uncertified);
    }
    Ok(())
}

fn cmd_export_lp(a: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (ds, loss, reg) = model_inputs(&a.model)?;
    let model = build_model(&ds, a.model.k, loss, &reg, a.big_m)?;
    let text = export_lp(&model);
    match &a.out {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_experiment(config: &Path, output_dir: Option<PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = Config::load(config)?.experiment()?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let rows = run_experiment(&cfg)?;
    let mut csv = Vec::new();
    write_experiment_csv_to(&rows, &mut csv)?;
    let csv_path = cfg.output_dir.join("experiment.csv");
    let svg_path = cfg.output_dir.join("experiment.svg");
    write_file(&csv_path, &csv)?;
    write_file(&svg_path, experiment_plot(&rows).render().as_bytes())?;

    for &n in &cfg.n_grid {
        let trials: Vec<usize> = (0..cfg.trials)
            .filter(|&t| rows.iter().filter(|r| r.n == n && r.trial == t).all(|r| r.recovered))
            .collect();
        writeln!(
            out,
            "n = {n}: {}/{} trials recovered every cluster within {}",
            trials.len(),
            cfg.trials,
            cfg.tolerance
        )?;
    }
    writeln!(out, "wrote {} and {}", csv_path.display(), svg_path.display())?;
    Ok(())
}

fn cmd_counterexample(a: &CounterexampleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let losses = match a.p {
        Some(p) => vec![loss_from(p)?],
        None => vec![LossConfig::Abs, LossConfig::Squared],
    };
    if a.restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    let spec = CounterexampleSpec {
        n: a.n,
        delta: a.delta,
        sigma: a.sigma,
        seed: a.seed,
    };
    let report = counterexample::counterexample_report(&spec, &losses, a.restarts)?;
    write!(out, "{}", report.render())?;
    Ok(())
}

fn cmd_diagnose(config: &Path, output_dir: Option<PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = Config::load(config)?.diagnose()?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let ds = generate(&cfg.generator)?;
    let rows = rate_trace(&ds, &cfg.checkpoints, cfg.loss, cfg.reg, cfg.delta_slack)?;
    let mut csv = Vec::new();
    write_rate_csv_to(&rows, &mut csv)?;
    let csv_path = cfg.output_dir.join("rate.csv");
    let svg_path = cfg.output_dir.join("rate.svg");
    write_file(&csv_path, &csv)?;

    let curve = |name: &str, f: &dyn Fn(&mlrmip::RateRow) -> Option<f64>| Series {
        name: name.into(),
        points: rows.iter().filter_map(|r| Some((r.n as f64, f(r)?))).collect(),
    };
    let plot = LinePlot {
        title: "estimation error and rate bound shapes".into(),
        x_label: "n".into(),
        y_label: "value (bounds with constant 1)".into(),
        log_x: true,
        log_y: true,
        series: vec![
            curve("error", &|r| Some(r.error)),
            curve("strong consistency", &|r| r.bound_thm2),
            curve("sharpened", &|r| r.bound_thm3),
            curve("classical", &|r| r.bound_classical),
        ],
    };
    write_file(&svg_path, plot.render().as_bytes())?;

    match rate_slope(&rows) {
        Ok(s) => writeln!(out, "log-log error slope = {s:.4}")?,
        Err(e) => writeln!(out, "log-log error slope unavailable: {e}")?,
    }
    writeln!(out, "wrote {} and {}", csv_path.display(), svg_path.display())?;
    Ok(())
}
