use std::time::Duration;

use mlrmip::{
    branch_and_bound, brute_force, multistart, AmOptions, Dataset, LossConfig, RegConstraint, SolveOptions, SolveResult,
};

use crate::config::Solver;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub solver: Solver,
    pub time_limit: Duration,
    /// Alternating-minimization restarts; the solver's own default when absent.
    pub restarts: Option<usize>,
    pub seed: u64,
}

impl SolverOptions {
    pub fn new(solver: Solver) -> Self {
        Self {
            solver,
            time_limit: Duration::from_secs(600),
            restarts: None,
            seed: 0,
        }
    }
}

pub fn run_solver(
    ds: &Dataset,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    opts: &SolverOptions,
) -> Result<SolveResult, CliError> {
    let result = match opts.solver {
        Solver::Brute => brute_force(ds, k, loss, reg)?,
        Solver::Am => {
            let defaults = AmOptions::default();
            let am = AmOptions {
                restarts: opts.restarts.unwrap_or(defaults.restarts),
                seed: opts.seed,
                ..defaults
            };
            multistart(ds, k, loss, reg, &am)?
        }
        Solver::Bnb => {
            let defaults = SolveOptions::default();
            let heuristic = AmOptions {
                restarts: opts.restarts.unwrap_or(defaults.heuristic.restarts),
                seed: opts.seed,
                ..defaults.heuristic.clone()
            };
            let so = SolveOptions {
                time_limit: opts.time_limit,
                heuristic,
                ..defaults
            };
            branch_and_bound(ds, k, loss, reg, &so)?
        }
    };
    Ok(result)
}
