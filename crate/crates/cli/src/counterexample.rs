//! Two symmetric clusters whose exact optimum sits away from the truth.
//!
//! The data take four distinct values, so the problem collapses to a
//! weighted four-point instance that enumeration solves exactly. Duplicated
//! samples always share a best cluster for fixed coefficients, so the
//! collapsed optimum is the optimum of the full data.

use std::fmt::Write;

use mlrmip::heuristic::multistart;
use mlrmip::milp::brute_force_weighted;
use mlrmip::numfmt::fmt17;
use mlrmip::synth::collapse_duplicates;
use mlrmip::{
    best_assignment, counterexample, match_permutation, objective, AmOptions, CoefficientSet, CounterexampleSpec,
    LossConfig, RegConstraint,
};

use crate::CliError;

/// Largest matched error still counted as recovery.
pub const RECOVERY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub loss: LossConfig,
    /// Truth coefficients with the true labels.
    pub truth_objective: f64,
    /// Truth coefficients with every sample on its best cluster.
    pub truth_best_objective: f64,
    /// Exact optimum of the collapsed instance.
    pub optimal_objective: f64,
    pub optimal_coefficients: CoefficientSet,
    /// Matched errors of the exact optimum, by true cluster.
    pub optimal_errors: Vec<f64>,
    pub multistart_objective: f64,
    pub multistart_errors: Vec<f64>,
}

impl LossReport {
    pub fn margin(&self) -> f64 {
        self.truth_objective - self.optimal_objective
    }

    pub fn min_error(&self) -> f64 {
        self.optimal_errors
            .iter()
            .chain(&self.multistart_errors)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn recovered(&self) -> bool {
        !(self.margin() > 0.0 && self.min_error() > RECOVERY_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub spec: CounterexampleSpec,
    pub restarts: usize,
    pub losses: Vec<LossReport>,
}

impl Report {
    pub fn recovered(&self) -> bool {
        self.losses.iter().any(LossReport::recovered)
    }

    pub fn verdict(&self) -> &'static str {
        if self.recovered() {
            "ground truth recovered"
        } else {
            "ground truth NOT recovered"
        }
    }

    pub fn render(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "counterexample: n = {}, delta = {}, sigma = {}, seed = {}, restarts = {}",
            s.n,
            fmt17(s.delta),
            fmt17(s.sigma),
            s.seed,
            self.restarts
        );
        for r in &self.losses {
            let _ = writeln!(out, "p = {}", r.loss.p());
            let _ = writeln!(
                out,
                "  truth objective (true labels)       = {}",
                fmt17(r.truth_objective)
            );
            let _ = writeln!(
                out,
                "  truth objective (best assignment)   = {}",
                fmt17(r.truth_best_objective)
            );
            let _ = writeln!(
                out,
                "  optimal objective (enumeration)     = {}",
                fmt17(r.optimal_objective)
            );
            let _ = writeln!(
                out,
                "  multistart objective                = {}",
                fmt17(r.multistart_objective)
            );
            let _ = writeln!(out, "  margin (truth - optimal)            = {}", fmt17(r.margin()));
            for (k, b) in r.optimal_coefficients.betas().iter().enumerate() {
                let b: Vec<String> = b.iter().map(|&v| fmt17(v)).collect();
                let _ = writeln!(out, "  optimal beta_{k}                      = {}", b.join(", "));
            }
            let e: Vec<String> = r.optimal_errors.iter().map(|&v| fmt17(v)).collect();
            let _ = writeln!(out, "  matched errors (optimal)            = {}", e.join(", "));
            let e: Vec<String> = r.multistart_errors.iter().map(|&v| fmt17(v)).collect();
            let _ = writeln!(out, "  matched errors (multistart)         = {}", e.join(", "));
        }
        let _ = writeln!(out, "verdict: {}", self.verdict());
        out
    }
}

pub fn counterexample_report(
    spec: &CounterexampleSpec,
    losses: &[LossConfig],
    restarts: usize,
) -> Result<Report, CliError> {
    let ds = counterexample(spec)?;
    let truth = ds.truth().expect("counterexample carries its truth");
    let true_coeffs = truth
        .coefficients
        .clone()
        .expect("counterexample truth has coefficients");
    let true_labels = mlrmip::Assignment::new(truth.labels.clone(), 2)?;
    let (support, weights) = collapse_duplicates(&ds);
    let none = RegConstraint::none();

    let mut out = Vec::with_capacity(losses.len());
    for &loss in losses {
        let exact = brute_force_weighted(&support, &weights, 2, loss, &none)?;
        let am = multistart(
            &ds,
            2,
            loss,
            &none,
            &AmOptions {
                restarts,
                seed: spec.seed,
                ..AmOptions::default()
            },
        )?;
        let truth_best = best_assignment(&ds, &true_coeffs)?;
        out.push(LossReport {
            loss,
            truth_objective: objective(&ds, &true_coeffs, &true_labels, loss)?,
            truth_best_objective: objective(&ds, &true_coeffs, &truth_best, loss)?,
            optimal_objective: exact.objective,
            optimal_errors: match_permutation(&exact.coefficients, &true_coeffs)?.errors_by_truth(),
            optimal_coefficients: exact.coefficients,
            multistart_objective: am.objective,
            multistart_errors: match_permutation(&am.coefficients, &true_coeffs)?.errors_by_truth(),
        });
    }
    Ok(Report {
        spec: *spec,
        restarts,
        losses: out,
    })
}
