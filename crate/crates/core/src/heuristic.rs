//! Alternating minimization: assign every sample to its best-fitting cluster,
//! refit each cluster on its samples, repeat. Multistart runs independent
//! seeded restarts in parallel and keeps the best.

use std::time::Instant;

use rayon::prelude::*;

use crate::assign::{abs_residuals, best_assignment, objective, weighted_objective};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::regress::{check_supported, fit_rows};
use crate::synth::Stream;
use crate::types::{Assignment, CoefficientSet, Dataset, LossConfig, RegConstraint, SolveResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Each coefficient uniform on `[-r, r]`, `r = max|y_i| / max(1, min‖x_i‖₂)`.
    RandomCoefficients,
    /// Uniform random labels, then one refit.
    RandomAssignment,
    /// Start from these coefficients. Under multistart only restart 0 uses
    /// them; later restarts draw random coefficients.
    Given(CoefficientSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmOptions {
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: Init,
}

impl Default for AmOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            restarts: 32,
            seed: 0,
            init: Init::RandomCoefficients,
        }
    }
}

impl AmOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::Invalid("max_iters and restarts must be positive".into()));
        }
        Ok(())
    }
}

/// One alternating-minimization run together with its objective trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AmRun {
    pub result: SolveResult,
    /// Objective after each accepted refit.
    pub trace: Vec<f64>,
    pub converged: bool,
}

struct Problem<'a> {
    ds: &'a Dataset,
    weights: Option<&'a [f64]>,
    k: usize,
    loss: LossConfig,
    reg: &'a RegConstraint,
}

impl Problem<'_> {
    fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Invalid("K must be at least 1".into()));
        }
        check_supported(self.loss, self.reg.kind())?;
        self.reg.validate(self.k, self.ds.d())?;
        if let Some(w) = self.weights {
            if w.len() != self.ds.n() {
                return Err(Error::Dimension(format!(
                    "{} weights for {} samples",
                    w.len(),
                    self.ds.n()
                )));
            }
        }
        Ok(())
    }

    fn objective(&self, coeffs: &CoefficientSet, assign: &Assignment) -> Result<f64> {
        match self.weights {
            Some(w) => weighted_objective(self.ds, w, coeffs, assign, self.loss),
            None => objective(self.ds, coeffs, assign, self.loss),
        }
    }

    /// Refits every non-empty cluster; empty clusters keep `prev`.
    fn refit(&self, labels: &[usize], prev: &CoefficientSet) -> Result<CoefficientSet> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        let mut betas = prev.betas().to_vec();
        for (k, idx) in members.iter().enumerate() {
            if !idx.is_empty() {
                betas[k] = fit_rows(self.ds, idx, self.weights, self.loss, self.reg.cluster(k))?.beta;
            }
        }
        CoefficientSet::new(betas)
    }

    /// Moves the worst-fit sample of a multi-member cluster into each empty one.
    fn repair(&self, labels: &mut [usize], coeffs: &CoefficientSet) {
        let res = abs_residuals(self.ds, coeffs);
        let mut sizes = vec![0usize; self.k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        for empty in 0..self.k {
            if sizes[empty] > 0 {
                continue;
            }
            let worst = (0..labels.len()).filter(|&i| sizes[labels[i]] > 1).max_by(|&a, &b| {
                let ra = res[a * self.k + labels[a]];
                let rb = res[b * self.k + labels[b]];
                ra.total_cmp(&rb).then(b.cmp(&a))
            });
            let Some(i) = worst else { return };
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] = 1;
        }
    }

    fn random_coefficients(&self, rng: &mut Stream) -> CoefficientSet {
        let ymax = self.ds.y().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let xmin = self.ds.x().iter_rows().map(norm2).fold(f64::INFINITY, f64::min);
        let r = ymax / xmin.max(1.0);
        let betas = (0..self.k)
            .map(|_| (0..self.ds.d()).map(|_| rng.uniform(-r, r)).collect())
            .collect();
        CoefficientSet::new(betas).expect("finite draws")
    }

    fn start(&self, init: &Init, seed: u64) -> Result<CoefficientSet> {
        let mut rng = Stream::new(seed);
        match init {
            Init::RandomCoefficients => Ok(self.random_coefficients(&mut rng)),
            Init::RandomAssignment => {
                let mut labels: Vec<usize> = (0..self.ds.n()).map(|_| rng.below(self.k as u64) as usize).collect();
                let zero = CoefficientSet::zeros(self.k, self.ds.d());
                self.repair(&mut labels, &zero);
                self.refit(&labels, &zero)
            }
            Init::Given(c) => {
                if c.k() != self.k || c.dim() != self.ds.d() {
                    return Err(Error::Dimension(format!(
                        "initial coefficients are {}x{}, expected {}x{}",
                        c.k(),
                        c.dim(),
                        self.k,
                        self.ds.d()
                    )));
                }
                Ok(c.clone())
            }
        }
    }

    fn run(&self, mut coeffs: CoefficientSet, max_iters: usize) -> Result<AmRun> {
        let started = Instant::now();
        let mut trace = Vec::new();
        let mut labels: Option<Vec<usize>> = None;
        let mut converged = false;
        for _ in 0..max_iters {
            let mut next = best_assignment(self.ds, &coeffs)?.labels().to_vec();
            self.repair(&mut next, &coeffs);
            if labels.as_ref() == Some(&next) {
                converged = true;
                break;
            }
            let refit = self.refit(&next, &coeffs)?;
            let obj = self.objective(&refit, &Assignment::from_labels(next.clone()))?;
            if trace.last().is_some_and(|&prev| obj > prev) {
                // an empty-cluster repair made things worse; keep the last state
                converged = true;
                break;
            }
            trace.push(obj);
            coeffs = refit;
            labels = Some(next);
        }
        let assignment = best_assignment(self.ds, &coeffs)?;
        let objective = self.objective(&coeffs, &assignment)?;
        Ok(AmRun {
            result: SolveResult {
                coefficients: coeffs,
                assignment,
                objective,
                certified_optimal: false,
                nodes_explored: 0,
                wall_time: started.elapsed(),
            },
            trace,
            converged,
        })
    }

    fn multistart(&self, opts: &AmOptions) -> Result<SolveResult> {
        let started = Instant::now();
        let runs: Vec<SolveResult> = (0..opts.restarts)
            .into_par_iter()
            .map(|r| {
                let init = match (&opts.init, r) {
                    (Init::Given(_), r) if r > 0 => &Init::RandomCoefficients,
                    (init, _) => init,
                };
                let seed = opts.seed.wrapping_add(r as u64);
                self.run(self.start(init, seed)?, opts.max_iters).map(|run| run.result)
            })
            .collect::<Result<_>>()?;
        let mut best = runs
            .into_iter()
            .reduce(|a, b| if b.objective < a.objective { b } else { a })
            .expect("restarts >= 1");
        best.wall_time = started.elapsed();
        Ok(best)
    }
}

/// Runs alternating minimization from `init`. The result is never certified.
pub fn alternate_minimize(
    ds: &Dataset,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    init: &CoefficientSet,
    opts: &AmOptions,
) -> Result<SolveResult> {
    alternate_minimize_traced(ds, k, loss, reg, init, opts).map(|run| run.result)
}

/// [`alternate_minimize`], also returning the per-iteration objectives.
pub fn alternate_minimize_traced(
    ds: &Dataset,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    init: &CoefficientSet,
    opts: &AmOptions,
) -> Result<AmRun> {
    opts.validate()?;
    let problem = Problem {
        ds,
        weights: None,
        k,
        loss,
        reg,
    };
    problem.check()?;
    problem.run(problem.start(&Init::Given(init.clone()), opts.seed)?, opts.max_iters)
}

/// Best of `opts.restarts` runs; restart `r` is seeded with `opts.seed + r`.
pub fn multistart(
    ds: &Dataset,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    opts: &AmOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let problem = Problem {
        ds,
        weights: None,
        k,
        loss,
        reg,
    };
    problem.check()?;
    problem.multistart(opts)
}

/// [`multistart`] on a dataset whose samples carry multiplicities; the
/// objective is the weighted mean loss.
pub fn multistart_weighted(
    ds: &Dataset,
    weights: &[f64],
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    opts: &AmOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let problem = Problem {
        ds,
        weights: Some(weights),
        k,
        loss,
        reg,
    };
    problem.check()?;
    problem.multistart(opts)
}

/// Initial coefficients for restart seed `seed`, as drawn by [`multistart`].
pub fn random_init(ds: &Dataset, k: usize, seed: u64) -> CoefficientSet {
    let reg = RegConstraint::none();
    let problem = Problem {
        ds,
        weights: None,
        k,
        loss: LossConfig::Squared,
        reg: &reg,
    };
    problem.random_coefficients(&mut Stream::new(seed))
}
