//! Depth-first branch-and-bound over per-sample cluster assignments.
//!
//! A node fixes the clusters of some samples. Its bound is the sum of the
//! per-cluster optimal losses on the fixed samples only, divided by `n`: free
//! samples add nonnegative loss and dropping samples can only lower each
//! cluster's minimum, so no completion does better. Leaves are evaluated
//! inside their parent, so at most `(K^n - 1)/(K - 1)` nodes are visited.

use std::time::{Duration, Instant};

use crate::assign::{abs_residuals, best_assignment, objective};
use crate::error::{Error, Result};
use crate::heuristic::{multistart, AmOptions};
use crate::regress::{check_supported, fit, fit_rows};
use crate::types::{CoefficientSet, Dataset, LossConfig, RegConstraint, SolveResult};

/// Called with `(labels, bound, incumbent)` at every node.
pub type NodeObserver<'a> = dyn FnMut(&[Option<usize>], f64, f64) + 'a;

/// Objectives at or below this are optimal outright (the objective is nonnegative).
pub const ZERO_OBJECTIVE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub time_limit: Duration,
    pub node_limit: u64,
    /// Starting incumbent; multistart alternating minimization when absent.
    pub incumbent: Option<SolveResult>,
    pub prune_tol: f64,
    /// Treat clusters as interchangeable when all norm bounds agree.
    pub symmetry_breaking: bool,
    pub heuristic: AmOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(600),
            node_limit: 50_000_000,
            incumbent: None,
            prune_tol: 1e-9,
            symmetry_breaking: true,
            heuristic: AmOptions {
                restarts: 8,
                ..AmOptions::default()
            },
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.time_limit.is_zero() || self.node_limit == 0 {
            return Err(Error::Invalid("time and node limits must be positive".into()));
        }
        if !(self.prune_tol.is_finite() && self.prune_tol >= 0.0) {
            return Err(Error::Invalid("prune tolerance must be finite and >= 0".into()));
        }
        self.heuristic.validate()
    }
}

pub fn branch_and_bound(
    ds: &Dataset,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    branch_and_bound_observed(ds, k, loss, reg, opts, &mut |_, _, _| {})
}

/// [`branch_and_bound`], calling `observer(labels, bound, incumbent)` at
/// every node.
pub fn branch_and_bound_observed(
    ds: &Dataset,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
    opts: &SolveOptions,
    observer: &mut NodeObserver<'_>,
) -> Result<SolveResult> {
    let started = Instant::now();
    if k == 0 {
        return Err(Error::Invalid("K must be at least 1".into()));
    }
    check_supported(loss, reg.kind())?;
    reg.validate(k, ds.d())?;
    opts.validate()?;
    let n = ds.n();

    if k == 1 {
        let f = fit(ds.x(), ds.y(), loss, reg.cluster(0))?;
        observer(&vec![None; n], 0.0, f.loss / n as f64);
        return finish(ds, loss, CoefficientSet::new(vec![f.beta])?, true, 1, started);
    }

    let incumbent = match &opts.incumbent {
        Some(r) => {
            if r.coefficients.k() != k || r.coefficients.dim() != ds.d() {
                return Err(Error::Dimension("incumbent does not match K and d".into()));
            }
            r.coefficients.clone()
        }
        None => multistart(ds, k, loss, reg, &opts.heuristic)?.coefficients,
    };
    let inc_value = objective(ds, &incumbent, &best_assignment(ds, &incumbent)?, loss)?;

    let mut search = Search {
        ds,
        k,
        loss,
        reg,
        opts,
        started,
        labels: vec![None; n],
        members: vec![Vec::new(); k],
        losses: vec![0.0; k],
        betas: incumbent.betas().to_vec(),
        residuals: abs_residuals(ds, &incumbent),
        inc_value,
        incumbent,
        nodes: 0,
        hit_limit: false,
        observer,
    };
    if search.inc_value > ZERO_OBJECTIVE {
        search.dfs(0.0)?;
    }
    let certified = !search.hit_limit;
    let nodes = search.nodes;
    if search.hit_limit {
        log::info!("branch-and-bound stopped at a limit after {nodes} nodes");
    }
    finish(ds, loss, search.incumbent, certified, nodes, started)
}

fn finish(
    ds: &Dataset,
    loss: LossConfig,
    coefficients: CoefficientSet,
    certified: bool,
    nodes: u64,
    started: Instant,
) -> Result<SolveResult> {
    let assignment = best_assignment(ds, &coefficients)?;
    let objective = objective(ds, &coefficients, &assignment, loss)?;
    Ok(SolveResult {
        coefficients,
        assignment,
        objective,
        certified_optimal: certified,
        nodes_explored: nodes,
        wall_time: started.elapsed(),
    })
}

struct Search<'a, 'o> {
    ds: &'a Dataset,
    k: usize,
    loss: LossConfig,
    reg: &'a RegConstraint,
    opts: &'a SolveOptions,
    started: Instant,
    labels: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
    /// Unnormalized per-cluster loss on the fixed samples.
    losses: Vec<f64>,
    /// Per-cluster fits at the current node; the incumbent's for empty clusters.
    betas: Vec<Vec<f64>>,
    /// `|y_i - x_i'β_k|` under the incumbent, row-major `n x K`.
    residuals: Vec<f64>,
    inc_value: f64,
    incumbent: CoefficientSet,
    nodes: u64,
    hit_limit: bool,
    observer: &'o mut NodeObserver<'o>,
}

impl Search<'_, '_> {
    fn n(&self) -> f64 {
        self.ds.n() as f64
    }

    fn done(&self) -> bool {
        self.hit_limit || self.inc_value <= ZERO_OBJECTIVE
    }

    fn offer(&mut self, betas: Vec<Vec<f64>>) -> Result<()> {
        let coeffs = CoefficientSet::new(betas)?;
        let value = objective(self.ds, &coeffs, &best_assignment(self.ds, &coeffs)?, self.loss)?;
        if value < self.inc_value {
            self.inc_value = value;
            self.residuals = abs_residuals(self.ds, &coeffs);
            self.incumbent = coeffs;
        }
        Ok(())
    }

    fn node_coefficients(&self) -> Vec<Vec<f64>> {
        (0..self.k)
            .map(|c| {
                if self.members[c].is_empty() {
                    self.incumbent.beta(c).to_vec()
                } else {
                    self.betas[c].clone()
                }
            })
            .collect()
    }

    /// The free sample whose best cluster under the incumbent is clearest.
    fn branch_sample(&self) -> Option<usize> {
        let k = self.k;
        let mut pick: Option<(usize, f64)> = None;
        for (i, l) in self.labels.iter().enumerate() {
            if l.is_some() {
                continue;
            }
            let r = &self.residuals[i * k..(i + 1) * k];
            let (mut b1, mut b2) = (f64::INFINITY, f64::INFINITY);
            for &v in r {
                if v < b1 {
                    b2 = b1;
                    b1 = v;
                } else if v < b2 {
                    b2 = v;
                }
            }
            let gap = b2 - b1;
            if pick.is_none_or(|(_, g)| gap > g) {
                pick = Some((i, gap));
            }
        }
        pick.map(|p| p.0)
    }

    fn dfs(&mut self, bound: f64) -> Result<()> {
        if self.done() {
            return Ok(());
        }
        if self.nodes >= self.opts.node_limit || self.started.elapsed() >= self.opts.time_limit {
            self.hit_limit = true;
            return Ok(());
        }
        self.nodes += 1;
        (self.observer)(&self.labels, bound, self.inc_value);

        self.offer(self.node_coefficients())?;
        if self.done() || bound >= self.inc_value - self.opts.prune_tol {
            return Ok(());
        }

        let Some(s) = self.branch_sample() else { return Ok(()) };
        let free_after = self.labels.iter().filter(|l| l.is_none()).count() - 1;
        let mut clusters: Vec<usize> = (0..self.k).collect();
        if self.opts.symmetry_breaking && self.reg.is_symmetric() {
            // interchangeable clusters: open at most the lowest unused one
            if let Some(first_empty) = (0..self.k).find(|&c| self.members[c].is_empty()) {
                clusters.retain(|&c| !self.members[c].is_empty() || c == first_empty);
            }
        }
        let r = &self.residuals[s * self.k..(s + 1) * self.k];
        clusters.sort_by(|&a, &b| r[a].total_cmp(&r[b]).then(a.cmp(&b)));

        for c in clusters {
            if self.done() {
                break;
            }
            let mut idx = self.members[c].clone();
            idx.push(s);
            let f = fit_rows(self.ds, &idx, None, self.loss, self.reg.cluster(c))?;
            let child = bound + (f.loss - self.losses[c]) / self.n();
            if free_after == 0 {
                if child < self.inc_value {
                    let mut betas = self.node_coefficients();
                    betas[c] = f.beta;
                    self.offer(betas)?;
                }
                continue;
            }
            if child >= self.inc_value - self.opts.prune_tol {
                continue;
            }
            let saved = (self.losses[c], std::mem::replace(&mut self.betas[c], f.beta));
            self.losses[c] = f.loss;
            self.members[c].push(s);
            self.labels[s] = Some(c);
            self.dfs(child)?;
            self.labels[s] = None;
            self.members[c].pop();
            self.losses[c] = saved.0;
            self.betas[c] = saved.1;
        }
        Ok(())
    }
}
