use std::time::Instant;

use crate::assign::{objective, weighted_objective};
use crate::error::{Error, Result};
use crate::regress::{check_supported, fit_rows};
use crate::types::{Assignment, CoefficientSet, Dataset, LossConfig, RegConstraint, SolveResult};

/// Largest `K^n` accepted by [`brute_force`].
pub const BRUTE_FORCE_GUARD: u64 = 1 << 20;

/// Exact optimum by enumerating all `K^n` label vectors in lexicographic
/// order and fitting every cluster. Ties keep the first (smallest) vector.
pub fn brute_force(ds: &Dataset, k: usize, loss: LossConfig, reg: &RegConstraint) -> Result<SolveResult> {
    enumerate(ds, None, k, loss, reg)
}

/// [`brute_force`] where sample `i` counts `weights[i]` times; the objective
/// is the weighted mean loss.
pub fn brute_force_weighted(
    ds: &Dataset,
    weights: &[f64],
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
) -> Result<SolveResult> {
    if weights.len() != ds.n() {
        return Err(Error::Dimension(format!(
            "{} weights for {} samples",
            weights.len(),
            ds.n()
        )));
    }
    enumerate(ds, Some(weights), k, loss, reg)
}

fn enumerate(
    ds: &Dataset,
    weights: Option<&[f64]>,
    k: usize,
    loss: LossConfig,
    reg: &RegConstraint,
) -> Result<SolveResult> {
    let started = Instant::now();
    if k == 0 {
        return Err(Error::Invalid("K must be at least 1".into()));
    }
    check_supported(loss, reg.kind())?;
    reg.validate(k, ds.d())?;
    let n = ds.n();
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| (k as u64).checked_pow(n))
        .filter(|&t| t <= BRUTE_FORCE_GUARD)
        .ok_or_else(|| Error::Guard(format!("K^n = {k}^{n} exceeds 2^20")))?;

    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>, Vec<Vec<f64>>)> = None;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for _ in 0..total {
        members.iter_mut().for_each(Vec::clear);
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        let mut value = 0.0;
        let mut betas = Vec::with_capacity(k);
        for (kk, idx) in members.iter().enumerate() {
            let f = fit_rows(ds, idx, weights, loss, reg.cluster(kk))?;
            value += f.loss;
            betas.push(f.beta);
        }
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, labels.clone(), betas));
        }
        // odometer, last sample fastest
        for l in labels.iter_mut().rev() {
            *l += 1;
            if *l < k {
                break;
            }
            *l = 0;
        }
    }

    let (_, labels, betas) = best.expect("at least one assignment");
    let coefficients = CoefficientSet::new(betas)?;
    let assignment = Assignment::new(labels, k)?;
    let objective = match weights {
        Some(w) => weighted_objective(ds, w, &coefficients, &assignment, loss)?,
        None => objective(ds, &coefficients, &assignment, loss)?,
    };
    Ok(SolveResult {
        coefficients,
        assignment,
        objective,
        certified_optimal: true,
        nodes_explored: total,
        wall_time: started.elapsed(),
    })
}
