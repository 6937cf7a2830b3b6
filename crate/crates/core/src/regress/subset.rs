use crate::error::{Error, Result};
use crate::linalg::{dot, solve_ls, Matrix};

/// Largest `C(d, d₀)` accepted by the support enumeration.
pub const SUBSET_GUARD: u64 = 100_000;

fn binomial(n: usize, k: usize) -> u64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

/// Least squares subject to at most `max_support` nonzero coefficients, by
/// enumerating every support of size `<= max_support` in lexicographic order.
/// Strictly better supports replace earlier ones, so smaller supports win ties.
pub fn best_subset(x: &Matrix, y: &[f64], max_support: usize) -> Result<(Vec<f64>, bool, usize)> {
    let d = x.cols();
    let s_max = max_support.min(d);
    let count = binomial(d, s_max);
    if count > SUBSET_GUARD {
        return Err(Error::Guard(format!(
            "C({d}, {s_max}) = {count} supports exceeds {SUBSET_GUARD}"
        )));
    }

    let sse = |beta: &[f64]| -> f64 { x.iter_rows().zip(y).map(|(r, &yi)| (yi - dot(r, beta)).powi(2)).sum() };

    let mut best_beta = vec![0.0; d];
    let mut best_loss = sse(&best_beta);
    let mut evaluated = 1;
    for size in 1..=s_max {
        let mut support: Vec<usize> = (0..size).collect();
        loop {
            let sub = solve_ls(&x.select_cols(&support), y)?;
            let mut beta = vec![0.0; d];
            for (&j, &v) in support.iter().zip(&sub.beta) {
                beta[j] = v;
            }
            let loss = sse(&beta);
            evaluated += 1;
            if loss < best_loss {
                best_loss = loss;
                best_beta = beta;
            }
            if !next_combination(&mut support, d) {
                break;
            }
        }
    }
    let nnz = best_beta.iter().filter(|v| **v != 0.0).count();
    Ok((best_beta, nnz >= max_support && max_support < d, evaluated))
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
