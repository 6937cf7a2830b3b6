//! Least absolute deviations as a linear program, solved by a dense primal
//! simplex with Bland's rule.
//!
//! The LP is
//!
//! ```text
//! minimize   Σ_i w_i (u_i + v_i)
//! subject to x_i'(β⁺ - β⁻) + u_i - v_i = y_i        i in [n]
//!            Σ_j (β⁺_j + β⁻_j) + s = bound           (only with an ℓ1 bound)
//!            β⁺, β⁻, u, v, s >= 0
//! ```
//!
//! which is the usual `-t_i <= y_i - x_i'β <= t_i` form with `t_i = u_i + v_i`.
//! The columns of `u_i` and `v_i` are negatives of each other, so the tableau
//! keeps one column per residual pair. Only nonbasic columns are stored: the
//! tableau is `m x 2d`, where a naive one would be `m x (2n + 2d)`. Starting
//! from the basis of all residual variables the initial point is feasible, so
//! no phase one is needed.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const RC_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct LadSolution {
    pub beta: Vec<f64>,
    /// Objective `Σ w_i |y_i - x_i'β|` as read from the final tableau.
    pub objective: f64,
    pub pivots: usize,
}

/// A nonbasic tableau column.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Plus(usize),
    Minus(usize),
    Slack,
    /// Residual pair `(u_i, v_i)`; the stored column is that of `u_i`.
    Pair(usize),
}

/// The variable sitting in a basis row.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Basic {
    Plus(usize),
    Minus(usize),
    Slack,
    /// `u_i` when `neg` is false, `v_i` otherwise.
    Resid {
        i: usize,
        neg: bool,
    },
}

struct Layout {
    d: usize,
    pair_base: usize,
}

impl Layout {
    fn slot_vars(&self, s: Slot) -> (usize, Option<usize>) {
        match s {
            Slot::Plus(j) => (2 * j, None),
            Slot::Minus(j) => (2 * j + 1, None),
            Slot::Slack => (2 * self.d, None),
            Slot::Pair(i) => (self.pair_base + 2 * i, Some(self.pair_base + 2 * i + 1)),
        }
    }

    fn basic_var(&self, b: Basic) -> usize {
        match b {
            Basic::Plus(j) => 2 * j,
            Basic::Minus(j) => 2 * j + 1,
            Basic::Slack => 2 * self.d,
            Basic::Resid { i, neg } => self.pair_base + 2 * i + usize::from(neg),
        }
    }
}

/// Weighted least absolute deviations, optionally with `‖β‖₁ <= l1_bound`.
pub fn lad_simplex(x: &Matrix, y: &[f64], weights: &[f64], l1_bound: Option<f64>) -> Result<LadSolution> {
    let n = x.rows();
    let d = x.cols();
    if y.len() != n || weights.len() != n {
        return Err(Error::Dimension("lad: x, y and weights disagree".into()));
    }
    if let Some(b) = l1_bound {
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::Invalid(format!("l1 bound {b} must be >= 0")));
        }
    }
    let has_norm = l1_bound.is_some();
    let m = n + usize::from(has_norm);
    let layout = Layout {
        d,
        pair_base: 2 * d + usize::from(has_norm),
    };

    // nonbasic columns, column-major: tab[s * m + r]
    let mut slots: Vec<Slot> = (0..d).flat_map(|j| [Slot::Plus(j), Slot::Minus(j)]).collect();
    let ns = slots.len();
    let mut tab = vec![0.0; ns * m];
    let mut basis = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..n {
        let neg = y[i] < 0.0;
        let sign = if neg { -1.0 } else { 1.0 };
        basis.push(Basic::Resid { i, neg });
        rhs.push(y[i].abs());
        for j in 0..d {
            tab[(2 * j) * m + i] = sign * x[(i, j)];
            tab[(2 * j + 1) * m + i] = -sign * x[(i, j)];
        }
    }
    if let Some(b) = l1_bound {
        basis.push(Basic::Slack);
        rhs.push(b);
        for s in 0..ns {
            tab[s * m + n] = 1.0;
        }
    }

    let basic_cost = |b: Basic| match b {
        Basic::Resid { i, .. } => weights[i],
        _ => 0.0,
    };

    let wmax = weights.iter().copied().fold(1.0_f64, f64::max);
    let rc_tol = RC_TOL * wmax;
    let max_pivots = 50 * (m + ns) + 1000;
    let mut cb: Vec<f64> = basis.iter().map(|&b| basic_cost(b)).collect();
    let mut entering_col = vec![0.0; m];
    let mut pivots = 0;
    // β⁺_j and β⁻_j have opposite columns: while one is basic the other has a
    // zero reduced cost and an all-but-one zero column, so it never enters
    let mut split_basic = vec![false; d];
    // candidates whose column shows no blocking row: rounding noise on a
    // zero reduced cost; skipped until the next pivot
    let mut noisy: Vec<usize> = Vec::new();

    loop {
        // Bland: the lowest-indexed variable with a negative reduced cost enters
        let mut enter: Option<(usize, usize, f64)> = None; // (var, slot, sign)
        for (si, &slot) in slots.iter().enumerate() {
            if let Slot::Plus(j) | Slot::Minus(j) = slot {
                if split_basic[j] {
                    continue;
                }
            }
            let col = &tab[si * m..(si + 1) * m];
            let z: f64 = cb.iter().zip(col).map(|(c, t)| c * t).sum();
            let (var_pos, var_neg) = layout.slot_vars(slot);
            let cost = match slot {
                Slot::Pair(i) => weights[i],
                _ => 0.0,
            };
            let mut consider = |var: usize, rc: f64, sign: f64| {
                if rc < -rc_tol && !noisy.contains(&var) && enter.is_none_or(|(v, _, _)| var < v) {
                    enter = Some((var, si, sign));
                }
            };
            consider(var_pos, cost - z, 1.0);
            if let Some(vn) = var_neg {
                consider(vn, cost + z, -1.0);
            }
        }
        let Some((var, si, sign)) = enter else { break };

        for r in 0..m {
            entering_col[r] = sign * tab[si * m + r];
        }
        // ratio test, ties to the lowest-indexed leaving variable
        let mut leave: Option<(usize, f64, usize)> = None; // (row, ratio, var)
        for r in 0..m {
            let a = entering_col[r];
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = rhs[r] / a;
            let var = layout.basic_var(basis[r]);
            let better = match leave {
                None => true,
                Some((_, best, bv)) => {
                    let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                    if tie {
                        var < bv
                    } else {
                        ratio < best
                    }
                }
            };
            if better {
                leave = Some((r, ratio, var));
            }
        }
        // the objective is bounded below, so a missing blocking row is noise
        let Some((r, _, _)) = leave else {
            noisy.push(var);
            continue;
        };
        noisy.clear();

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Invalid(format!("lad: no convergence after {max_pivots} pivots")));
        }

        let piv = entering_col[r];
        rhs[r] /= piv;
        let rr = rhs[r];
        for i in 0..m {
            if i != r {
                rhs[i] -= entering_col[i] * rr;
                if rhs[i] < 0.0 && rhs[i] > -1e-13 {
                    rhs[i] = 0.0;
                }
            }
        }
        for s in 0..ns {
            if s == si {
                continue;
            }
            let col = &mut tab[s * m..(s + 1) * m];
            let tr = col[r] / piv;
            if tr != 0.0 {
                for i in 0..m {
                    col[i] -= entering_col[i] * tr;
                }
            }
            col[r] = tr;
        }
        // the leaving variable takes over the entering slot
        let leaving = basis[r];
        if let Basic::Plus(j) | Basic::Minus(j) = leaving {
            split_basic[j] = false;
        }
        let (new_slot, flip) = match leaving {
            Basic::Plus(j) => (Slot::Plus(j), false),
            Basic::Minus(j) => (Slot::Minus(j), false),
            Basic::Slack => (Slot::Slack, false),
            Basic::Resid { i, neg } => (Slot::Pair(i), neg),
        };
        let col = &mut tab[si * m..(si + 1) * m];
        let f = if flip { -1.0 } else { 1.0 };
        for i in 0..m {
            col[i] = -f * entering_col[i] / piv;
        }
        col[r] = f / piv;

        basis[r] = match slots[si] {
            Slot::Plus(j) => Basic::Plus(j),
            Slot::Minus(j) => Basic::Minus(j),
            Slot::Slack => Basic::Slack,
            Slot::Pair(i) => Basic::Resid { i, neg: sign < 0.0 },
        };
        if let Basic::Plus(j) | Basic::Minus(j) = basis[r] {
            split_basic[j] = true;
        }
        cb[r] = basic_cost(basis[r]);
        slots[si] = new_slot;
    }

    let mut beta = vec![0.0; d];
    let mut objective = 0.0;
    for (r, &b) in basis.iter().enumerate() {
        match b {
            Basic::Plus(j) => beta[j] += rhs[r],
            Basic::Minus(j) => beta[j] -= rhs[r],
            Basic::Resid { i, .. } => objective += weights[i] * rhs[r],
            Basic::Slack => {}
        }
    }
    Ok(LadSolution {
        beta,
        objective,
        pivots,
    })
}
