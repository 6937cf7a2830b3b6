use crate::linalg::{eigen_extremes, gram, norm1, norm2, solve_normal, Matrix, SymMatrix};

const PG_RTOL: f64 = 1e-10;
const PG_MAX_ITERS: usize = 100_000;

/// Euclidean projection onto `{β : ‖β‖₁ <= radius}` by sort-and-threshold.
pub fn project_l1_ball(v: &mut [f64], radius: f64) {
    if norm1(v) <= radius {
        return;
    }
    if radius <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - radius) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - theta).max(0.0);
    }
}

/// Euclidean projection onto `{β : ‖β‖₂ <= radius}`.
pub fn project_l2_ball(v: &mut [f64], radius: f64) {
    let n = norm2(v);
    if n > radius {
        let s = if n > 0.0 { radius / n } else { 0.0 };
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// Projected gradient for `min ½‖y - Xβ‖²` over a convex set given by its
/// projection, in Gram form (`G = X'X`, `b = X'y`), with constant step
/// `1/λ_max(G)`. Stops when the step-to-step change falls below `1e-10`
/// relative to `max(1, ‖β‖)` or after `10⁵` iterations.
pub fn projected_gradient(
    g: &SymMatrix,
    b: &[f64],
    start: Vec<f64>,
    project: impl Fn(&mut [f64]),
) -> (Vec<f64>, usize) {
    let d = g.dim();
    let (_, lmax) = eigen_extremes(g);
    let mut beta = start;
    project(&mut beta);
    if lmax <= 0.0 {
        return (beta, 0);
    }
    let step = 1.0 / lmax;
    let gm = g.matrix();
    let mut next = vec![0.0; d];
    for it in 1..=PG_MAX_ITERS {
        let gb = gm.mul_vec(&beta);
        for j in 0..d {
            next[j] = beta[j] - step * (gb[j] - b[j]);
        }
        project(&mut next);
        let change = next
            .iter()
            .zip(&beta)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut beta, &mut next);
        if change <= PG_RTOL * norm2(&beta).max(1.0) {
            return (beta, it);
        }
    }
    (beta, PG_MAX_ITERS)
}

/// Least squares subject to `‖β‖₁ <= bound`.
pub(super) fn lasso_pg(x: &Matrix, y: &[f64], bound: f64) -> (Vec<f64>, bool, usize) {
    let g = gram(x);
    let b = x.tr_mul_vec(y);
    let ls = solve_normal(&g, &b);
    if norm1(&ls.beta) <= bound {
        return (ls.beta, false, 0);
    }
    let (beta, iters) = projected_gradient(&g, &b, ls.beta, |v| project_l1_ball(v, bound));
    (beta, true, iters)
}
