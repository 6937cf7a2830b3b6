use crate::linalg::{gram, norm2, solve_normal, sym_eigen, Matrix, RANK_TOL};

const SECULAR_RTOL: f64 = 1e-10;
const SECULAR_MAX_ITERS: usize = 500;

/// Least squares subject to `‖β‖₂ <= bound`.
///
/// Returns the unconstrained (minimum-norm) solution when it is feasible.
/// Otherwise finds `μ > 0` with `‖(X'X + μI)⁻¹X'y‖₂ = bound` by Newton's
/// method on `1/‖β(μ)‖ - 1/bound`, safeguarded by bisection on the bracket
/// `[0, ‖X'y‖₂ / bound]`. Returns `(beta, active, iterations)`.
pub fn ridge_secular(x: &Matrix, y: &[f64], bound: f64) -> (Vec<f64>, bool, usize) {
    let d = x.cols();
    let g = gram(x);
    let b = x.tr_mul_vec(y);
    let ls = solve_normal(&g, &b);
    if norm2(&ls.beta) <= bound {
        return (ls.beta, false, 0);
    }
    if bound == 0.0 {
        return (vec![0.0; d], true, 0);
    }

    let eig = sym_eigen(&g);
    let lmax = eig.values.last().copied().unwrap_or(0.0);
    // coordinates of X'y in the eigenbasis
    let c: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|i| eig.vectors[(i, j)] * b[i]).sum())
        .collect();
    let lam: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| if l <= RANK_TOL * lmax { 0.0 } else { l })
        .collect();

    // ‖β(μ)‖ and Σ c²/(λ+μ)³; at μ = 0 null-space terms drop (X'y has no component there)
    let eval = |mu: f64| -> (f64, f64) {
        let mut s2 = 0.0;
        let mut s3 = 0.0;
        for (&cj, &lj) in c.iter().zip(&lam) {
            let den = lj + mu;
            if den <= 0.0 {
                continue;
            }
            s2 += cj * cj / (den * den);
            s3 += cj * cj / (den * den * den);
        }
        (s2.sqrt(), s3)
    };

    let mut lo = 0.0;
    let mut hi = norm2(&b) / bound;
    let mut mu = 0.0;
    let mut iters = 0;
    while iters < SECULAR_MAX_ITERS {
        iters += 1;
        let (norm, s3) = eval(mu);
        if (norm - bound).abs() <= SECULAR_RTOL * bound {
            break;
        }
        if norm > bound {
            lo = mu;
        } else {
            hi = mu;
        }
        let phi = 1.0 / norm - 1.0 / bound;
        let dphi = s3 / (norm * norm * norm);
        let newton = mu - phi / dphi;
        mu = if dphi > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }

    let mut beta = vec![0.0; d];
    for j in 0..d {
        let den = lam[j] + mu;
        if den <= 0.0 {
            continue;
        }
        let coef = c[j] / den;
        for (i, bi) in beta.iter_mut().enumerate() {
            *bi += coef * eig.vectors[(i, j)];
        }
    }
    (beta, true, iters)
}
