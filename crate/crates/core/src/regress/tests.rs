use super::*;
use crate::linalg::{gram, solve_ls};
use proptest::prelude::*;
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

fn rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

fn unif(r: &mut Xoshiro256StarStar) -> f64 {
    (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn random_problem(r: &mut Xoshiro256StarStar, n: usize, d: usize, scale: f64) -> (Matrix, Vec<f64>) {
    let data = (0..n * d).map(|_| unif(r)).collect();
    let x = Matrix::from_row_major(n, d, data).unwrap();
    let y = (0..n).map(|_| scale * unif(r)).collect();
    (x, y)
}

fn sse(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    x.iter_rows().zip(y).map(|(r, &yi)| (yi - dot(r, beta)).powi(2)).sum()
}

fn sad(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    x.iter_rows().zip(y).map(|(r, &yi)| (yi - dot(r, beta)).abs()).sum()
}

#[test]
fn ridge_projects_onto_unit_ball() {
    let f = fit(
        &Matrix::identity(2),
        &[3.0, 4.0],
        LossConfig::Squared,
        ClusterReg::L2(1.0),
    )
    .unwrap();
    assert!((f.beta[0] - 0.6).abs() < 1e-9 && (f.beta[1] - 0.8).abs() < 1e-9);
    assert!(f.active);
    assert!(norm2(&f.beta) <= 1.0 + FEASIBILITY_TOL);
}

#[test]
fn ridge_inactive_returns_least_squares() {
    let f = fit(
        &Matrix::identity(2),
        &[0.3, 0.4],
        LossConfig::Squared,
        ClusterReg::L2(1.0),
    )
    .unwrap();
    assert_eq!(f.beta, vec![0.3, 0.4]);
    assert!(!f.active);
}

#[test]
fn lad_median() {
    let x = Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
    let f = fit(&x, &[0.0, 0.0, 10.0], LossConfig::Abs, ClusterReg::None).unwrap();
    assert_eq!(f.beta, vec![0.0]);
    assert_eq!(f.loss, 10.0);
}

#[test]
fn lasso_soft_threshold() {
    let f = fit(
        &Matrix::identity(2),
        &[3.0, 1.0],
        LossConfig::Squared,
        ClusterReg::L1(2.0),
    )
    .unwrap();
    assert!((f.beta[0] - 2.0).abs() < 1e-9 && f.beta[1].abs() < 1e-9);
    assert!(f.active);
}

#[test]
fn subset_best_single_coordinate() {
    let f = fit(
        &Matrix::identity(2),
        &[3.0, 1.0],
        LossConfig::Squared,
        ClusterReg::L0(1),
    )
    .unwrap();
    assert_eq!(f.beta, vec![3.0, 0.0]);
    assert!(f.active);
}

#[test]
fn unsupported_combinations() {
    let x = Matrix::identity(2);
    for reg in [ClusterReg::L2(1.0), ClusterReg::L0(1)] {
        let err = fit(&x, &[1.0, 2.0], LossConfig::Abs, reg).unwrap_err();
        assert!(matches!(err, Error::Unsupported { p: 1, .. }), "{err}");
    }
}

#[test]
fn empty_input_fits_zero() {
    let f = fit(&Matrix::zeros(0, 3), &[], LossConfig::Abs, ClusterReg::L1(1.0)).unwrap();
    assert_eq!(f.beta, vec![0.0; 3]);
    assert_eq!(f.loss, 0.0);
}

#[test]
fn ridge_agrees_with_projected_gradient() {
    let mut r = rng(600);
    for trial in 0..20 {
        let d = 1 + trial % 4;
        let (x, y) = random_problem(&mut r, 12 + trial, d, 4.0);
        let ls = solve_ls(&x, &y).unwrap().beta;
        let bound = 0.5 * norm2(&ls);
        let f = fit(&x, &y, LossConfig::Squared, ClusterReg::L2(bound)).unwrap();
        let g = gram(&x);
        let b = x.tr_mul_vec(&y);
        let (pg, _) = projected_gradient(&g, &b, vec![0.0; d], |v| project_l2_ball(v, bound));
        for (a, c) in f.beta.iter().zip(&pg) {
            assert!((a - c).abs() <= 1e-6, "trial {trial}: {a} vs {c}");
        }
    }
}

/// Exact minimizer of Σ w_i |y_i - x_i β| on `[lo, hi]` in one dimension:
/// the objective is piecewise linear, so the minimum sits at a breakpoint
/// `y_i / x_i` or an interval end. A golden-section search refines the
/// bracket independently and must agree.
fn lad_1d_oracle(x: &[f64], y: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let f = |b: f64| -> f64 { x.iter().zip(y).map(|(xi, yi)| (yi - xi * b).abs()).sum() };
    let mut cands: Vec<f64> = x
        .iter()
        .zip(y)
        .filter(|(xi, _)| **xi != 0.0)
        .map(|(xi, yi)| (yi / xi).clamp(lo, hi))
        .collect();
    cands.push(lo);
    cands.push(hi);
    let scan = cands
        .iter()
        .map(|&b| (f(b), b))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let e = a + phi * (b - a);
        if f(c) <= f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let golden = f(0.5 * (a + b));
    assert!((golden - scan.0).abs() <= 1e-8 * scan.0.max(1.0));
    scan
}

#[test]
fn lad_matches_one_dimensional_oracle() {
    let mut r = rng(700);
    for trial in 0..20 {
        let n = 5 + trial;
        let x: Vec<f64> = (0..n).map(|_| 0.2 + unif(&mut r).abs()).collect();
        let y: Vec<f64> = (0..n).map(|_| 5.0 * unif(&mut r)).collect();
        let xm = Matrix::from_row_major(n, 1, x.clone()).unwrap();
        let f = fit(&xm, &y, LossConfig::Abs, ClusterReg::None).unwrap();
        let (best, _) = lad_1d_oracle(&x, &y, -100.0, 100.0);
        assert!(
            (f.loss - best).abs() <= 1e-8 * best.max(1.0),
            "trial {trial}: {} vs {best}",
            f.loss
        );
    }
}

#[test]
fn constrained_lad_matches_one_dimensional_oracle() {
    let mut r = rng(701);
    for trial in 0..20 {
        let n = 4 + trial;
        let x: Vec<f64> = (0..n).map(|_| unif(&mut r)).collect();
        let y: Vec<f64> = (0..n).map(|_| 3.0 + unif(&mut r)).collect();
        let bound = 0.5;
        let xm = Matrix::from_row_major(n, 1, x.clone()).unwrap();
        let f = fit(&xm, &y, LossConfig::Abs, ClusterReg::L1(bound)).unwrap();
        assert!(f.beta[0].abs() <= bound + FEASIBILITY_TOL);
        let (best, _) = lad_1d_oracle(&x, &y, -bound, bound);
        assert!((f.loss - best).abs() <= 1e-8 * best.max(1.0), "trial {trial}");
    }
}

#[test]
fn lad_tableau_objective_consistent() {
    let mut r = rng(702);
    let (x, y) = random_problem(&mut r, 40, 3, 2.0);
    let w = vec![1.0; 40];
    let s = lad_simplex(&x, &y, &w, None).unwrap();
    assert!((s.objective - sad(&x, &y, &s.beta)).abs() < 1e-10);
}

#[test]
fn weighted_lad_equals_replicated_samples() {
    let mut r = rng(703);
    let (x, y) = random_problem(&mut r, 6, 2, 2.0);
    let w = [1.0, 3.0, 2.0, 1.0, 4.0, 1.0];
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for (i, &wi) in w.iter().enumerate() {
        for _ in 0..wi as usize {
            rows.push(x.row(i).to_vec());
            ys.push(y[i]);
        }
    }
    let xr = Matrix::from_rows(&rows).unwrap();
    let a = fit_weighted(&x, &y, &w, LossConfig::Abs, ClusterReg::None).unwrap();
    let b = fit(&xr, &ys, LossConfig::Abs, ClusterReg::None).unwrap();
    assert!((a.loss - b.loss).abs() < 1e-10);
    let a = fit_weighted(&x, &y, &w, LossConfig::Squared, ClusterReg::None).unwrap();
    let b = fit(&xr, &ys, LossConfig::Squared, ClusterReg::None).unwrap();
    assert!((a.loss - b.loss).abs() < 1e-10);
}

/// Independent ℓ0 oracle: every support by bitmask, solved by Gaussian
/// elimination on the normal equations.
fn subset_oracle(x: &Matrix, y: &[f64], max_support: usize) -> (f64, Vec<f64>) {
    let d = x.cols();
    let mut best = (sse(x, y, &vec![0.0; d]), vec![0.0; d]);
    for mask in 1u32..(1 << d) {
        if mask.count_ones() as usize > max_support {
            continue;
        }
        let cols: Vec<usize> = (0..d).filter(|j| mask >> j & 1 == 1).collect();
        let s = cols.len();
        let mut a = vec![vec![0.0; s + 1]; s];
        for (i, row) in x.iter_rows().enumerate() {
            for p in 0..s {
                for q in 0..s {
                    a[p][q] += row[cols[p]] * row[cols[q]];
                }
                a[p][s] += row[cols[p]] * y[i];
            }
        }
        for c in 0..s {
            let piv = (c..s).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            for row in c + 1..s {
                let f = a[row][c] / a[c][c];
                for k in c..=s {
                    a[row][k] -= f * a[c][k];
                }
            }
        }
        let mut sol = vec![0.0; s];
        for i in (0..s).rev() {
            let acc: f64 = (i + 1..s).map(|k| a[i][k] * sol[k]).sum();
            sol[i] = (a[i][s] - acc) / a[i][i];
        }
        let mut beta = vec![0.0; d];
        for (p, &j) in cols.iter().enumerate() {
            beta[j] = sol[p];
        }
        let loss = sse(x, y, &beta);
        if loss < best.0 {
            best = (loss, beta);
        }
    }
    best
}

#[test]
fn subset_matches_exhaustive_enumeration() {
    let mut r = rng(800);
    for trial in 0..20 {
        let d = 2 + trial % 7;
        let d0 = 1 + trial % 3;
        let (x, y) = random_problem(&mut r, 3 * d + 4, d, 3.0);
        let f = fit(&x, &y, LossConfig::Squared, ClusterReg::L0(d0)).unwrap();
        let (loss, beta) = subset_oracle(&x, &y, d0);
        assert!((f.loss - loss).abs() <= 1e-10 * loss.max(1.0), "trial {trial}");
        for (a, b) in f.beta.iter().zip(&beta) {
            assert_eq!(*a == 0.0, *b == 0.0, "trial {trial}: supports differ");
            assert!((a - b).abs() < 1e-9);
        }
    }
}

fn project_feasible(v: &mut [f64], reg: ClusterReg) {
    match reg {
        ClusterReg::None | ClusterReg::L0(_) => {}
        ClusterReg::L2(b) => project_l2_ball(v, b),
        ClusterReg::L1(b) => project_l1_ball(v, b),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l1_projection_is_feasible_and_fixed_inside(seed in 0u64..10_000, d in 1usize..8, radius in 0.0f64..3.0) {
        let mut r = rng(seed);
        let mut v: Vec<f64> = (0..d).map(|_| 3.0 * unif(&mut r)).collect();
        let orig = v.clone();
        project_l1_ball(&mut v, radius);
        prop_assert!(norm1(&v) <= radius + 1e-12);
        if norm1(&orig) <= radius {
            prop_assert_eq!(v, orig);
        } else {
            // the projection is at least as close as any sampled feasible point
            let dist = crate::linalg::dist2(&v, &orig);
            for _ in 0..50 {
                let mut w: Vec<f64> = (0..d).map(|_| unif(&mut r)).collect();
                project_l1_ball(&mut w, radius);
                prop_assert!(dist <= crate::linalg::dist2(&w, &orig) + 1e-12);
            }
        }
    }

    #[test]
    fn fits_are_feasible_and_locally_optimal(seed in 0u64..10_000, p in 1u8..=2, q in 0usize..3) {
        let mut r = rng(seed);
        let d = 1 + (seed % 3) as usize;
        let (x, y) = random_problem(&mut r, 10 + d, d, 3.0);
        let loss = LossConfig::from_p(p).unwrap();
        let reg = match q {
            0 => ClusterReg::None,
            1 => ClusterReg::L1(0.7),
            _ if loss == LossConfig::Squared => ClusterReg::L2(0.7),
            _ => ClusterReg::L1(0.3),
        };
        let f = fit(&x, &y, loss, reg).unwrap();
        let norm = constraint_norm(&f.beta, reg.kind());
        let bound = match reg { ClusterReg::L1(b) | ClusterReg::L2(b) => b, _ => f64::INFINITY };
        prop_assert!(norm <= bound + FEASIBILITY_TOL);
        let value = |b: &[f64]| if loss == LossConfig::Abs { sad(&x, &y, b) } else { sse(&x, &y, b) };
        prop_assert!((value(&f.beta) - f.loss).abs() <= 1e-10 * f.loss.max(1.0));
        for _ in 0..200 {
            let mut cand: Vec<f64> = f.beta.iter().map(|b| b + 1e-4 * unif(&mut r)).collect();
            project_feasible(&mut cand, reg);
            prop_assert!(f.loss <= value(&cand) + 1e-9 * f.loss.max(1.0));
        }
    }
}
