//! The mixture objective, optimal per-sample assignment and label matching.

use crate::error::{Error, Result};
use crate::linalg::{dist2, dot};
use crate::types::{Assignment, CoefficientSet, Dataset, LossConfig};

/// Largest K accepted by [`match_permutation`] (8! permutations).
pub const MAX_MATCH_K: usize = 8;

/// Tolerance used for residual comparisons (assignment optimality checks).
pub const RESIDUAL_TOL: f64 = 1e-9;

fn check_dims(ds: &Dataset, coeffs: &CoefficientSet) -> Result<()> {
    if coeffs.dim() != ds.d() {
        return Err(Error::Dimension(format!(
            "coefficients have dimension {}, data has {}",
            coeffs.dim(),
            ds.d()
        )));
    }
    Ok(())
}

fn check_assignment(ds: &Dataset, coeffs: &CoefficientSet, a: &Assignment) -> Result<()> {
    check_dims(ds, coeffs)?;
    if a.len() != ds.n() {
        return Err(Error::Dimension(format!("{} labels for {} samples", a.len(), ds.n())));
    }
    if let Some(&bad) = a.labels().iter().find(|&&l| l >= coeffs.k()) {
        return Err(Error::Invalid(format!("label {bad} outside [0, {})", coeffs.k())));
    }
    Ok(())
}

/// `(1/n) Σ_i |y_i - x_i'β_{a(i)}|^p`.
pub fn objective(ds: &Dataset, coeffs: &CoefficientSet, assign: &Assignment, loss: LossConfig) -> Result<f64> {
    check_assignment(ds, coeffs, assign)?;
    let total: f64 = ds
        .x()
        .iter_rows()
        .zip(ds.y())
        .zip(assign.labels())
        .map(|((x, &y), &k)| loss.of(y - dot(x, coeffs.beta(k))))
        .sum();
    Ok(total / ds.n() as f64)
}

/// `Σ_i w_i |y_i - x_i'β_{a(i)}|^p / Σ_i w_i`, used for collapsed instances
/// where identical samples are merged into one weighted sample.
pub fn weighted_objective(
    ds: &Dataset,
    weights: &[f64],
    coeffs: &CoefficientSet,
    assign: &Assignment,
    loss: LossConfig,
) -> Result<f64> {
    check_assignment(ds, coeffs, assign)?;
    if weights.len() != ds.n() {
        return Err(Error::Dimension(format!(
            "{} weights for {} samples",
            weights.len(),
            ds.n()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (((x, &y), &k), &w) in ds.x().iter_rows().zip(ds.y()).zip(assign.labels()).zip(weights) {
        num += w * loss.of(y - dot(x, coeffs.beta(k)));
        den += w;
    }
    Ok(num / den)
}

/// Per-sample absolute residuals against every cluster, row-major `n x K`.
pub fn abs_residuals(ds: &Dataset, coeffs: &CoefficientSet) -> Vec<f64> {
    let k = coeffs.k();
    let mut out = Vec::with_capacity(ds.n() * k);
    for (x, &y) in ds.x().iter_rows().zip(ds.y()) {
        out.extend(coeffs.betas().iter().map(|b| (y - dot(x, b)).abs()));
    }
    out
}

/// Assigns every sample to the cluster with the smallest residual; ties go to
/// the lowest cluster index.
pub fn best_assignment(ds: &Dataset, coeffs: &CoefficientSet) -> Result<Assignment> {
    check_dims(ds, coeffs)?;
    let k = coeffs.k();
    let res = abs_residuals(ds, coeffs);
    let labels = res
        .chunks(k)
        .map(|r| {
            let mut best = 0;
            for m in 1..k {
                if r[m] < r[best] {
                    best = m;
                }
            }
            best
        })
        .collect();
    Ok(Assignment::from_labels(labels))
}

/// Samples whose assigned cluster is not a residual minimizer within `tol`.
///
/// Empty means both inclusions hold: every sample sits in a cluster attaining
/// the minimal residual, hence every strict minimizer keeps its own sample.
pub fn assignment_violations(
    ds: &Dataset,
    coeffs: &CoefficientSet,
    assign: &Assignment,
    tol: f64,
) -> Result<Vec<usize>> {
    check_assignment(ds, coeffs, assign)?;
    let k = coeffs.k();
    let res = abs_residuals(ds, coeffs);
    Ok(res
        .chunks(k)
        .zip(assign.labels())
        .enumerate()
        .filter(|(_, (r, &l))| {
            let min = r.iter().copied().fold(f64::INFINITY, f64::min);
            r[l] > min + tol
        })
        .map(|(i, _)| i)
        .collect())
}

/// Result of aligning estimated clusters with the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `perm[k]` is the truth cluster matched to estimated cluster `k`.
    pub perm: Vec<usize>,
    /// `errors[k] = ‖β̂_k - β_{perm[k]}‖₂`.
    pub errors: Vec<f64>,
}

impl Matching {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_error(&self) -> f64 {
        self.errors.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Error of the estimate matched to each truth cluster, indexed by truth cluster.
    pub fn errors_by_truth(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.perm.len()];
        for (k, &t) in self.perm.iter().enumerate() {
            out[t] = self.errors[k];
        }
        out
    }

    /// Whether the estimated partition equals the true one under this matching.
    pub fn partition_matches(&self, est: &Assignment, truth_labels: &[usize]) -> bool {
        est.len() == truth_labels.len() && est.labels().iter().zip(truth_labels).all(|(&e, &t)| self.perm[e] == t)
    }
}

/// Brute-force minimum of `Σ_k ‖β̂_k - β_{π(k)}‖₂` over all permutations π.
/// Among equally good permutations the lexicographically first wins.
pub fn match_permutation(est: &CoefficientSet, truth: &CoefficientSet) -> Result<Matching> {
    let k = est.k();
    if truth.k() != k || truth.dim() != est.dim() {
        return Err(Error::Dimension(format!(
            "cannot match {}x{} estimate against {}x{} truth",
            k,
            est.dim(),
            truth.k(),
            truth.dim()
        )));
    }
    if k > MAX_MATCH_K {
        return Err(Error::PermutationLimit(k));
    }
    let dist: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| dist2(est.beta(a), truth.beta(b))).collect())
        .collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        let total: f64 = perm.iter().enumerate().map(|(a, &b)| dist[a][b]).sum();
        if best.as_ref().is_none_or(|(t, _)| total < *t) {
            best = Some((total, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let perm = best.expect("at least one permutation").1;
    let errors = perm.iter().enumerate().map(|(a, &b)| dist[a][b]).collect();
    Ok(Matching { perm, errors })
}

/// Advances to the next permutation in lexicographic order.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use proptest::prelude::*;
    use rand_core::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;

    fn ds(x: &[&[f64]], y: &[f64]) -> Dataset {
        Dataset::new(Matrix::from_rows(x).unwrap(), y.to_vec()).unwrap()
    }

    fn cs(b: &[&[f64]]) -> CoefficientSet {
        CoefficientSet::new(b.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    fn unif(r: &mut Xoshiro256StarStar) -> f64 {
        (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    #[test]
    fn objective_examples() {
        let d = ds(&[&[1.0]], &[2.0]);
        let a = Assignment::new(vec![0], 1).unwrap();
        assert_eq!(objective(&d, &cs(&[&[2.0]]), &a, LossConfig::Squared).unwrap(), 0.0);

        let d = ds(&[&[1.0], &[1.0]], &[1.0, 3.0]);
        let a = Assignment::new(vec![0, 0], 1).unwrap();
        assert_eq!(objective(&d, &cs(&[&[2.0]]), &a, LossConfig::Squared).unwrap(), 1.0);
    }

    #[test]
    fn objective_rejects_mismatch() {
        let d = ds(&[&[1.0], &[1.0]], &[1.0, 3.0]);
        let a = Assignment::new(vec![0], 1).unwrap();
        assert!(objective(&d, &cs(&[&[2.0]]), &a, LossConfig::Abs).is_err());
        let a = Assignment::new(vec![0, 0], 1).unwrap();
        assert!(objective(&d, &cs(&[&[2.0, 1.0]]), &a, LossConfig::Abs).is_err());
    }

    #[test]
    fn best_assignment_examples() {
        let c = cs(&[&[0.0], &[1.0]]);
        let a = best_assignment(&ds(&[&[1.0]], &[0.2]), &c).unwrap();
        assert_eq!(a.labels(), &[0]);
        // tie goes to the lower index
        let a = best_assignment(&ds(&[&[1.0]], &[0.5]), &c).unwrap();
        assert_eq!(a.labels(), &[0]);
    }

    #[test]
    fn best_assignment_matches_exhaustive_scan() {
        let mut r = Xoshiro256StarStar::seed_from_u64(50);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![unif(&mut r), unif(&mut r)]).collect();
        let y: Vec<f64> = (0..50).map(|_| 2.0 * unif(&mut r)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), y.clone()).unwrap();
        let c = CoefficientSet::new((0..3).map(|_| vec![unif(&mut r), unif(&mut r)]).collect()).unwrap();
        let a = best_assignment(&d, &c).unwrap();
        for i in 0..50 {
            let mut best = (f64::INFINITY, 0);
            for k in 0..3 {
                let resid = (y[i] - rows[i][0] * c.beta(k)[0] - rows[i][1] * c.beta(k)[1]).abs();
                if resid < best.0 {
                    best = (resid, k);
                }
            }
            assert_eq!(a.labels()[i], best.1);
        }
        assert!(assignment_violations(&d, &c, &a, RESIDUAL_TOL).unwrap().is_empty());
    }

    #[test]
    fn violations_flag_misassigned_samples() {
        let d = ds(&[&[1.0], &[1.0]], &[0.0, 1.0]);
        let c = cs(&[&[0.0], &[1.0]]);
        let a = Assignment::new(vec![1, 1], 2).unwrap();
        assert_eq!(assignment_violations(&d, &c, &a, RESIDUAL_TOL).unwrap(), vec![0]);
    }

    #[test]
    fn matching_examples() {
        let t = cs(&[&[1.0, 2.0], &[-1.0, 0.5]]);
        let m = match_permutation(&t, &t).unwrap();
        assert_eq!(m.perm, vec![0, 1]);
        assert_eq!(m.errors, vec![0.0, 0.0]);
        let swapped = t.permuted(&[1, 0]);
        let m = match_permutation(&swapped, &t).unwrap();
        assert_eq!(m.perm, vec![1, 0]);
        assert_eq!(m.errors, vec![0.0, 0.0]);
    }

    #[test]
    fn matching_recovers_shuffle_under_perturbation() {
        let mut r = Xoshiro256StarStar::seed_from_u64(3);
        let truth =
            CoefficientSet::new((0..3).map(|_| vec![5.0 * unif(&mut r), 5.0 * unif(&mut r)]).collect()).unwrap();
        let shuffle = [2, 0, 1];
        let eps = 1e-3;
        let est = CoefficientSet::new(
            shuffle
                .iter()
                .map(|&k| truth.beta(k).iter().map(|v| v + eps).collect())
                .collect(),
        )
        .unwrap();
        // independent enumeration of all six permutations
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let total = |p: &[usize; 3]| -> f64 { (0..3).map(|a| dist2(est.beta(a), truth.beta(p[a]))).sum() };
        let best = perms.iter().min_by(|a, b| total(a).total_cmp(&total(b))).unwrap();
        assert_eq!(best, &shuffle);
        let m = match_permutation(&est, &truth).unwrap();
        assert_eq!(m.perm, shuffle.to_vec());
        for e in m.errors {
            assert!((e - eps * 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_limit() {
        let c = CoefficientSet::zeros(9, 1);
        assert!(matches!(match_permutation(&c, &c), Err(Error::PermutationLimit(9))));
    }

    proptest! {
        #[test]
        fn best_assignment_beats_random_assignments(seed in 0u64..500, p in 1u8..=2) {
            let mut r = Xoshiro256StarStar::seed_from_u64(seed);
            let n = 20;
            let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![unif(&mut r), 1.0]).collect();
            let y: Vec<f64> = (0..n).map(|_| unif(&mut r)).collect();
            let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), y).unwrap();
            let c = CoefficientSet::new((0..3).map(|_| vec![unif(&mut r), unif(&mut r)]).collect()).unwrap();
            let loss = LossConfig::from_p(p).unwrap();
            let best = objective(&d, &c, &best_assignment(&d, &c).unwrap(), loss).unwrap();
            for _ in 0..20 {
                let labels = (0..n).map(|_| (r.next_u64() % 3) as usize).collect();
                let a = Assignment::new(labels, 3).unwrap();
                prop_assert!(best <= objective(&d, &c, &a, loss).unwrap() + 1e-15);
            }
        }

        #[test]
        fn matching_is_relabeling_invariant(seed in 0u64..500, k in 2usize..5) {
            let mut r = Xoshiro256StarStar::seed_from_u64(seed);
            let truth = CoefficientSet::new((0..k).map(|_| vec![unif(&mut r), unif(&mut r)]).collect()).unwrap();
            let est = CoefficientSet::new((0..k).map(|_| vec![unif(&mut r), unif(&mut r)]).collect()).unwrap();
            let base = match_permutation(&est, &truth).unwrap();
            let mut order: Vec<usize> = (0..k).collect();
            order.rotate_left(1);
            let relabeled = match_permutation(&est.permuted(&order), &truth).unwrap();
            let mut a = base.errors.clone();
            let mut b = relabeled.errors.clone();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let total_a: f64 = base.errors.iter().sum();
            let total_b: f64 = relabeled.errors.iter().sum();
            prop_assert!((total_a - total_b).abs() < 1e-12);
            // without near-ties the matching itself is carried along
            let expect: Vec<usize> = order.iter().map(|&o| base.perm[o]).collect();
            if (total_a - total_b).abs() == 0.0 {
                prop_assert_eq!(relabeled.perm, expect);
            }
        }
    }
}
