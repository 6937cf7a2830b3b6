//! Single-cluster regression: squared or absolute loss under an optional
//! ℓ2, ℓ1 or ℓ0 norm bound on the coefficients.
//!
//! | loss \ constraint | none | ℓ2 | ℓ1 | ℓ0 |
//! |---|---|---|---|---|
//! | squared | normal equations | secular equation | projected gradient | support enumeration |
//! | absolute | simplex | unsupported | simplex | unsupported |
//!
//! This is the per-cluster subroutine of every mixture solver.

mod lad;
mod lasso;
mod ridge;
mod subset;

pub use lad::{lad_simplex, LadSolution};
pub use lasso::{project_l1_ball, project_l2_ball, projected_gradient};
pub use ridge::ridge_secular;
pub use subset::{best_subset, SUBSET_GUARD};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm1, norm2, Matrix};
use crate::types::{ClusterReg, Dataset, LossConfig, RegKind};

/// Slack allowed on the norm constraint of a returned coefficient vector.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub beta: Vec<f64>,
    /// Unnormalized loss `Σ_i w_i |y_i - x_i'β|^p` (unit weights unless weighted).
    pub loss: f64,
    /// The norm constraint is tight at `beta`.
    pub active: bool,
    pub iterations: usize,
}

/// Errors with [`Error::Unsupported`] for combinations outside the grid.
pub fn check_supported(loss: LossConfig, kind: RegKind) -> Result<()> {
    match (loss, kind) {
        (LossConfig::Squared, _) => Ok(()),
        (LossConfig::Abs, RegKind::None | RegKind::L1) => Ok(()),
        (LossConfig::Abs, k) => Err(Error::Unsupported { p: 1, q: k.name() }),
    }
}

pub fn fit(x: &Matrix, y: &[f64], loss: LossConfig, reg: ClusterReg) -> Result<FitReport> {
    fit_inner(x, y, None, loss, reg)
}

/// Like [`fit`] with a nonnegative weight per sample.
pub fn fit_weighted(x: &Matrix, y: &[f64], weights: &[f64], loss: LossConfig, reg: ClusterReg) -> Result<FitReport> {
    if weights.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} samples",
            weights.len(),
            y.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Invalid("weights must be finite and >= 0".into()));
    }
    fit_inner(x, y, Some(weights), loss, reg)
}

fn fit_inner(x: &Matrix, y: &[f64], weights: Option<&[f64]>, loss: LossConfig, reg: ClusterReg) -> Result<FitReport> {
    check_supported(loss, reg.kind())?;
    if x.rows() != y.len() {
        return Err(Error::Dimension(format!(
            "x has {} rows, y has {} entries",
            x.rows(),
            y.len()
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("x"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    let d = x.cols();
    if y.is_empty() {
        return Ok(FitReport {
            beta: vec![0.0; d],
            loss: 0.0,
            active: false,
            iterations: 0,
        });
    }

    let (beta, active, iterations) = match loss {
        LossConfig::Squared => {
            let scaled;
            let (xs, ys): (&Matrix, Vec<f64>) = match weights {
                Some(w) => {
                    let mut m = x.clone();
                    let mut yy = y.to_vec();
                    for (i, &wi) in w.iter().enumerate() {
                        let s = wi.sqrt();
                        m.row_mut(i).iter_mut().for_each(|v| *v *= s);
                        yy[i] *= s;
                    }
                    scaled = m;
                    (&scaled, yy)
                }
                None => (x, y.to_vec()),
            };
            match reg {
                ClusterReg::None => {
                    let s = crate::linalg::solve_ls(xs, &ys)?;
                    (s.beta, false, 1)
                }
                ClusterReg::L2(bound) => ridge_secular(xs, &ys, bound),
                ClusterReg::L1(bound) => lasso::lasso_pg(xs, &ys, bound),
                ClusterReg::L0(bound) => subset::best_subset(xs, &ys, bound)?,
            }
        }
        LossConfig::Abs => {
            let unit;
            let w = match weights {
                Some(w) => w,
                None => {
                    unit = vec![1.0; y.len()];
                    &unit
                }
            };
            let bound = match reg {
                ClusterReg::L1(b) => Some(b),
                _ => None,
            };
            let s = lad_simplex(x, y, w, bound)?;
            let active = bound.is_some_and(|b| norm1(&s.beta) >= b * (1.0 - 1e-9));
            (s.beta, active, s.pivots)
        }
    };

    let loss_value = x
        .iter_rows()
        .zip(y)
        .enumerate()
        .map(|(i, (r, &yi))| weights.map_or(1.0, |w| w[i]) * loss.of(yi - dot(r, &beta)))
        .sum();
    Ok(FitReport {
        beta,
        loss: loss_value,
        active,
        iterations,
    })
}

/// Fits only the rows `idx` of `ds`. `weights`, when given, is indexed by
/// dataset row.
pub fn fit_rows(
    ds: &Dataset,
    idx: &[usize],
    weights: Option<&[f64]>,
    loss: LossConfig,
    reg: ClusterReg,
) -> Result<FitReport> {
    let x = ds.x().select_rows(idx);
    let y: Vec<f64> = idx.iter().map(|&i| ds.y()[i]).collect();
    match weights {
        None => fit(&x, &y, loss, reg),
        Some(w) => {
            let w: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
            fit_weighted(&x, &y, &w, loss, reg)
        }
    }
}

/// `‖β‖_q` for the constraint's norm (support size for ℓ0).
pub fn constraint_norm(beta: &[f64], kind: RegKind) -> f64 {
    match kind {
        RegKind::None => 0.0,
        RegKind::L2 => norm2(beta),
        RegKind::L1 => norm1(beta),
        RegKind::L0 => beta.iter().filter(|v| **v != 0.0).count() as f64,
    }
}

#[cfg(test)]
mod tests;
