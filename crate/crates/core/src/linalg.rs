//! Small dense linear algebra: row-major matrices, Gram products, a cyclic
//! Jacobi eigensolver and least squares through the normal equations.
//!
//! Everything here targets the desk-scale dimensions of regression problems
//! (d up to a few dozen); no attempt is made at blocking or sparsity.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Copies the given columns, in order, into a new matrix.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for r in self.iter_rows() {
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// The first `n` rows.
    pub fn prefix(&self, n: usize) -> Matrix {
        let n = n.min(self.rows);
        Matrix {
            rows: n,
            cols: self.cols,
            data: self.data[..n * self.cols].to_vec(),
        }
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.iter_rows().map(|r| dot(r, v)).collect()
    }

    /// `self' * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.iter_rows().zip(v) {
            for (o, &rj) in out.iter_mut().zip(r) {
                *o += rj * vi;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Absolute tolerance on asymmetry, scaled by the largest entry when above 1.
const SYMMETRY_TOL: f64 = 1e-12;

/// A square matrix that is symmetric to within `1e-12` (relative to its scale)
/// and has been exactly symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("symmetric matrix"));
        }
        let n = m.rows;
        let tol = SYMMETRY_TOL * m.max_abs().max(1.0);
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > tol {
            return Err(Error::NotSymmetric(worst));
        }
        let mut m = m;
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// `Σ_i x_i x_i'` over the rows of `x`.
pub fn gram(x: &Matrix) -> SymMatrix {
    let d = x.cols;
    let mut g = Matrix::zeros(d, d);
    for r in x.iter_rows() {
        for a in 0..d {
            let ra = r[a];
            if ra == 0.0 {
                continue;
            }
            for b in a..d {
                g.data[a * d + b] += ra * r[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g.data[a * d + b] = g.data[b * d + a];
        }
    }
    SymMatrix(g)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition.
///
/// Sweeps stop once the largest off-diagonal magnitude drops below `1e-12`
/// times `max(1, ‖A‖_F)`, or after 100 sweeps.
pub fn sym_eigen(m: &SymMatrix) -> SymEigen {
    let n = m.dim();
    let mut a = m.0.data.clone();
    let mut v = Matrix::identity(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tol = JACOBI_TOL * scale;

    let max_off = |a: &[f64]| {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        off
    };

    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS && max_off(&a) >= tol {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.select_cols(&order);
    SymEigen {
        values,
        vectors,
        sweeps,
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_extremes(m: &SymMatrix) -> (f64, f64) {
    if m.dim() == 0 {
        return (0.0, 0.0);
    }
    let e = sym_eigen(m);
    (e.values[0], *e.values.last().unwrap())
}

/// Relative pivot threshold below which the Gram matrix is treated as singular.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LsSolution {
    pub beta: Vec<f64>,
    /// The Gram matrix was singular and `beta` is the minimum-norm minimizer.
    pub rank_deficient: bool,
}

/// Unconstrained least squares `argmin Σ (y_i - x_i'β)²`.
///
/// Solves the normal equations by diagonally pivoted Cholesky. When a pivot
/// falls below `1e-10` times the largest Gram diagonal the minimum-norm
/// solution is computed from the eigen-decomposition instead.
pub fn solve_ls(x: &Matrix, y: &[f64]) -> Result<LsSolution> {
    if x.rows != y.len() {
        return Err(Error::Dimension(format!(
            "x has {} rows, y has {} entries",
            x.rows,
            y.len()
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("x"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    let g = gram(x);
    let b = x.tr_mul_vec(y);
    Ok(solve_normal(&g, &b))
}

/// Solves `G β = b` for a Gram matrix `G = X'X` and `b = X'y`.
pub(crate) fn solve_normal(g: &SymMatrix, b: &[f64]) -> LsSolution {
    let d = g.dim();
    let max_diag = (0..d).map(|i| g.0[(i, i)]).fold(0.0_f64, f64::max);
    if d == 0 || max_diag <= 0.0 {
        return LsSolution {
            beta: vec![0.0; d],
            rank_deficient: d > 0,
        };
    }
    match pivoted_cholesky(g, RANK_TOL * max_diag) {
        Some((l, perm)) => {
            // L L' = P' G P; solve for the permuted unknowns.
            let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
            let mut z = vec![0.0; d];
            for i in 0..d {
                let s: f64 = (0..i).map(|k| l[(i, k)] * z[k]).sum();
                z[i] = (pb[i] - s) / l[(i, i)];
            }
            let mut w = vec![0.0; d];
            for i in (0..d).rev() {
                let s: f64 = (i + 1..d).map(|k| l[(k, i)] * w[k]).sum();
                w[i] = (z[i] - s) / l[(i, i)];
            }
            let mut beta = vec![0.0; d];
            for (k, &i) in perm.iter().enumerate() {
                beta[i] = w[k];
            }
            LsSolution {
                beta,
                rank_deficient: false,
            }
        }
        None => LsSolution {
            beta: min_norm_solve(g, b),
            rank_deficient: true,
        },
    }
}

/// Cholesky with diagonal pivoting. Returns `None` as soon as the best
/// remaining pivot is below `threshold`.
fn pivoted_cholesky(g: &SymMatrix, threshold: f64) -> Option<(Matrix, Vec<usize>)> {
    let d = g.dim();
    let mut a = g.0.clone();
    let mut perm: Vec<usize> = (0..d).collect();
    for k in 0..d {
        let (piv, &pval) = (k..d)
            .map(|i| (i, &a[(i, i)]))
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        if pval < threshold {
            return None;
        }
        if piv != k {
            perm.swap(k, piv);
            for j in 0..d {
                let t = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = t;
            }
            for i in 0..d {
                let t = a[(i, k)];
                a[(i, k)] = a[(i, piv)];
                a[(i, piv)] = t;
            }
        }
        let lkk = a[(k, k)].sqrt();
        a[(k, k)] = lkk;
        for i in k + 1..d {
            a[(i, k)] /= lkk;
        }
        // keep the whole trailing block symmetric so later pivot swaps stay valid
        for i in k + 1..d {
            for j in k + 1..d {
                let v = a[(i, j)] - a[(i, k)] * a[(j, k)];
                a[(i, j)] = v;
            }
        }
    }
    let mut l = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            l[(i, j)] = a[(i, j)];
        }
    }
    Some((l, perm))
}

/// `G⁺ b` with eigenvalues below `RANK_TOL · λ_max` discarded.
pub(crate) fn min_norm_solve(g: &SymMatrix, b: &[f64]) -> Vec<f64> {
    let d = g.dim();
    let e = sym_eigen(g);
    let lmax = e.values.last().copied().unwrap_or(0.0);
    let mut beta = vec![0.0; d];
    if lmax <= 0.0 {
        return beta;
    }
    for (j, &lam) in e.values.iter().enumerate() {
        if lam <= RANK_TOL * lmax {
            continue;
        }
        let proj: f64 = (0..d).map(|i| e.vectors[(i, j)] * b[i]).sum::<f64>() / lam;
        for (i, bi) in beta.iter_mut().enumerate() {
            *bi += proj * e.vectors[(i, j)];
        }
    }
    beta
}
