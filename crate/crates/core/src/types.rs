//! Domain types shared by every solver.

use std::fmt;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// The `K` coefficient vectors of a mixture, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    betas: Vec<Vec<f64>>,
}

impl CoefficientSet {
    pub fn new(betas: Vec<Vec<f64>>) -> Result<Self> {
        let d = match betas.first() {
            Some(b) => b.len(),
            None => return Err(Error::Invalid("coefficient set needs K >= 1".into())),
        };
        if betas.iter().any(|b| b.len() != d) {
            return Err(Error::Dimension("coefficient vectors of unequal length".into()));
        }
        if betas.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(Self { betas })
    }

    pub fn zeros(k: usize, d: usize) -> Self {
        Self {
            betas: vec![vec![0.0; d]; k.max(1)],
        }
    }

    pub fn k(&self) -> usize {
        self.betas.len()
    }

    pub fn dim(&self) -> usize {
        self.betas[0].len()
    }

    pub fn beta(&self, k: usize) -> &[f64] {
        &self.betas[k]
    }

    pub fn betas(&self) -> &[Vec<f64>] {
        &self.betas
    }

    /// Reorders clusters so that cluster `k` of the result is cluster `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            betas: order.iter().map(|&k| self.betas[k].clone()).collect(),
        }
    }
}

/// Ground truth attached to a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub labels: Vec<usize>,
    pub coefficients: Option<CoefficientSet>,
    pub noise_scale: Option<f64>,
}

impl Truth {
    pub fn k(&self) -> usize {
        match &self.coefficients {
            Some(c) => c.k(),
            None => self.labels.iter().max().map_or(1, |m| m + 1),
        }
    }
}

/// Covariates, responses and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    truth: Option<Truth>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::Invalid("dataset needs n >= 1 and d >= 1".into()));
        }
        if x.rows() != y.len() {
            return Err(Error::Dimension(format!(
                "x has {} rows but y has {} entries",
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
        Ok(Self { x, y, truth: None })
    }

    pub fn with_truth(mut self, truth: Truth) -> Result<Self> {
        if truth.labels.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} truth labels for {} samples",
                truth.labels.len(),
                self.n()
            )));
        }
        if let Some(c) = &truth.coefficients {
            if c.dim() != self.d() {
                return Err(Error::Dimension(format!(
                    "truth coefficients have dimension {}, data has {}",
                    c.dim(),
                    self.d()
                )));
            }
            if let Some(&bad) = truth.labels.iter().find(|&&l| l >= c.k()) {
                return Err(Error::Invalid(format!("truth label {bad} outside [0, {})", c.k())));
            }
        }
        if let Some(s) = truth.noise_scale {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::Invalid(format!("noise scale {s} must be >= 0")));
            }
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn truth(&self) -> Option<&Truth> {
        self.truth.as_ref()
    }

    pub fn without_truth(&self) -> Dataset {
        Dataset {
            x: self.x.clone(),
            y: self.y.clone(),
            truth: None,
        }
    }

    /// The first `n` samples, truth labels included.
    pub fn prefix(&self, n: usize) -> Dataset {
        let n = n.min(self.n());
        Dataset {
            x: self.x.prefix(n),
            y: self.y[..n].to_vec(),
            truth: self.truth.as_ref().map(|t| Truth {
                labels: t.labels[..n].to_vec(),
                coefficients: t.coefficients.clone(),
                noise_scale: t.noise_scale,
            }),
        }
    }
}

/// Loss exponent `p` of the objective `(1/n) Σ |y_i - x_i'β|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossConfig {
    Abs,
    Squared,
}

impl LossConfig {
    pub fn from_p(p: u8) -> Result<Self> {
        match p {
            1 => Ok(Self::Abs),
            2 => Ok(Self::Squared),
            _ => Err(Error::Invalid(format!("loss exponent p={p}, expected 1 or 2"))),
        }
    }

    pub fn p(self) -> u8 {
        match self {
            Self::Abs => 1,
            Self::Squared => 2,
        }
    }

    #[inline]
    pub fn of(self, residual: f64) -> f64 {
        match self {
            Self::Abs => residual.abs(),
            Self::Squared => residual * residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegKind {
    None,
    L2,
    L1,
    L0,
}

impl RegKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::L2 => "l2",
            Self::L1 => "l1",
            Self::L0 => "l0",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "" => Ok(Self::None),
            "l2" | "2" => Ok(Self::L2),
            "l1" | "1" => Ok(Self::L1),
            "l0" | "0" => Ok(Self::L0),
            other => Err(Error::Invalid(format!("unknown regularization `{other}`"))),
        }
    }
}

impl fmt::Display for RegKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-cluster norm constraints `‖β_k‖_q <= bounds[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegConstraint {
    kind: RegKind,
    bounds: Vec<f64>,
}

impl RegConstraint {
    pub fn new(kind: RegKind, bounds: Vec<f64>) -> Result<Self> {
        if kind != RegKind::None {
            if bounds.is_empty() {
                return Err(Error::Invalid("norm constraint needs one bound per cluster".into()));
            }
            for &b in &bounds {
                if !(b.is_finite() && b >= 0.0) {
                    return Err(Error::Invalid(format!("norm bound {b} must be finite and >= 0")));
                }
                if kind == RegKind::L0 && b.fract() != 0.0 {
                    return Err(Error::Invalid(format!("l0 bound {b} must be an integer")));
                }
            }
        }
        Ok(Self { kind, bounds })
    }

    pub fn none() -> Self {
        Self {
            kind: RegKind::None,
            bounds: Vec::new(),
        }
    }

    /// The same bound for each of the `k` clusters.
    pub fn uniform(kind: RegKind, k: usize, bound: f64) -> Result<Self> {
        if kind == RegKind::None {
            return Ok(Self::none());
        }
        Self::new(kind, vec![bound; k])
    }

    pub fn kind(&self) -> RegKind {
        self.kind
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Checks the constraint against a problem with `k` clusters in dimension `d`.
    pub fn validate(&self, k: usize, d: usize) -> Result<()> {
        if self.kind == RegKind::None {
            return Ok(());
        }
        if self.bounds.len() != k {
            return Err(Error::Dimension(format!(
                "{} norm bounds for K={k} clusters",
                self.bounds.len()
            )));
        }
        if self.kind == RegKind::L0 {
            if let Some(b) = self.bounds.iter().find(|&&b| b > d as f64) {
                return Err(Error::Invalid(format!("l0 bound {b} exceeds d={d}")));
            }
        }
        Ok(())
    }

    pub fn cluster(&self, k: usize) -> ClusterReg {
        match self.kind {
            RegKind::None => ClusterReg::None,
            RegKind::L2 => ClusterReg::L2(self.bounds[k]),
            RegKind::L1 => ClusterReg::L1(self.bounds[k]),
            RegKind::L0 => ClusterReg::L0(self.bounds[k] as usize),
        }
    }

    /// True when every cluster carries the same constraint, i.e. clusters are
    /// interchangeable.
    pub fn is_symmetric(&self) -> bool {
        self.bounds.windows(2).all(|w| w[0] == w[1])
    }
}

/// The norm constraint of a single cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterReg {
    None,
    L2(f64),
    L1(f64),
    L0(usize),
}

impl ClusterReg {
    pub fn kind(self) -> RegKind {
        match self {
            Self::None => RegKind::None,
            Self::L2(_) => RegKind::L2,
            Self::L1(_) => RegKind::L1,
            Self::L0(_) => RegKind::L0,
        }
    }
}

/// One cluster label per sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Invalid(format!("label {bad} outside [0, {k})")));
        }
        Ok(Self { labels })
    }

    pub(crate) fn from_labels(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sample indices of each cluster, ascending.
    pub fn members(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Output of every multi-cluster solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub coefficients: CoefficientSet,
    pub assignment: Assignment,
    pub objective: f64,
    pub certified_optimal: bool,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}
