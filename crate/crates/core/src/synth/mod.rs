//! Seeded synthetic mixtures: the two-cluster uniform-covariate experiments,
//! martingale-difference noise, and the unidentifiable ±σ counterexample.
//!
//! Cluster sizes are realized as exact proportions of `n` and then shuffled,
//! so every cluster is non-degenerate at every sample size.

mod csv_io;
mod rng;

pub use csv_io::{read_csv, read_csv_from, write_csv, write_csv_to};
pub use rng::Stream;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::types::{CoefficientSet, Dataset, Truth};

#[derive(Debug, Clone, PartialEq)]
pub enum Covariates {
    /// `d - 1` columns drawn from `UNIFORM(0, 1)` followed by a constant 1.
    Uniform01WithIntercept,
    /// `d` i.i.d. standard normal columns.
    IidGaussian,
    /// Fixed covariates, `n x d`.
    Custom(Matrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    /// `UNIFORM(-1, 1)`.
    UniformPm1,
    Rademacher,
    /// `ε_i = η_i (1 + min(|ε_{i-1}|, 1) / 2)` with i.i.d. standard normal `η_i`:
    /// the scale depends only on the past, so `{ε_i}` is a martingale
    /// difference sequence with bounded conditional variance (not i.i.d.).
    MdsScaled,
}

impl NoiseKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Self::Gaussian),
            "uniform_pm1" | "uniform" => Ok(Self::UniformPm1),
            "rademacher" => Ok(Self::Rademacher),
            "mds_scaled" => Ok(Self::MdsScaled),
            other => Err(Error::Invalid(format!("unknown noise kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    /// Mixing proportions, one per cluster, summing to 1.
    pub weights: Vec<f64>,
    pub coefficients: CoefficientSet,
    pub covariates: Covariates,
    pub noise: NoiseKind,
    pub noise_scale: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Two equal clusters, `x = (UNIFORM(0,1), 1)`, `β₁ = (-0.93, 0.1)`,
    /// `β₂ = (0, 0)`, Gaussian noise.
    pub fn gaussian_experiment(n: usize, noise_scale: f64, seed: u64) -> Self {
        Self {
            n,
            weights: vec![0.5, 0.5],
            coefficients: CoefficientSet::new(vec![vec![-0.93, 0.1], vec![0.0, 0.0]]).unwrap(),
            covariates: Covariates::Uniform01WithIntercept,
            noise: NoiseKind::Gaussian,
            noise_scale,
            seed,
        }
    }

    /// As [`Self::gaussian_experiment`] with `β₁ = (-1.61, 1.25)` and
    /// `UNIFORM(-1, 1)` noise.
    pub fn uniform_experiment(n: usize, noise_scale: f64, seed: u64) -> Self {
        Self {
            coefficients: CoefficientSet::new(vec![vec![-1.61, 1.25], vec![0.0, 0.0]]).unwrap(),
            noise: NoiseKind::UniformPm1,
            ..Self::gaussian_experiment(n, noise_scale, seed)
        }
    }

    pub fn k(&self) -> usize {
        self.coefficients.k()
    }

    pub fn d(&self) -> usize {
        self.coefficients.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("generator needs n >= 1".into()));
        }
        if self.weights.len() != self.k() {
            return Err(Error::Dimension(format!(
                "{} weights for K={} clusters",
                self.weights.len(),
                self.k()
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Invalid("weights must be finite and >= 0".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("weights sum to {total}, expected 1")));
        }
        let wmin = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        if self.n as f64 * wmin < 1.0 {
            return Err(Error::Invalid(format!(
                "n * min weight = {} < 1 leaves a cluster empty",
                self.n as f64 * wmin
            )));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::Invalid("noise scale must be finite and >= 0".into()));
        }
        if let Covariates::Custom(m) = &self.covariates {
            if m.rows() != self.n || m.cols() != self.d() {
                return Err(Error::Dimension(format!(
                    "custom covariates are {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    self.n,
                    self.d()
                )));
            }
        }
        Ok(())
    }
}

/// Integer cluster sizes closest to `weights * n`: floors first, then the
/// remainder goes to the largest fractional parts (lowest index on ties).
pub fn exact_counts(weights: &[f64], n: usize) -> Vec<usize> {
    let raw: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Draws a dataset with truth attached.
///
/// Stream order: label shuffle, then for each sample its covariate row
/// followed by its noise draw.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d());
    let mut rng = Stream::new(spec.seed);

    let counts = exact_counts(&spec.weights, n);
    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(k, c))
        .collect();
    rng.shuffle(&mut labels);

    let mut x = Matrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    let mut prev_eps: f64 = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let row = x.row_mut(i);
        match &spec.covariates {
            Covariates::Uniform01WithIntercept => {
                for v in row[..d - 1].iter_mut() {
                    *v = rng.uniform01();
                }
                row[d - 1] = 1.0;
            }
            Covariates::IidGaussian => row.iter_mut().for_each(|v| *v = rng.gaussian()),
            Covariates::Custom(m) => row.copy_from_slice(m.row(i)),
        }
        let eps = match spec.noise {
            NoiseKind::Gaussian => rng.gaussian(),
            NoiseKind::UniformPm1 => rng.uniform_pm1(),
            NoiseKind::Rademacher => rng.rademacher(),
            NoiseKind::MdsScaled => rng.gaussian() * (1.0 + prev_eps.abs().min(1.0) / 2.0),
        };
        prev_eps = eps;
        y.push(dot(x.row(i), spec.coefficients.beta(label)) + spec.noise_scale * eps);
    }

    Dataset::new(x, y)?.with_truth(Truth {
        labels,
        coefficients: Some(spec.coefficients.clone()),
        noise_scale: Some(spec.noise_scale),
    })
}

/// Two clusters on `x = 1` with `β ∈ {δ, 0}` and noise `σ ε`, `ε = ±1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleSpec {
    pub n: usize,
    pub delta: f64,
    pub sigma: f64,
    pub seed: u64,
}

/// Responses take the four values `{σ, -σ, δ+σ, δ-σ}`. When `n` is divisible
/// by 4 each (cluster, sign) combination occurs exactly `n/4` times in seeded
/// order; otherwise cluster and sign are drawn as fair coins. Truth stores
/// `β₁ = δ` (label 0) and `β₂ = 0` (label 1).
pub fn counterexample(spec: &CounterexampleSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::Invalid("counterexample needs n >= 1".into()));
    }
    if !(spec.delta.is_finite() && spec.delta >= 0.0) {
        return Err(Error::Invalid(format!("delta {} must be >= 0", spec.delta)));
    }
    if !(spec.sigma.is_finite() && spec.sigma > 0.0) {
        return Err(Error::Invalid(format!("sigma {} must be > 0", spec.sigma)));
    }
    if spec.delta == 0.0 {
        log::warn!("delta = 0 makes both clusters identical; the mixture is degenerate");
    } else if spec.delta >= spec.sigma {
        log::warn!("delta >= sigma: outside the non-identifiable regime delta < sigma");
    }

    let n = spec.n;
    let mut rng = Stream::new(spec.seed);
    let combos: Vec<(usize, f64)> = if n.is_multiple_of(4) {
        let mut c: Vec<(usize, f64)> = [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)]
            .iter()
            .flat_map(|&combo| std::iter::repeat_n(combo, n / 4))
            .collect();
        rng.shuffle(&mut c);
        c
    } else {
        (0..n)
            .map(|_| {
                let k = (rng.next_u64() >> 63) as usize;
                (k, rng.rademacher())
            })
            .collect()
    };
    let betas = [spec.delta, 0.0];
    let labels: Vec<usize> = combos.iter().map(|c| c.0).collect();
    let y: Vec<f64> = combos.iter().map(|&(k, eps)| betas[k] + spec.sigma * eps).collect();
    let x = Matrix::from_row_major(n, 1, vec![1.0; n])?;
    Dataset::new(x, y)?.with_truth(Truth {
        labels,
        coefficients: Some(CoefficientSet::new(vec![vec![spec.delta], vec![0.0]])?),
        noise_scale: Some(spec.sigma),
    })
}

/// Merges identical samples into one weighted sample each, in order of first
/// appearance. Truth is dropped.
pub fn collapse_duplicates(ds: &Dataset) -> (Dataset, Vec<f64>) {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ys = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (r, &y) in ds.x().iter_rows().zip(ds.y()) {
        let key: Vec<u64> = r.iter().chain([y].iter()).map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&slot) => weights[slot] += 1.0,
            None => {
                index.insert(key, rows.len());
                rows.push(r.to_vec());
                ys.push(y);
                weights.push(1.0);
            }
        }
    }
    let x = Matrix::from_rows(&rows).expect("rows share the dataset width");
    (Dataset::new(x, ys).expect("values come from a valid dataset"), weights)
}

#[cfg(test)]
mod tests;
