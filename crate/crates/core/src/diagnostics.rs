//! Convergence-rate diagnostics for a single regression: Gram eigenvalue
//! trajectories, estimation error along growing prefixes, and the shapes of
//! the strong-consistency rate bounds (all with constant 1).
//!
//! ```text
//! bound_thm2      = λmax^{1/2} (log λmax)^{1/2+δ} / λmin
//! bound_thm3      = λmax^{1/2} (log λmax)^{1/2}   / λmin
//! bound_classical =            (log λmax)^{1/2}   / λmin^{1/2}
//! ```
//!
//! A bound is missing when `λmax <= 1` (nonpositive log) or `λmin <= 0`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{parse_err, Error, Result};
use crate::linalg::{dist2, eigen_extremes, gram};
use crate::numfmt::fmt17;
use crate::regress::fit;
use crate::types::{ClusterReg, Dataset, LossConfig};

pub const RATE_HEADER: &str = "n,lambda_min,lambda_max,error,bound_thm2,bound_thm3,bound_classical";

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `‖β^n - β‖₂` for the fit on the first `n` samples.
    pub error: f64,
    pub bound_thm2: Option<f64>,
    pub bound_thm3: Option<f64>,
    pub bound_classical: Option<f64>,
    pub delta_slack: f64,
}

/// The three bound shapes for given Gram extremes.
pub fn bound_shapes(lambda_min: f64, lambda_max: f64, delta_slack: f64) -> [Option<f64>; 3] {
    if !(lambda_max > 1.0 && lambda_min > 0.0) {
        return [None; 3];
    }
    let log = lambda_max.ln();
    let root_max = lambda_max.sqrt();
    [
        Some(root_max * log.powf(0.5 + delta_slack) / lambda_min),
        Some(root_max * log.sqrt() / lambda_min),
        Some(log.sqrt() / lambda_min.sqrt()),
    ]
}

/// Fits the first `n` samples for every checkpoint `n` and records the error
/// against the single true coefficient vector.
pub fn rate_trace(
    ds: &Dataset,
    checkpoints: &[usize],
    loss: LossConfig,
    reg: ClusterReg,
    delta_slack: f64,
) -> Result<Vec<RateRow>> {
    let truth = ds
        .truth()
        .and_then(|t| t.coefficients.as_ref())
        .ok_or_else(|| Error::Invalid("rate trace needs true coefficients".into()))?;
    if truth.k() != 1 {
        return Err(Error::Invalid(format!(
            "rate trace needs K=1 truth, got K={}",
            truth.k()
        )));
    }
    if !(delta_slack.is_finite() && delta_slack > 0.0) {
        return Err(Error::Invalid(format!("delta slack {delta_slack} must be > 0")));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(
            "checkpoints must be non-empty and strictly increasing".into(),
        ));
    }
    if checkpoints[0] < ds.d() || *checkpoints.last().unwrap() > ds.n() {
        return Err(Error::Invalid(format!(
            "checkpoints must lie in [d, n] = [{}, {}]",
            ds.d(),
            ds.n()
        )));
    }
    let beta = truth.beta(0);
    checkpoints
        .par_iter()
        .map(|&n| {
            let x = ds.x().prefix(n);
            let f = fit(&x, &ds.y()[..n], loss, reg)?;
            let (lambda_min, lambda_max) = eigen_extremes(&gram(&x));
            let [bound_thm2, bound_thm3, bound_classical] = bound_shapes(lambda_min, lambda_max, delta_slack);
            Ok(RateRow {
                n,
                lambda_min,
                lambda_max,
                error: dist2(&f.beta, beta),
                bound_thm2,
                bound_thm3,
                bound_classical,
                delta_slack,
            })
        })
        .collect()
}

/// Least-squares slope of `log(error)` against `log(n)` over rows with a
/// positive error.
pub fn rate_slope(rows: &[RateRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > 0.0 && r.error.is_finite() && r.n > 0)
        .map(|r| ((r.n as f64).ln(), r.error.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Invalid(format!(
            "rate slope needs at least 4 rows with positive error, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("rate slope needs at least two distinct n".into()));
    }
    Ok(sxy / sxx)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

pub fn write_rate_csv_to<W: Write>(rows: &[RateRow], mut out: W) -> Result<()> {
    if let Some(r) = rows.first() {
        writeln!(out, "# delta_slack = {}", fmt17(r.delta_slack))?;
    }
    writeln!(out, "{RATE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            fmt17(r.lambda_min),
            fmt17(r.lambda_max),
            fmt17(r.error),
            opt(r.bound_thm2),
            opt(r.bound_thm3),
            opt(r.bound_classical)
        )?;
    }
    Ok(())
}

pub fn write_rate_csv(rows: &[RateRow], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_rate_csv_to(rows, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_rate_csv_from<R: Read>(mut input: R) -> Result<Vec<RateRow>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut delta_slack = f64::NAN;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, line) in text.lines().enumerate() {
        let ln = idx + 1;
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(v) = meta.trim().strip_prefix("delta_slack =") {
                delta_slack = v
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad delta_slack `{}`", v.trim())))?;
            }
            continue;
        }
        if !seen_header {
            if line != RATE_HEADER {
                for col in RATE_HEADER.split(',') {
                    if !line.split(',').any(|c| c == col) {
                        return Err(Error::MissingColumn(col.into()));
                    }
                }
                return Err(parse_err(ln, format!("expected header `{RATE_HEADER}`")));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(parse_err(ln, format!("expected 7 fields, found {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| parse_err(ln, format!("bad number `{s}`"))) };
        let maybe = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        rows.push(RateRow {
            n: f[0].parse().map_err(|_| parse_err(ln, format!("bad n `{}`", f[0])))?,
            lambda_min: num(f[1])?,
            lambda_max: num(f[2])?,
            error: num(f[3])?,
            bound_thm2: maybe(f[4])?,
            bound_thm3: maybe(f[5])?,
            bound_classical: maybe(f[6])?,
            delta_slack,
        });
    }
    if !seen_header {
        return Err(Error::MissingColumn("n".into()));
    }
    Ok(rows)
}

pub fn read_rate_csv(path: impl AsRef<Path>) -> Result<Vec<RateRow>> {
    read_rate_csv_from(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::synth::{generate, Covariates, GeneratorSpec, NoiseKind};
    use crate::types::{CoefficientSet, Truth};

    fn row(n: usize, error: f64) -> RateRow {
        RateRow {
            n,
            lambda_min: 1.0,
            lambda_max: 2.0,
            error,
            bound_thm2: None,
            bound_thm3: None,
            bound_classical: None,
            delta_slack: 0.1,
        }
    }

    fn single(n: usize, seed: u64) -> Dataset {
        generate(&GeneratorSpec {
            n,
            weights: vec![1.0],
            coefficients: CoefficientSet::new(vec![vec![1.0, -0.5, 0.25]]).unwrap(),
            covariates: Covariates::IidGaussian,
            noise: NoiseKind::Gaussian,
            noise_scale: 1.0,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn slope_of_power_laws() {
        let ns = [100, 1000, 10_000, 100_000];
        let rows: Vec<RateRow> = ns.iter().map(|&n| row(n, 3.0 / (n as f64).sqrt())).collect();
        assert!((rate_slope(&rows).unwrap() + 0.5).abs() < 1e-12);
        let rows: Vec<RateRow> = ns.iter().map(|&n| row(n, 0.7)).collect();
        assert!(rate_slope(&rows).unwrap().abs() < 1e-12);
        let rows: Vec<RateRow> = ns.iter().map(|&n| row(n, (n as f64).powf(-1.3))).collect();
        assert!((rate_slope(&rows).unwrap() + 1.3).abs() < 1e-12);
        assert!(rate_slope(&rows[..3]).is_err());
        let mut zero = rows.clone();
        zero[0].error = 0.0;
        assert!(rate_slope(&zero).is_err());
    }

    #[test]
    fn constant_covariate() {
        let n = 50;
        let x = Matrix::from_row_major(n, 1, vec![1.0; n]).unwrap();
        let y: Vec<f64> = (0..n).map(|i| 2.0 + if i % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let ds = Dataset::new(x, y)
            .unwrap()
            .with_truth(Truth {
                labels: vec![0; n],
                coefficients: Some(CoefficientSet::new(vec![vec![2.0]]).unwrap()),
                noise_scale: Some(0.1),
            })
            .unwrap();
        let rows = rate_trace(&ds, &[1, 2, 10, 50], LossConfig::Squared, ClusterReg::None, 0.1).unwrap();
        for r in &rows {
            assert!((r.lambda_max - r.n as f64).abs() < 1e-12 * r.n as f64);
            assert_eq!(r.lambda_min, r.lambda_max);
        }
        assert!(rows[0].bound_thm2.is_none());
        assert!((rows[1].error - 0.0).abs() < 1e-15);
        let b = rows[3].bound_classical.unwrap();
        assert!((b - (50f64.ln() / 50.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_rows() {
        let x = Matrix::identity(3);
        let ds = Dataset::new(x, vec![1.0, 2.0, 3.0])
            .unwrap()
            .with_truth(Truth {
                labels: vec![0; 3],
                coefficients: Some(CoefficientSet::new(vec![vec![1.0, 2.0, 3.0]]).unwrap()),
                noise_scale: Some(0.0),
            })
            .unwrap();
        let rows = rate_trace(&ds, &[3], LossConfig::Squared, ClusterReg::None, 0.1).unwrap();
        assert!((rows[0].lambda_min - 1.0).abs() < 1e-15);
        assert!((rows[0].lambda_max - 1.0).abs() < 1e-15);
        assert!(rows[0].error < 1e-15);
        assert_eq!(rows[0].bound_thm3, None);
    }

    #[test]
    fn bound_shape_values() {
        let e = std::f64::consts::E;
        let [t2, t3, c] = bound_shapes(4.0, e * e, 0.25);
        // log λmax = 2
        assert!((t2.unwrap() - e * 2f64.powf(0.75) / 4.0).abs() < 1e-14);
        assert!((t3.unwrap() - e * 2f64.sqrt() / 4.0).abs() < 1e-14);
        assert!((c.unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-14);
        assert_eq!(bound_shapes(0.0, 10.0, 0.1), [None; 3]);
        assert_eq!(bound_shapes(0.5, 1.0, 0.1), [None; 3]);
    }

    #[test]
    fn iid_eigenvalues_grow_linearly() {
        let ds = single(20_000, 3);
        let rows = rate_trace(&ds, &[2000, 20_000], LossConfig::Squared, ClusterReg::None, 0.1).unwrap();
        for r in &rows {
            // second moment is the identity
            assert!((r.lambda_min / r.n as f64 - 1.0).abs() < 0.1, "{r:?}");
            assert!((r.lambda_max / r.n as f64 - 1.0).abs() < 0.1, "{r:?}");
        }
        assert!(rows[1].lambda_max >= rows[0].lambda_max);
        // error tracks the classical shape up to a constant fitted at the first row
        let c = rows[0].error / rows[0].bound_classical.unwrap();
        assert!(rows[1].error <= 10.0 * c * rows[1].bound_classical.unwrap());
    }

    #[test]
    fn validation() {
        let ds = single(100, 1);
        let go = |cp: &[usize], delta: f64| rate_trace(&ds, cp, LossConfig::Squared, ClusterReg::None, delta);
        assert!(go(&[10, 50], 0.1).is_ok());
        assert!(go(&[50, 10], 0.1).is_err());
        assert!(go(&[2, 10], 0.1).is_err());
        assert!(go(&[10, 101], 0.1).is_err());
        assert!(go(&[10], 0.0).is_err());
        let two = generate(&GeneratorSpec::gaussian_experiment(20, 0.1, 0)).unwrap();
        assert!(rate_trace(&two, &[10], LossConfig::Squared, ClusterReg::None, 0.1).is_err());
        assert!(rate_trace(&two.without_truth(), &[10], LossConfig::Squared, ClusterReg::None, 0.1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = single(500, 2);
        let mut rows = rate_trace(&ds, &[3, 10, 100, 500], LossConfig::Squared, ClusterReg::None, 0.2).unwrap();
        rows[0].bound_thm2 = None;
        let mut buf = Vec::new();
        write_rate_csv_to(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(1), Some(RATE_HEADER));
        assert_eq!(read_rate_csv_from(buf.as_slice()).unwrap(), rows);

        let err = read_rate_csv_from("n,lambda_min,lambda_max,bound_thm2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("error"), "{err}");
    }
}
