use super::*;
use crate::linalg::dot;

fn noise_of(ds: &Dataset) -> Vec<f64> {
    let t = ds.truth().unwrap();
    let c = t.coefficients.as_ref().unwrap();
    ds.x()
        .iter_rows()
        .zip(ds.y())
        .zip(&t.labels)
        .map(|((r, y), &k)| y - dot(r, c.beta(k)))
        .collect()
}

#[test]
fn presets() {
    let g = GeneratorSpec::gaussian_experiment(10, 0.01, 0);
    assert_eq!(g.coefficients.betas(), &[vec![-0.93, 0.1], vec![0.0, 0.0]]);
    assert_eq!(g.weights, vec![0.5, 0.5]);
    assert_eq!(g.noise, NoiseKind::Gaussian);
    let u = GeneratorSpec::uniform_experiment(10, 0.01, 0);
    assert_eq!(u.coefficients.betas(), &[vec![-1.61, 1.25], vec![0.0, 0.0]]);
    assert_eq!(u.noise, NoiseKind::UniformPm1);
    assert_eq!(u.noise_scale, 0.01);
}

#[test]
fn covariate_layout() {
    let ds = generate(&GeneratorSpec::gaussian_experiment(200, 0.01, 3)).unwrap();
    for r in ds.x().iter_rows() {
        assert!((0.0..1.0).contains(&r[0]));
        assert_eq!(r[1], 1.0);
    }
}

#[test]
fn noiseless_is_exact() {
    for noise in [NoiseKind::Gaussian, NoiseKind::UniformPm1, NoiseKind::MdsScaled] {
        let mut spec = GeneratorSpec::uniform_experiment(50, 0.0, 11);
        spec.noise = noise;
        let ds = generate(&spec).unwrap();
        assert!(noise_of(&ds).iter().all(|&e| e == 0.0));
    }
}

#[test]
fn deterministic() {
    let spec = GeneratorSpec::gaussian_experiment(100, 0.3, 5);
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    let other = GeneratorSpec {
        seed: 6,
        ..spec.clone()
    };
    assert_ne!(generate(&spec).unwrap().y(), generate(&other).unwrap().y());
}

#[test]
fn counts_follow_weights() {
    assert_eq!(exact_counts(&[0.5, 0.5], 7), vec![4, 3]);
    assert_eq!(exact_counts(&[0.2, 0.3, 0.5], 10), vec![2, 3, 5]);
    assert_eq!(exact_counts(&[0.25, 0.25, 0.5], 3), vec![1, 1, 1]);
    assert_eq!(exact_counts(&[0.1, 0.1, 0.8], 4), vec![1, 0, 3]);
    let spec = GeneratorSpec {
        n: 101,
        weights: vec![0.3, 0.7],
        ..GeneratorSpec::gaussian_experiment(101, 0.1, 2)
    };
    let ds = generate(&spec).unwrap();
    let ones = ds.truth().unwrap().labels.iter().filter(|&&l| l == 1).count();
    assert_eq!(ones, 71);
}

#[test]
fn invalid_specs() {
    let base = GeneratorSpec::gaussian_experiment(10, 0.1, 0);
    let bad = [
        GeneratorSpec { n: 0, ..base.clone() },
        GeneratorSpec {
            weights: vec![0.6, 0.6],
            ..base.clone()
        },
        GeneratorSpec {
            weights: vec![1.0],
            ..base.clone()
        },
        GeneratorSpec {
            weights: vec![0.95, 0.05],
            ..base.clone()
        },
        GeneratorSpec {
            noise_scale: -1.0,
            ..base.clone()
        },
        GeneratorSpec {
            covariates: Covariates::Custom(Matrix::zeros(3, 2)),
            ..base.clone()
        },
    ];
    for s in &bad {
        assert!(generate(s).is_err(), "{s:?}");
    }
}

#[test]
fn noise_means_vanish() {
    let n = 100_000;
    for (i, noise) in [
        NoiseKind::Gaussian,
        NoiseKind::UniformPm1,
        NoiseKind::Rademacher,
        NoiseKind::MdsScaled,
    ]
    .into_iter()
    .enumerate()
    {
        let spec = GeneratorSpec {
            noise,
            noise_scale: 1.0,
            ..GeneratorSpec::gaussian_experiment(n, 1.0, 100 + i as u64)
        };
        let eps = noise_of(&generate(&spec).unwrap());
        let mean = eps.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "{noise:?}: {mean}");
    }
}

#[test]
fn mds_conditional_mean() {
    let n = 100_000;
    let spec = GeneratorSpec {
        noise: NoiseKind::MdsScaled,
        noise_scale: 1.0,
        ..GeneratorSpec::gaussian_experiment(n, 1.0, 77)
    };
    let eps = noise_of(&generate(&spec).unwrap());
    for positive in [true, false] {
        let next: Vec<f64> = eps
            .windows(2)
            .filter(|w| (w[0] > 0.0) == positive)
            .map(|w| w[1])
            .collect();
        let m = next.len() as f64;
        let mean = next.iter().sum::<f64>() / m;
        let sd = (next.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
        assert!(mean.abs() <= 4.0 * sd / m.sqrt(), "{positive}: {mean}");
    }
    // heteroscedastic: the scale tracks the previous magnitude
    let small: Vec<f64> = eps
        .windows(2)
        .filter(|w| w[0].abs() < 0.1)
        .map(|w| w[1] * w[1])
        .collect();
    let large: Vec<f64> = eps
        .windows(2)
        .filter(|w| w[0].abs() > 1.0)
        .map(|w| w[1] * w[1])
        .collect();
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(avg(&large) > 1.5 * avg(&small));
}

#[test]
fn counterexample_quarters() {
    let (delta, sigma) = (0.25, 1.0);
    let ds = counterexample(&CounterexampleSpec {
        n: 4,
        delta,
        sigma,
        seed: 1,
    })
    .unwrap();
    let mut y = ds.y().to_vec();
    y.sort_by(f64::total_cmp);
    assert_eq!(y, vec![-sigma, delta - sigma, sigma, delta + sigma]);
    assert!(ds.x().as_slice().iter().all(|&v| v == 1.0));
    let t = ds.truth().unwrap();
    assert_eq!(t.coefficients.as_ref().unwrap().betas(), &[vec![delta], vec![0.0]]);

    let ds = counterexample(&CounterexampleSpec {
        n: 400,
        delta,
        sigma,
        seed: 2,
    })
    .unwrap();
    let (w, _) = collapse_duplicates(&ds);
    assert_eq!(w.n(), 4);
}

#[test]
fn counterexample_draws() {
    let ds = counterexample(&CounterexampleSpec {
        n: 1001,
        delta: 0.25,
        sigma: 1.0,
        seed: 3,
    })
    .unwrap();
    let ones = ds.truth().unwrap().labels.iter().filter(|&&l| l == 1).count();
    assert!(ones > 400 && ones < 600);
    for (y, &k) in ds.y().iter().zip(&ds.truth().unwrap().labels) {
        let base = if k == 0 { 0.25 } else { 0.0 };
        assert_eq!((y - base).abs(), 1.0);
    }
}

#[test]
fn counterexample_errors() {
    for (delta, sigma) in [(-0.1, 1.0), (0.1, 0.0), (f64::NAN, 1.0)] {
        assert!(counterexample(&CounterexampleSpec {
            n: 4,
            delta,
            sigma,
            seed: 0
        })
        .is_err());
    }
    // degenerate but allowed
    let ds = counterexample(&CounterexampleSpec {
        n: 8,
        delta: 0.0,
        sigma: 1.0,
        seed: 0,
    })
    .unwrap();
    let c = ds.truth().unwrap().coefficients.clone().unwrap();
    assert_eq!(c.beta(0), c.beta(1));
}

#[test]
fn collapse_counts() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![1.0], vec![1.0]]).unwrap();
    let ds = Dataset::new(x, vec![3.0, 3.0, 3.0, 4.0]).unwrap();
    let (c, w) = collapse_duplicates(&ds);
    assert_eq!(c.y(), &[3.0, 3.0, 4.0]);
    assert_eq!(c.x().as_slice(), &[1.0, 2.0, 1.0]);
    assert_eq!(w, vec![2.0, 1.0, 1.0]);
}

#[test]
fn csv_round_trip() {
    let with_truth = generate(&GeneratorSpec::gaussian_experiment(25, 0.01, 7)).unwrap();
    let cx = counterexample(&CounterexampleSpec {
        n: 8,
        delta: 0.25,
        sigma: 1.0,
        seed: 1,
    })
    .unwrap();
    let bare = {
        let x = Matrix::from_rows(&[vec![1e-300, -0.1], vec![3.0, f64::MAX]]).unwrap();
        Dataset::new(x, vec![-0.0, 1.0 / 3.0]).unwrap()
    };
    for ds in [with_truth, cx, bare] {
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf).unwrap();
        let back = read_csv_from(buf.as_slice()).unwrap();
        assert_eq!(back.x().as_slice(), ds.x().as_slice());
        assert_eq!(back.y(), ds.y());
        assert_eq!(back.truth(), ds.truth());
        let mut again = Vec::new();
        write_csv_to(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }
}

#[test]
fn csv_file_io() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let ds = generate(&GeneratorSpec::uniform_experiment(10, 0.01, 1)).unwrap();
    write_csv(&ds, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.lines().any(|l| l == "x_0,x_1,y,label"));
    assert_eq!(read_csv(&path).unwrap(), ds);
}

#[test]
fn csv_missing_column() {
    let err = read_csv_from("x_0,x_1,label\n1,2,0\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains('y'), "{err}");
    let err = read_csv_from("x_1,y\n1,2\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("x_0"), "{err}");
    let err = read_csv_from("x_0,x_2,y\n1,2,3\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("x_1"), "{err}");
    assert!(read_csv_from("x_0,y\n1,abc\n".as_bytes()).is_err());
}
