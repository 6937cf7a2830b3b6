use mlrmip::heuristic::multistart_weighted;
use mlrmip::milp::brute_force_weighted;
use mlrmip::synth::{collapse_duplicates, generate, GeneratorSpec};
use mlrmip::*;

fn truth_coeffs(ds: &Dataset) -> CoefficientSet {
    ds.truth().unwrap().coefficients.clone().unwrap()
}

// Used to stop with a spurious "unbounded" pivot inside the LAD simplex.
#[test]
fn uniform_experiment_abs_loss_multistart() {
    let ds = generate(&GeneratorSpec::uniform_experiment(1000, 0.01, 2)).unwrap();
    let opts = AmOptions {
        seed: 2,
        ..AmOptions::default()
    };
    let r = multistart(&ds, 2, LossConfig::Abs, &RegConstraint::none(), &opts).unwrap();
    let m = match_permutation(&r.coefficients, &truth_coeffs(&ds)).unwrap();
    assert!(m.max_error() < 0.05, "{:?}", m.errors);
}

#[test]
fn generate_solve_recover_roundtrip_through_csv() {
    let ds = generate(&GeneratorSpec::gaussian_experiment(16, 0.0, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_csv(&ds, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back, ds);

    let r = branch_and_bound(
        &back,
        2,
        LossConfig::Squared,
        &RegConstraint::none(),
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(r.certified_optimal);
    assert!(r.objective <= 1e-12);
    let m = match_permutation(&r.coefficients, &truth_coeffs(&ds)).unwrap();
    assert!(m.max_error() <= 1e-8);
    assert!(m.partition_matches(&r.assignment, &ds.truth().unwrap().labels));
}

#[test]
fn bnb_agrees_with_brute_force_and_lp_model_is_consistent() {
    let ds = generate(&GeneratorSpec::uniform_experiment(9, 0.2, 11)).unwrap();
    let reg = RegConstraint::uniform(RegKind::L1, 2, 3.0).unwrap();
    let b = brute_force(&ds, 2, LossConfig::Abs, &reg).unwrap();
    let r = branch_and_bound(&ds, 2, LossConfig::Abs, &reg, &SolveOptions::default()).unwrap();
    assert!((b.objective - r.objective).abs() <= 1e-9);

    let model = build_model(&ds, 2, LossConfig::Abs, &reg, None).unwrap();
    assert_eq!(parse_lp(&export_lp(&model)).unwrap(), model);
}

#[test]
fn collapsed_counterexample_matches_full_objective() {
    let ds = counterexample(&CounterexampleSpec {
        n: 400,
        delta: 0.25,
        sigma: 1.0,
        seed: 5,
    })
    .unwrap();
    let (support, weights) = collapse_duplicates(&ds);
    assert_eq!(support.n(), 4);
    for loss in [LossConfig::Abs, LossConfig::Squared] {
        let exact = brute_force_weighted(&support, &weights, 2, loss, &RegConstraint::none()).unwrap();
        let full = objective(
            &ds,
            &exact.coefficients,
            &best_assignment(&ds, &exact.coefficients).unwrap(),
            loss,
        )
        .unwrap();
        assert!((full - exact.objective).abs() <= 1e-12);

        let am = multistart_weighted(
            &support,
            &weights,
            2,
            loss,
            &RegConstraint::none(),
            &AmOptions::default(),
        )
        .unwrap();
        assert!(am.objective >= exact.objective - 1e-12);
    }
}
