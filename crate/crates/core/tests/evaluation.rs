mod common;

use cwkbmf::evaluation::{baseline_predict, cross_validate, make_cv_plan, spearman, CvOptions, Method};
use cwkbmf::inference::{ResponseMatrix, WeightMode};
use cwkbmf::linalg::Matrix;
use cwkbmf::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::ranks::brute_spearman;
use common::{config, normal_matrix, random_instance};

fn tied_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0i32..6, 3..50).prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn non_constant(v: &[f64]) -> bool {
    v.iter().any(|x| *x != v[0])
}

#[test]
fn tied_example_matches_brute_force() {
    let a = [1.0, 2.0, 2.0, 4.0];
    let b = [3.0, 1.0, 4.0, 4.0];
    let got = spearman(&a, &b).unwrap();
    assert!((got - brute_spearman(&a, &b)).abs() <= 1e-12);
}

#[test]
fn random_pairs_with_ties_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.random_range(3..=50);
        let levels = rng.random_range(2..=10);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 - 3.0).collect();
        if !non_constant(&a) || !non_constant(&b) {
            continue;
        }
        let got = spearman(&a, &b).unwrap();
        let want = brute_spearman(&a, &b);
        assert!((got - want).abs() <= 1e-12, "{a:?} {b:?}: {got} vs {want}");
        checked += 1;
    }
}

#[test]
fn constant_and_mismatched_inputs_are_rejected() {
    assert!(matches!(
        spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
        Err(Error::UndefinedCorrelation(_))
    ));
    assert!(spearman(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(spearman(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
}

proptest! {
    #[test]
    fn spearman_is_bounded_and_symmetric(a in tied_vector(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|_| rng.random_range(0..4) as f64).collect();
        prop_assume!(non_constant(&a) && non_constant(&b));
        let r = spearman(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert_eq!(r, spearman(&b, &a).unwrap());
    }

    #[test]
    fn spearman_ignores_monotone_transforms(a in tied_vector(), b in tied_vector()) {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        prop_assume!(non_constant(a) && non_constant(b));
        let r = spearman(a, b).unwrap();
        let a2: Vec<f64> = a.iter().map(|x| (0.7 * x).exp() - 5.0).collect();
        prop_assert!((spearman(&a2, b).unwrap() - r).abs() <= 1e-12);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        prop_assert!((spearman(&neg, b).unwrap() + r).abs() <= 1e-12);
    }

    #[test]
    fn spearman_ignores_pair_order(a in tied_vector(), b in tied_vector(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        prop_assume!(non_constant(a) && non_constant(b));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let pa: Vec<f64> = order.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = order.iter().map(|&i| b[i]).collect();
        prop_assert!((spearman(&pa, &pb).unwrap() - spearman(a, b).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn cv_plans_partition_every_repeat(n in 2usize..200, k in 2usize..10, repeats in 1usize..4, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let plan = make_cv_plan(n, k, repeats, seed).unwrap();
        prop_assert_eq!(plan.folds.len(), repeats);
        for folds in &plan.folds {
            prop_assert_eq!(folds.len(), k);
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            let mut all = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        prop_assert_eq!(&plan, &make_cv_plan(n, k, repeats, seed).unwrap());
    }
}

#[test]
fn different_seeds_give_different_plans() {
    let a = make_cv_plan(50, 5, 1, 1).unwrap();
    let b = make_cv_plan(50, 5, 1, 2).unwrap();
    assert_ne!(a.folds, b.folds);
}

#[test]
fn baseline_ignores_unobserved_entries() {
    let values = Matrix::from_row_slice(3, 2, &[1.0, 100.0, 3.0, 2.0, 1000.0, 4.0]);
    let mask = vec![true, false, true, true, false, true];
    let y = ResponseMatrix::new(
        values,
        mask,
        vec!["a".into(), "b".into(), "c".into()],
        vec!["d0".into(), "d1".into()],
    )
    .unwrap();
    let p = baseline_predict(&y, 2).unwrap();
    assert_eq!(p.shape(), (2, 2));
    for i in 0..2 {
        assert_eq!(p[(i, 0)], 2.0);
        assert_eq!(p[(i, 1)], 3.0);
    }
}

#[test]
fn cross_validation_report_is_consistent() {
    let inst = random_instance(8, 24, 6, 2, 1, 2);
    let cfg = config(2, 1, WeightMode::ComponentWise);
    let plan = make_cv_plan(24, 3, 2, 5).unwrap();
    let options = CvOptions {
        methods: Method::ALL.to_vec(),
        jobs: 2,
    };
    let result = cross_validate(&inst.kx, &inst.kz, &inst.y, &cfg, &plan, &options).unwrap();
    assert_eq!(result.reports.len(), 3);
    for r in &result.reports {
        assert_eq!(r.per_drug.len(), 6);
        assert_eq!(r.per_fold_mse.len(), 6);
        let mean = r.per_drug.iter().map(|d| d.rho).sum::<f64>() / 6.0;
        assert!((r.cumulative_rho - mean).abs() <= 1e-12);
        for d in &r.per_drug {
            assert_eq!(d.per_repeat.len(), 2);
            assert!(d.per_repeat.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    let serial = cross_validate(
        &inst.kx,
        &inst.kz,
        &inst.y,
        &cfg,
        &plan,
        &CvOptions {
            jobs: 1,
            ..options.clone()
        },
    )
    .unwrap();
    assert_eq!(serial, result);
    let tsv = result.to_tsv();
    assert!(tsv.starts_with("method\tdrug\trho\n"));
    assert_eq!(tsv.lines().count(), 1 + 3 * 6);
}

#[test]
fn null_responses_give_small_correlations() {
    let inst = random_instance(9, 60, 5, 2, 1, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let y = ResponseMatrix::dense(normal_matrix(&mut rng, 60, 5)).unwrap();
    let y = ResponseMatrix {
        row_ids: inst.y.row_ids.clone(),
        col_ids: inst.y.col_ids.clone(),
        ..y
    };
    let plan = make_cv_plan(60, 5, 2, 3).unwrap();
    let options = CvOptions {
        methods: vec![Method::CwKbmf],
        jobs: 0,
    };
    let result = cross_validate(
        &inst.kx,
        &inst.kz,
        &y,
        &config(2, 4, WeightMode::ComponentWise),
        &plan,
        &options,
    )
    .unwrap();
    let rho = result.reports[0].cumulative_rho;
    assert!(rho.abs() < 0.3, "cumulative rho on noise: {rho}");
}

#[test]
fn mismatched_plan_is_rejected() {
    let inst = random_instance(8, 12, 4, 1, 1, 1);
    let plan = make_cv_plan(10, 2, 1, 0).unwrap();
    let cfg = config(1, 0, WeightMode::ComponentWise);
    assert!(cross_validate(&inst.kx, &inst.kz, &inst.y, &cfg, &plan, &CvOptions::default()).is_err());
}
