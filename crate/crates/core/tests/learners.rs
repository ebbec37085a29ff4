use gravzone_core::learners::{
    cross_validate, stratified_folds, train_adaboost, train_forest, train_gbdt, train_linear_svm,
    train_tree, AdaBoostParams, ForestParams, GbdtParams, SvmParams, TreeParams,
};
use gravzone_core::rng::rng_from_seed;
use gravzone_core::{Matrix, ModelSpec};
use proptest::prelude::*;
use rand::Rng;

/// Distinct rows with arbitrary labels.
fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
    (4usize..40, 1usize..5)
        .prop_flat_map(|(n, d)| {
            let rows = prop::collection::vec(prop::collection::vec(-100i32..100, d), n).prop_map(
                |mut rows| {
                    rows.sort();
                    rows.dedup();
                    rows.into_iter()
                        .map(|r| r.into_iter().map(f64::from).collect::<Vec<f64>>())
                        .collect::<Vec<_>>()
                },
            );
            (rows, prop::collection::vec(0u8..2, n))
        })
        .prop_map(|(rows, mut y)| {
            y.truncate(rows.len());
            (rows, y)
        })
}

proptest! {
    #[test]
    fn unlimited_tree_fits_consistent_data((rows, y) in dataset(), seed in any::<u64>()) {
        let x = Matrix::from_rows(&rows);
        let tree = train_tree(&x, &y, &TreeParams::default(), seed).unwrap();
        for (r, &l) in x.iter_rows().zip(&y) {
            prop_assert_eq!(tree.predict_label(r), l);
        }
    }

    #[test]
    fn monotone_transform_keeps_predictions((rows, y) in dataset(), col in 0usize..4, seed in any::<u64>()) {
        let col = col % rows[0].len();
        let x = Matrix::from_rows(&rows);
        let warped: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[col] = (r[col] / 40.0).exp() + 3.0 * r[col];
                r
            })
            .collect();
        let xw = Matrix::from_rows(&warped);
        // without bootstrap every row is a training point of every tree
        let params = ForestParams { n_trees: 5, tree: TreeParams { max_depth: Some(4), ..Default::default() }, bootstrap: false };
        let a = train_forest(&x, &y, &params, seed).unwrap();
        let b = train_forest(&xw, &y, &params, seed).unwrap();
        for (ra, rb) in x.iter_rows().zip(xw.iter_rows()) {
            prop_assert_eq!(a.predict(ra).unwrap(), b.predict(rb).unwrap());
        }
        prop_assert_eq!(a.feature_importance(), b.feature_importance());
    }

    #[test]
    fn importances_are_normalized((rows, y) in dataset(), seed in any::<u64>()) {
        let x = Matrix::from_rows(&rows);
        let f = train_forest(&x, &y, &ForestParams { n_trees: 8, ..Default::default() }, seed).unwrap();
        let imp = f.feature_importance();
        prop_assert!(imp.iter().all(|&v| v >= 0.0));
        prop_assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stratified_folds_balance_classes(y in prop::collection::vec(0u8..2, 6..80), k in 2usize..6, seed in any::<u64>()) {
        let folds = stratified_folds(&y, k, seed).unwrap();
        for class in 0..2u8 {
            let counts: Vec<usize> = (0..k)
                .map(|f| folds.iter().zip(&y).filter(|&(&fo, &l)| fo == f && l == class).count())
                .collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {} counts {:?}", class, counts);
        }
    }
}

fn noisy_pair(seed: u64, n: usize) -> (Matrix, Vec<u8>) {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        y.push(u8::from(a + 0.3 * b + rng.random_range(-0.3..0.3) > 0.0));
        rows.push(vec![a, b, rng.random::<f64>(), rng.random::<f64>()]);
    }
    (Matrix::from_rows(&rows), y)
}

#[test]
fn duplicated_columns_share_importance() {
    // Equal-gain ties go to the lower index, so the first copy wins whenever
    // both are drawn; the pair is compared on seed-averaged importances.
    let seeds = 20;
    let mut mean = [0.0; 2];
    for seed in 0..seeds {
        let (x, y) = noisy_pair(seed, 300);
        let dup: Vec<Vec<f64>> = x
            .iter_rows()
            .map(|r| vec![r[0], r[0], r[1], r[2], r[3]])
            .collect();
        let f = train_forest(&Matrix::from_rows(&dup), &y, &ForestParams::default(), seed).unwrap();
        let imp = f.feature_importance();
        assert!(imp[0] > 0.0 && imp[1] > 0.0, "seed {seed}: {imp:?}");
        mean[0] += imp[0] / seeds as f64;
        mean[1] += imp[1] / seeds as f64;
    }
    let pair = mean[0] + mean[1];
    for one in mean {
        assert!(
            (pair - 2.0 * one).abs() <= 0.15,
            "mean importances {mean:?}"
        );
    }
}

#[test]
fn forest_is_thread_count_independent() {
    let (x, y) = noisy_pair(3, 200);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train_forest(&x, &y, &ForestParams::default(), 42).unwrap())
    };
    assert_eq!(run(1), run(6));
}

#[test]
fn gbdt_loss_is_non_increasing() {
    let (x, y) = noisy_pair(5, 200);
    let m = train_gbdt(&x, &y, &GbdtParams::default(), 0).unwrap();
    let loss = m.train_loss();
    assert_eq!(loss.len(), GbdtParams::default().n_rounds + 1);
    assert!(loss.windows(2).all(|p| p[1] <= p[0] + 1e-12), "{loss:?}");
}

#[test]
fn boosters_and_svm_are_seed_deterministic() {
    let (x, y) = noisy_pair(8, 120);
    let ada = |s| train_adaboost(&x, &y, &AdaBoostParams::default(), s).unwrap();
    assert_eq!(ada(4), ada(4));
    let svm = |s| train_linear_svm(&x, &y, &SvmParams::default(), s).unwrap();
    assert_eq!(svm(4), svm(4));
}

#[test]
fn cv_prefers_a_real_tree_over_a_stump_of_depth_zero() {
    let (x, y) = noisy_pair(9, 160);
    let shallow = ModelSpec::Rf(ForestParams {
        n_trees: 10,
        tree: TreeParams {
            max_depth: Some(0),
            ..Default::default()
        },
        bootstrap: true,
    });
    let deep = ModelSpec::Rf(ForestParams {
        n_trees: 10,
        ..Default::default()
    });
    let r = cross_validate(&x, &y, &[shallow, deep], 4, 42).unwrap();
    assert_eq!(r.best, 1);
    assert_eq!(r, cross_validate(&x, &y, &[shallow, deep], 4, 42).unwrap());
}
