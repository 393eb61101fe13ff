mod common;

use pca_index::dataset::{parse_schema, synthesize_isotropic, Dataset, IndicatorSchema};
use pca_index::index::{
    aggregate_from_scores, aggregate_index, compute_competitiveness, effective_weights,
    modified_scores,
};
use pca_index::linalg::Divisor;
use pca_index::options::{ConstantPolicy, PillarMode, RunOptions};
use pca_index::Matrix;
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = (Dataset, IndicatorSchema)> {
    (1usize..=40, 2usize..=200, 1usize..=5, any::<u64>()).prop_map(|(n, m, pillars, seed)| {
        let mut rng = common::rng(seed);
        (
            common::random_dataset(&mut rng, n, m),
            common::schema(n, pillars),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_convexity_two_paths_and_pillar_sums((data, schema) in dataset_strategy()) {
        let r = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();

        prop_assert!(r.effective_weights.iter().all(|&w| w >= 0.0));
        let total: f64 = r.effective_weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "weight sum {total}");

        let via_scores = aggregate_from_scores(&r.decomposition.shares, &r.modified_scores).unwrap();
        let x = &r.normalized.values;
        for j in 0..data.n_entities() {
            let col: Vec<f64> = (0..x.rows()).map(|i| x[(i, j)]).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let i_j = r.index[j];
            prop_assert!((1.0..=10.0).contains(&i_j));
            prop_assert!(lo - 1e-12 <= i_j && i_j <= hi + 1e-12);
            prop_assert!((via_scores[j] - i_j).abs() <= 1e-10);

            let pillar_sum: f64 = r.pillars.scores.pillars.iter()
                .filter_map(|(_, v)| v.as_ref().map(|v| v[j]))
                .sum();
            prop_assert!((pillar_sum - i_j).abs() <= 1e-10);
        }

        for y in r.modified_scores.0.as_slice() {
            prop_assert!((1.0 - 1e-12..=10.0 + 1e-12).contains(y));
        }
    }

    #[test]
    fn divisor_does_not_matter((data, schema) in dataset_strategy()) {
        let pop = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();
        let opts = RunOptions { divisor: Divisor::Sample, ..RunOptions::default() };
        let smp = compute_competitiveness(&data, &schema, &opts).unwrap();
        for (a, b) in pop.index.iter().zip(&smp.index) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in pop.decomposition.shares.iter().zip(&smp.decomposition.shares) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn indicator_permutation((data, schema) in dataset_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let base = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();
        let mut order: Vec<usize> = (0..data.n_indicators()).collect();
        order.shuffle(&mut common::rng(seed));
        let permuted = data.select_indicators(&order);
        let r = compute_competitiveness(&permuted, &schema, &RunOptions::default()).unwrap();
        for (a, b) in base.index.iter().zip(&r.index) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn entity_shuffle_shuffles_index((data, schema) in dataset_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let base = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();
        let mut order: Vec<usize> = (0..data.n_entities()).collect();
        order.shuffle(&mut common::rng(seed));
        let r = compute_competitiveness(&data.select_entities(&order), &schema, &RunOptions::default()).unwrap();
        for (pos, &j) in order.iter().enumerate() {
            prop_assert!((r.index[pos] - base.index[j]).abs() <= 1e-10);
        }
    }

    #[test]
    fn local_pillars_stay_on_scale((data, schema) in dataset_strategy()) {
        let opts = RunOptions { pillar_mode: PillarMode::Local, ..RunOptions::default() };
        let r = compute_competitiveness(&data, &schema, &opts).unwrap();
        for (_, v) in &r.pillars.scores.pillars {
            for s in v.as_ref().unwrap() {
                prop_assert!((1.0 - 1e-12..=10.0 + 1e-12).contains(s));
            }
        }
    }

    #[test]
    fn brute_force_oracle_small_n(n in 2usize..=3, m in 4usize..=60, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let data = common::random_dataset(&mut rng, n, m);
        let schema = parse_schema(&(0..n).map(|i| format!("A,X{i},inc\n")).collect::<String>()).unwrap();
        let r = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();
        let oracle = common::brute_force_index(&common::to_rows(&data.values));
        for (got, want) in r.index.iter().zip(&oracle) {
            prop_assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        }
    }
}

#[test]
fn sign_flips_change_no_bits() {
    let mut rng = common::rng(11);
    let data = common::random_dataset(&mut rng, 12, 80);
    let schema = common::schema(12, 3);
    let r = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();
    for k in 0..12 {
        let mut flipped = r.decomposition.clone();
        flipped
            .loadings
            .row_mut(k)
            .iter_mut()
            .for_each(|v| *v = -*v);
        let y = modified_scores(&flipped.loadings, &r.normalized).unwrap();
        let w = effective_weights(&flipped);
        let i = aggregate_index(&w, &r.normalized).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(y.0.as_slice()), bits(r.modified_scores.0.as_slice()));
        assert_eq!(bits(&w), bits(&r.effective_weights));
        assert_eq!(bits(&i), bits(&r.index));
    }
}

#[test]
fn isotropic_weights_are_uniform() {
    let schema = IndicatorSchema::table1();
    let data = synthesize_isotropic(64, &schema).unwrap();
    let r = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();
    for w in &r.effective_weights {
        assert!((w - 1.0 / 34.0).abs() <= 1e-9, "{w}");
    }
}

#[test]
fn constant_midpoint_indicator_gets_zero_weight() {
    let mut rng = common::rng(3);
    let mut data = common::random_dataset(&mut rng, 6, 50);
    data.values.row_mut(2).iter_mut().for_each(|v| *v = 7.25);
    let schema = common::schema(6, 2);
    let opts = RunOptions {
        constant_policy: ConstantPolicy::Midpoint,
        ..RunOptions::default()
    };
    let r = compute_competitiveness(&data, &schema, &opts).unwrap();
    assert!(r.effective_weights[2].abs() <= 1e-9);
    assert!((r.effective_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn perfectly_correlated_hand_trace() {
    let schema = parse_schema("A,X0,inc\nA,X1,inc").unwrap();
    let data = Dataset::complete(
        vec!["a".into(), "b".into(), "c".into()],
        vec!["X0".into(), "X1".into()],
        Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]),
    );
    let r = compute_competitiveness(&data, &schema, &RunOptions::default()).unwrap();
    // a = population variance of (1, 5.5, 10) = 13.5
    let a = 13.5;
    assert!((r.decomposition.eigenvalues[0] - 2.0 * a).abs() < 1e-12);
    assert_eq!(r.decomposition.eigenvalues[1], 0.0);
    assert_eq!(r.decomposition.shares, vec![1.0, 0.0]);
    for w in &r.effective_weights {
        assert!((w - 0.5).abs() < 1e-15);
    }
    for (got, want) in r.index.iter().zip([1.0, 5.5, 10.0]) {
        assert!((got - want).abs() < 1e-12);
    }
}
