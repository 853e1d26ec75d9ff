use std::collections::HashMap;

use permlab_core::rng::Xoshiro256;
use permlab_core::schedulers::{shuffle, BaseOrder, PermutationStrategy, StrategySpec};

#[test]
fn random_reshuffle_golden_sequence() {
    let seq = PermutationStrategy::sequence(
        StrategySpec::new(BaseOrder::RandomReshuffle, false),
        42,
        5,
        3,
    )
    .unwrap();
    let got: Vec<Vec<usize>> = seq.iter().map(|p| p.to_one_based()).collect();
    assert_eq!(
        got,
        vec![
            vec![4, 3, 1, 5, 2],
            vec![1, 2, 5, 4, 3],
            vec![4, 1, 3, 5, 2]
        ]
    );
}

#[test]
fn shuffle_is_uniform_on_four_elements() {
    let draws = 240_000usize;
    let mut rng = Xoshiro256::seed_from_u64(1234);
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..draws {
        *counts
            .entry(shuffle(&mut rng, 4).as_slice().to_vec())
            .or_default() += 1;
    }
    assert_eq!(counts.len(), 24);
    let expected = draws as f64 / 24.0;
    let sigma = (draws as f64 * (1.0 / 24.0) * (23.0 / 24.0)).sqrt();
    let mut chi2 = 0.0;
    for &c in counts.values() {
        assert!((c as f64 - expected).abs() <= 5.0 * sigma);
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    // 0.999 quantile of chi-square with 23 degrees of freedom
    assert!(chi2 < 49.73, "chi2 = {chi2}");
}

#[test]
fn flipflop_and_base_rule_invariants() {
    let epochs = 100;
    for base in [
        BaseOrder::Igd,
        BaseOrder::SingleShuffle,
        BaseOrder::RandomReshuffle,
    ] {
        for seed in 0..5 {
            let ff = PermutationStrategy::sequence(StrategySpec::new(base, true), seed, 6, epochs)
                .unwrap();
            for pair in ff.chunks(2) {
                assert_eq!(pair[1], pair[0].reversed());
            }
            let plain =
                PermutationStrategy::sequence(StrategySpec::new(base, false), seed, 6, epochs)
                    .unwrap();
            let distinct = plain.iter().any(|p| *p != plain[0]);
            assert_eq!(distinct, base == BaseOrder::RandomReshuffle);
            // replay from (seed, n, K, strategy) is exact
            assert_eq!(
                plain,
                PermutationStrategy::sequence(StrategySpec::new(base, false), seed, 6, epochs)
                    .unwrap()
            );
        }
    }
}
