//! Property tests for the crate's standing invariants.

use loadcast::edrvfl::{ridge_solve, EnsembleRule, ForecastSet};
use loadcast::ewt::{beta, EwtBoundaries, EwtFilterBank};
use loadcast::series::{NormalizationParams, SplitSpec, TimeSeries};
use loadcast::stats::rank_models;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #[test]
    fn beta_symmetry_everywhere(x in 0.0f64..=1.0) {
        prop_assert!((beta(x) + beta(1.0 - x) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn normalization_round_trips(values in prop::collection::vec(-1e6f64..1e6, 2..200)) {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi > lo);
        let series = TimeSeries::new(values.clone()).unwrap();
        let params = NormalizationParams::fit(&series).unwrap();
        let back = series.normalize(&params).denormalize(&params);
        // the round trip is exact to 1e-12 of the data scale; for a value
        // tiny relative to the range, cancellation noise scales with the
        // range, not the value
        let scale = 1.0f64.max(hi - lo);
        for (a, b) in values.iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale.max(a.abs()));
        }
    }

    #[test]
    fn split_partitions_chronologically(n in 10usize..500) {
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let series = TimeSeries::new(values.clone()).unwrap();
        let (train, valid, test) = series.split(&SplitSpec::default()).unwrap();
        let mut joined = train.values().to_vec();
        joined.extend_from_slice(valid.values());
        joined.extend_from_slice(test.values());
        prop_assert_eq!(joined, values);
        prop_assert_eq!(valid.len(), n / 10);
        prop_assert_eq!(test.len(), n / 5);
    }

    #[test]
    fn lag_rows_stay_causal(n in 6usize..120, order in 1usize..5) {
        prop_assume!(n > order);
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let m = TimeSeries::new(values).unwrap().lag_matrix(order).unwrap();
        for i in 0..m.num_rows() {
            for c in 0..order {
                prop_assert!(m.inputs[[i, c]] < m.targets[i]);
            }
        }
    }

    #[test]
    fn ensemble_stays_inside_layer_envelope(
        layers in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 5), 1..7)
    ) {
        for rule in [EnsembleRule::Mean, EnsembleRule::Median] {
            let set = ForecastSet::combine(layers.clone(), rule);
            for i in 0..5 {
                let lo = layers.iter().map(|l| l[i]).fold(f64::INFINITY, f64::min);
                let hi = layers.iter().map(|l| l[i]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(set.combined[i] >= lo - 1e-9 && set.combined[i] <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn ranks_ignore_monotone_transforms(
        errors in prop::collection::vec(prop::collection::vec(0.01f64..100.0, 4), 3..8)
    ) {
        let rows = errors.len();
        let flat: Vec<f64> = errors.iter().flatten().copied().collect();
        let matrix = Array2::from_shape_vec((rows, 4), flat).unwrap();
        let names: Vec<String> = (0..rows).map(|i| format!("m{i}")).collect();
        let sets: Vec<String> = (0..4).map(|j| format!("d{j}")).collect();
        let plain = rank_models(names.clone(), sets.clone(), matrix.clone()).unwrap();
        let warped = rank_models(names, sets, matrix.mapv(|e| (e * 0.5).exp())).unwrap();
        prop_assert_eq!(plain.ranks, warped.ranks);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ewt_round_trip_on_random_signals(
        seed in 0u64..1_000,
        omega1 in 0.3f64..1.2,
        gap in 0.6f64..1.5,
    ) {
        use rand::{Rng, SeedableRng};
        let omega2 = omega1 + gap;
        prop_assume!(omega2 < PI - 0.1);
        let boundaries = EwtBoundaries::new(vec![omega1, omega2]).unwrap();
        let bank = EwtFilterBank::new(boundaries, None, 256).unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = bank.reconstruct(&bank.decompose(&x).unwrap()).unwrap();
        let num: f64 = x.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        prop_assert!((num / den).sqrt() <= 1e-8);
    }

    #[test]
    fn ridge_shrinks_with_lambda(seed in 0u64..1_000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let d = Array2::from_shape_fn((25, 6), |_| rng.gen_range(-1.0..1.0));
        let y = Array1::from_shape_fn(25, |_| rng.gen_range(-1.0..1.0));
        let mut prev = f64::INFINITY;
        for lambda in [1e-3, 1e-1, 10.0] {
            let beta = ridge_solve(&d, &y, lambda).unwrap();
            let norm = beta.dot(&beta).sqrt();
            prop_assert!(norm <= prev + 1e-12);
            prev = norm;
        }
    }
}
