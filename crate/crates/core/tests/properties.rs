mod common;

use common::*;
use proptest::prelude::*;
use sparsim::circuit::CircuitSpec;
use sparsim::marginals::ExactMarginals;
use sparsim::oracle::{dense_first_block, dense_simulate, exact_distribution, exact_marginal};
use sparsim::sparse::SparseDistribution;
use sparsim::{overlap, BitString, EstimationParams, TractableState};

fn family() -> impl Strategy<Value = &'static str> {
    prop::sample::select(FAMILIES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ct_amplitudes_match_dense_simulation(seed in any::<u64>(), fam in family(), n in 2usize..=8) {
        let spec = random_circuit(&mut rng(seed, 0), fam, n);
        let ct = spec.ct_state().unwrap();
        let dense = dense_first_block(&spec).unwrap();
        for (x, want) in dense.amplitudes().iter().enumerate() {
            prop_assert!((ct.amplitude_raw(x as u64) - want).norm() <= 1e-10);
        }
    }

    #[test]
    fn dense_simulation_is_unitary(seed in any::<u64>(), fam in family(), n in 2usize..=8) {
        let spec = random_circuit(&mut rng(seed, 1), fam, n);
        prop_assert!((dense_simulate(&spec).unwrap().norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn circuit_json_round_trips(seed in any::<u64>(), fam in family(), n in 2usize..=6) {
        let spec = random_circuit(&mut rng(seed, 2), fam, n);
        let again = CircuitSpec::from_json(&spec.to_json().unwrap()).unwrap();
        prop_assert_eq!(&again, &spec);
        prop_assert_eq!(again.to_json().unwrap(), spec.to_json().unwrap());
    }

    #[test]
    fn prefix_marginals_are_monotone(seed in any::<u64>(), fam in family(), n in 2usize..=6) {
        let spec = random_circuit(&mut rng(seed, 3), fam, n);
        let state = dense_simulate(&spec).unwrap();
        let k = spec.measure.len();
        let full = exact_distribution(&state, &spec.measure);
        let dist = SparseDistribution::from_dense(k, &full).unwrap();
        let exact = ExactMarginals::new(dist);
        for m in 1..=k {
            for y in 0..1u64 << m {
                let prefix = BitString::new(y, m).unwrap();
                let direct = exact_marginal(&state, &spec.measure, &prefix);
                prop_assert!((exact.marginal(&prefix) - direct).abs() <= 1e-12);
                let parent = exact_marginal(&state, &spec.measure, &BitString::new(y & ((1 << (m - 1)) - 1), m - 1).unwrap());
                prop_assert!(direct <= parent + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn overlap_estimates_ignore_the_thread_count(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed, 4);
        let a = random_circuit(&mut r, "iqp", n).ct_state().unwrap();
        let b = random_circuit(&mut r, "product", n).ct_state().unwrap();
        let params = EstimationParams::new(0.05, 0.05, seed).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| overlap(&a, &b, &params).unwrap())
        };
        prop_assert_eq!(run(1), run(3));
    }
}
