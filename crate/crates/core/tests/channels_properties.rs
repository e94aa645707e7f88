use proptest::prelude::*;
use retrodiction::channels::{
    adjoint_map, amplitude_damping_instrument, classify, coarse_grain, make_noisy_operation, outcome_probabilities,
    random_channel, random_instrument, state_update,
};
use retrodiction::linalg::{haar_random_unitary, random_operator, random_state, DimsPartition, Operator};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn completeness_conserves_probability(
        d_in in 1usize..=3, d_out in 1usize..=3, outcomes in 1usize..=4, rank in 1usize..=2, seed in any::<u64>()
    ) {
        let inst = random_instrument(d_in, d_out, outcomes, rank, seed);
        for k in 0..100u64 {
            let total = outcome_probabilities(&inst, &random_state(d_in, seed ^ k)).unwrap().total();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unseen_outcome_is_the_average_update(d in 1usize..=3, outcomes in 1usize..=4, seed in any::<u64>()) {
        let inst = random_instrument(d, d, outcomes, 2, seed);
        let rho = random_state(d, seed.wrapping_add(7));
        let probabilities = outcome_probabilities(&inst, &rho).unwrap();
        let mut rebuilt = Operator::zeros(d, d);
        for (label, p) in &probabilities.entries {
            if *p > 1e-9 {
                let updated = state_update(&inst, &rho, label).unwrap().scale_real(*p);
                rebuilt = &rebuilt + &updated;
            }
        }
        prop_assert!(rebuilt.max_abs_diff(&coarse_grain(&inst).apply(&rho).unwrap()) < 1e-12);
    }

    #[test]
    fn noisy_operations_are_unital(da in 2usize..=3, db in 2usize..=3, seed in any::<u64>()) {
        let u = haar_random_unitary(da * db, seed);
        let ch = make_noisy_operation(&u, &DimsPartition::pair(da, db)).unwrap();
        let c = classify(&ch);
        prop_assert!(c.is_unital && c.is_cptp());
    }

    #[test]
    fn adjoint_is_an_involution(d_in in 1usize..=3, d_out in 1usize..=3, rank in 1usize..=3, seed in any::<u64>()) {
        let ch = random_channel(d_in, d_out, rank, seed);
        let twice = adjoint_map(&adjoint_map(&ch));
        for k in 0..50u64 {
            let x = random_operator(d_in, d_in, seed.wrapping_add(k));
            prop_assert!(twice.apply(&x).unwrap().max_abs_diff(&ch.apply(&x).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn constructed_channels_have_positive_choi(d_in in 1usize..=3, d_out in 1usize..=3, rank in 1usize..=4, seed in any::<u64>()) {
        let c = classify(&random_channel(d_in, d_out, rank, seed));
        prop_assert!(c.choi_min_eigenvalue >= -1e-10);
        prop_assert!(c.is_tp);
    }

    #[test]
    fn damping_instrument_probabilities(gamma in 0.0f64..=1.0, seed in any::<u64>()) {
        let inst = amplitude_damping_instrument(gamma).unwrap();
        let rho = random_state(2, seed);
        let t = outcome_probabilities(&inst, &rho).unwrap();
        // Decay happens with probability γ·⟨1|ρ|1⟩.
        let decay = gamma * rho.get(1, 1).re;
        prop_assert!((t.at(1) - decay).abs() < 1e-12);
    }
}
