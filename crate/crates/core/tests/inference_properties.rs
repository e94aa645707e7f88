use proptest::prelude::*;
use retrodiction::channels::{
    adjoint_map, classify, make_amplitude_damping, make_noisy_operation, make_unitary_channel, random_channel,
    random_instrument,
};
use retrodiction::inference::{
    deterministic_effect_check, inference_symmetry_report, is_inference_symmetric, no_signalling_check,
    open_ratio_check, postdict_channel, postdict_channel_via_purification, postdict_closed,
    postdict_via_rotated_purification, predict_channel, predict_closed, time_reverse, InferenceTask, Transformation,
};
use retrodiction::linalg::{haar_random_unitary, random_state, DimsPartition};
use retrodiction::{Direction, Error};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closed_symmetry(d in 2usize..=8, seed in any::<u64>()) {
        let u = haar_random_unitary(d, seed);
        for x in 0..d {
            let post = postdict_closed(&u, x).unwrap();
            for a in 0..d {
                prop_assert!((post.at(a) - predict_closed(&u, a).unwrap().at(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn open_ratios_either_time_label(
        split in prop::sample::select(vec![([2usize, 2usize], [2usize, 2usize]), ([2, 3], [3, 2]), ([2, 3], [2, 3])]),
        reversed in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let (din, dout) = if reversed { (split.1, split.0) } else { split };
        let dims_in = DimsPartition::new(din.to_vec()).unwrap();
        let dims_out = DimsPartition::new(dout.to_vec()).unwrap();
        let u = haar_random_unitary(dims_in.total(), seed);
        prop_assert!(open_ratio_check(&u, &dims_in, &dims_out).unwrap().max_defect < 1e-12);
        // The same unitary read backwards in time.
        prop_assert!(open_ratio_check(&u.adjoint(), &dims_out, &dims_in).unwrap().max_defect < 1e-12);
    }

    #[test]
    fn factor_relates_the_directions(d_in in 1usize..=3, d_out in 1usize..=3, rank in 1usize..=3, seed in any::<u64>()) {
        let ch = random_channel(d_in, d_out, rank, seed);
        for x in 0..d_out {
            let post = postdict_channel(&ch, x).unwrap();
            let f = post.factor.unwrap();
            for a in 0..d_in {
                let pre = predict_channel(&ch, a).unwrap().at(x);
                prop_assert!((post.at(a) - f * pre).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn purified_postdiction(d_in in 1usize..=3, d_out in 1usize..=3, rank in 1usize..=3, seed in any::<u64>()) {
        let ch = random_channel(d_in, d_out, rank, seed);
        for x in 0..d_out {
            let direct = postdict_channel(&ch, x).unwrap();
            let purified = postdict_channel_via_purification(&ch, x).unwrap();
            let rotated = postdict_via_rotated_purification(&ch, x, seed.wrapping_add(x as u64)).unwrap();
            prop_assert!(direct.max_abs_diff(&purified).unwrap() < 1e-10);
            prop_assert!(direct.max_abs_diff(&rotated).unwrap() < 1e-10);
        }
    }

    #[test]
    fn three_predicates_agree(kind in 0usize..4, param in 0.05f64..0.95, seed in any::<u64>()) {
        let ch = match kind {
            0 => make_unitary_channel(&haar_random_unitary(2 + (seed % 3) as usize, seed)).unwrap(),
            1 => make_noisy_operation(&haar_random_unitary(4, seed), &DimsPartition::pair(2, 2)).unwrap(),
            2 => make_amplitude_damping(param).unwrap(),
            _ => random_channel(2, 2, 2, seed),
        };
        let unital = classify(&ch).is_unital;
        prop_assert_eq!(is_inference_symmetric(&ch, 1e-10).unwrap(), unital);
        prop_assert_eq!(inference_symmetry_report(&ch, 1e-10, seed).unwrap().tables_symmetric, unital);
        prop_assert_eq!(classify(&adjoint_map(&ch)).is_cptp(), unital);
    }

    #[test]
    fn discard_is_the_unique_deterministic_effect(
        (d_in, d_out) in (1usize..=3).prop_flat_map(|d| (Just(d), 1..=(d * d).min(3))),
        seed in any::<u64>(),
    ) {
        // With d_out > d_in² the d_in² constraints cannot pin down d_out
        // weights. Rank d_in·d_out avoids channels that only reach a subspace.
        let ch = random_channel(d_in, d_out, d_in * d_out, seed);
        let r = deterministic_effect_check(&ch).unwrap();
        prop_assert!(r.unique);
        prop_assert!(r.deviation_from_discard < 1e-10);
    }

    #[test]
    fn no_signalling_marginals(outcomes in 1usize..=3, seed in any::<u64>()) {
        let e = random_instrument(2, 2, outcomes, 2, seed);
        let f = random_instrument(2, 3, 2, 2, seed.wrapping_add(1));
        let r = no_signalling_check(&e, &f, &random_state(2, seed.wrapping_add(2))).unwrap();
        prop_assert!(r.marginal_defect < 1e-12);
        prop_assert!(r.purified_defect < 1e-10);
    }

    #[test]
    fn time_reversal_of_a_unitary_task(d in 2usize..=4, seed in any::<u64>()) {
        let u = haar_random_unitary(d, seed);
        let dims = DimsPartition::single(d);
        let task = InferenceTask::full(Transformation::Unitary(u), dims.clone(), dims, Direction::Predict).unwrap();
        let reversed = time_reverse(&task).unwrap();
        for a in 0..d {
            let forward = task.solve(&[a]).unwrap();
            for x in 0..d {
                // P(x|a, U) = P(a|x, U†) when both are predictions.
                prop_assert!((forward.at(x) - reversed.solve(&[x]).unwrap().at(a)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn non_unital_channels_have_no_active_reverse() {
    let dims = DimsPartition::single(2);
    let task = InferenceTask::full(
        Transformation::Channel(make_amplitude_damping(0.5).unwrap()),
        dims.clone(),
        dims,
        Direction::Predict,
    )
    .unwrap();
    assert!(matches!(time_reverse(&task), Err(Error::NoActiveReverse(_))));
}
