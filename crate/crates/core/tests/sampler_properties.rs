use proptest::prelude::*;
use retrodiction::channels::{amplitude_damping_instrument, cnot, random_channel};
use retrodiction::inference::{InferenceTask, Preparation, Transformation};
use retrodiction::linalg::{haar_random_unitary, DimsPartition};
use retrodiction::sampler::{frequentist_check, run_ensemble};
use retrodiction::Direction;

fn unitary_task(d: usize, seed: u64) -> InferenceTask {
    let dims = DimsPartition::single(d);
    InferenceTask::full(Transformation::Unitary(haar_random_unitary(d, seed)), dims.clone(), dims, Direction::Predict)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn counts_depend_only_on_task_shots_and_seed(d in 2usize..=4, shots in 1u64..=10_000, seed in any::<u64>()) {
        let task = unitary_task(d, seed);
        let first = run_ensemble(&task, shots, seed).unwrap();
        let second = run_ensemble(&task, shots, seed).unwrap();
        prop_assert_eq!(first.total(), shots);
        prop_assert_eq!(first, second);
    }

    #[test]
    fn channel_counts_cover_every_cell(d_in in 1usize..=3, d_out in 1usize..=3, seed in any::<u64>()) {
        let task = InferenceTask::full(
            Transformation::Channel(random_channel(d_in, d_out, 2, seed)),
            DimsPartition::single(d_in),
            DimsPartition::single(d_out),
            Direction::Predict,
        )
        .unwrap();
        let r = run_ensemble(&task, 500, seed).unwrap();
        prop_assert_eq!(r.counts.len(), d_in * d_out);
        prop_assert_eq!(r.total(), 500);
    }
}

#[test]
fn uniform_preparation_marginals() {
    const SHOTS: u64 = 50_000;
    for (k, d) in [2usize, 3, 5].into_iter().enumerate() {
        let r = run_ensemble(&unitary_task(d, 40 + k as u64), SHOTS, 41 + k as u64).unwrap();
        let p = 1.0 / d as f64;
        let bound = 4.0 * (p * (1.0 - p) / SHOTS as f64).sqrt();
        for a in &r.input_labels {
            let row: u64 = r.output_labels.iter().map(|x| r.count(a, x)).sum();
            let freq = row as f64 / SHOTS as f64;
            assert!((freq - p).abs() <= bound, "d = {d}, a = {a}: {freq} vs {p}");
        }
    }
}

#[test]
fn open_system_frequencies() {
    // Control qubit prepared and observed, target unknown on both sides.
    let dims = DimsPartition::pair(2, 2);
    let task = InferenceTask::new(
        Transformation::Unitary(cnot()),
        dims.clone(),
        dims,
        Preparation::Basis,
        Direction::Predict,
        vec![true, false],
        vec![false, true],
    )
    .unwrap();
    let r = frequentist_check(&task, 100_000, 17).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.predict.len(), 2);
}

#[test]
fn instrument_frequencies() {
    let dims = DimsPartition::single(2);
    let task = InferenceTask::full(
        Transformation::Instrument(amplitude_damping_instrument(0.3).unwrap()),
        dims.clone(),
        dims,
        Direction::Predict,
    )
    .unwrap();
    let r = frequentist_check(&task, 100_000, 23).unwrap();
    assert!(r.pass, "{r:?}");
}
