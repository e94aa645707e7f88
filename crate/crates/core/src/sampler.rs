//! Monte Carlo ensembles of prepare–transform–measure trials.
//!
//! Each trial draws an input alternative uniformly, then an output by
//! inverse CDF over outcomes in label order. Instruments are sampled in
//! two stages: the outcome label first, then the output basis on the
//! updated state. Trial `t` uses ChaCha8 stream `t` of the seed, so counts
//! do not depend on how trials are split across threads.

use indexmap::IndexMap;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{InferenceTask, Likelihood, Transformation};
use crate::linalg::DimsPartition;
use crate::rng::substream;
use crate::table::{joint_label, Direction, ProbabilityTable, UNKNOWN_LABEL};

/// Separator between input and output labels in count keys.
pub const CELL_SEPARATOR: char = '|';

const CHUNK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub shots: u64,
    pub seed: u64,
    /// Input labels restricted to the masked factors, in index order.
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
    /// Same labels with `*` standing in for unmasked factors, as used in the
    /// `given` field of conditional tables.
    pub input_given: Vec<String>,
    pub output_given: Vec<String>,
    /// `"a|x" -> n` for every cell, zeros included.
    pub counts: IndexMap<String, u64>,
}

impl EnsembleResult {
    pub fn count(&self, input: &str, output: &str) -> u64 {
        self.counts.get(&cell_key(input, output)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    fn cell(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.output_labels.len() + j]
    }
}

pub fn cell_key(input: &str, output: &str) -> String {
    format!("{input}{CELL_SEPARATOR}{output}")
}

/// Labels over the masked factors and their `*`-padded forms.
fn projected_labels(labels: &[Vec<String>], mask: &[bool]) -> (Vec<String>, Vec<String>) {
    let factors: Vec<usize> = (0..labels.len()).filter(|&f| mask[f]).collect();
    let dims: Vec<usize> = factors.iter().map(|&f| labels[f].len()).collect();
    let total: usize = dims.iter().product();
    let mut keys = Vec::with_capacity(total);
    let mut given = Vec::with_capacity(total);
    for index in 0..total {
        let digits = if dims.is_empty() { Vec::new() } else { DimsPartition::new(dims.clone()).expect("positive").decode(index) };
        let parts: Vec<&str> = factors.iter().zip(&digits).map(|(&f, &v)| labels[f][v].as_str()).collect();
        keys.push(joint_label(&parts));
        let mut padded = vec![UNKNOWN_LABEL; labels.len()];
        for (&f, &v) in factors.iter().zip(&digits) {
            padded[f] = labels[f][v].as_str();
        }
        given.push(joint_label(&padded));
    }
    (keys, given)
}

/// Index into the projected label list for each full index.
fn projection(dims: &DimsPartition, mask: &[bool]) -> Vec<usize> {
    let factors: Vec<usize> = (0..dims.len()).filter(|&f| mask[f]).collect();
    (0..dims.total())
        .map(|i| {
            let digits = dims.decode(i);
            factors.iter().fold(0, |acc, &f| acc * dims.factors()[f] + digits[f])
        })
        .collect()
}

/// First index whose cumulative weight exceeds `u`; the last positive
/// weight absorbs rounding at the top end.
fn inverse_cdf(weights: &[f64], scale: f64, u: f64) -> usize {
    let target = u * scale;
    let mut cumulative = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cumulative += w;
        if target < cumulative {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

struct Sampler {
    likelihood: Likelihood,
    /// Outcomes of the leading instrument factor, when present.
    outcomes: Option<usize>,
}

impl Sampler {
    fn draw(&self, rng: &mut impl Rng) -> (usize, usize) {
        let n_in = self.likelihood.inputs().total();
        let a = rng.random_range(0..n_in);
        let row = self.likelihood.row(a);
        let x = match self.outcomes {
            None => inverse_cdf(row, 1.0, rng.random::<f64>()),
            Some(n) => {
                let block = row.len() / n;
                let outcome_weights: Vec<f64> = row.chunks(block).map(|c| c.iter().sum()).collect();
                let i = inverse_cdf(&outcome_weights, 1.0, rng.random::<f64>());
                let updated = &row[i * block..(i + 1) * block];
                i * block + inverse_cdf(updated, outcome_weights[i], rng.random::<f64>())
            }
        };
        (a, x)
    }
}

pub fn run_ensemble(task: &InferenceTask, shots: u64, seed: u64) -> Result<EnsembleResult> {
    if shots == 0 {
        return Err(Error::invalid("an ensemble needs at least one shot"));
    }
    let likelihood = task.likelihood()?;
    let outcomes = match &task.transformation {
        Transformation::Instrument(inst) => Some(inst.len()),
        _ => None,
    };
    let (input_labels, input_given) = projected_labels(likelihood.input_labels(), &task.input_mask);
    let (output_labels, output_given) = projected_labels(likelihood.output_labels(), &task.output_mask);
    let in_proj = projection(likelihood.inputs(), &task.input_mask);
    let out_proj = projection(likelihood.outputs(), &task.output_mask);
    let width = output_labels.len();
    let cells = input_labels.len() * width;
    let sampler = Sampler { likelihood, outcomes };

    let chunks: Vec<u64> = (0..shots.div_ceil(CHUNK)).collect();
    let grid = chunks
        .par_iter()
        .map(|&c| {
            let mut local = vec![0u64; cells];
            for t in c * CHUNK..((c + 1) * CHUNK).min(shots) {
                let mut rng = substream(seed, t);
                let (a, x) = sampler.draw(&mut rng);
                local[in_proj[a] * width + out_proj[x]] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; cells],
            |mut acc, part| {
                acc.iter_mut().zip(part).for_each(|(a, p)| *a += p);
                acc
            },
        );

    let mut counts = IndexMap::with_capacity(cells);
    for (i, a) in input_labels.iter().enumerate() {
        for (j, x) in output_labels.iter().enumerate() {
            counts.insert(cell_key(a, x), grid[i * width + j]);
        }
    }
    Ok(EnsembleResult { shots, seed, input_labels, output_labels, input_given, output_given, counts })
}

/// Relative frequencies conditioned on one input label (prediction) or one
/// output label (postdiction).
pub fn empirical_conditional(result: &EnsembleResult, direction: Direction, given: usize) -> Result<ProbabilityTable> {
    let (n_in, n_out) = (result.input_labels.len(), result.output_labels.len());
    let (row_count, labels, given_label) = match direction {
        Direction::Predict => (n_in, &result.output_labels, &result.input_given),
        Direction::Postdict => (n_out, &result.input_labels, &result.output_given),
    };
    if given >= row_count {
        return Err(Error::invalid(format!("conditioning index {given} out of range")));
    }
    let cell = |k: usize| match direction {
        Direction::Predict => result.cell(given, k),
        Direction::Postdict => result.cell(k, given),
    };
    let total: u64 = (0..labels.len()).map(cell).sum();
    if total == 0 {
        return Err(Error::UndefinedConditional(format!("no trials with '{}'", given_label[given])));
    }
    let entries = labels.iter().enumerate().map(|(k, l)| (l.clone(), cell(k) as f64 / total as f64));
    Ok(ProbabilityTable::new(given_label[given].clone(), direction, entries.collect::<Vec<_>>()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTables {
    /// Each table with the number of trials it was estimated from.
    pub tables: Vec<(ProbabilityTable, u64)>,
    /// Conditioning labels with no trials.
    pub skipped: Vec<String>,
}

pub fn empirical_conditionals(result: &EnsembleResult, direction: Direction) -> Result<EmpiricalTables> {
    let n = match direction {
        Direction::Predict => result.input_labels.len(),
        Direction::Postdict => result.output_labels.len(),
    };
    let mut tables = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for g in 0..n {
        match empirical_conditional(result, direction, g) {
            Ok(t) => {
                let support: u64 = match direction {
                    Direction::Predict => (0..result.output_labels.len()).map(|k| result.cell(g, k)).sum(),
                    Direction::Postdict => (0..result.input_labels.len()).map(|k| result.cell(k, g)).sum(),
                };
                tables.push((t, support));
            }
            Err(Error::UndefinedConditional(_)) => skipped.push(match direction {
                Direction::Predict => result.input_given[g].clone(),
                Direction::Postdict => result.output_given[g].clone(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(EmpiricalTables { tables, skipped })
}

/// Smallest per-cell tolerance.
pub const TOLERANCE_FLOOR: f64 = 0.01;

/// `max(0.01, 4·√(p(1−p)/shots))`.
pub fn cell_tolerance(p: f64, shots: u64) -> f64 {
    cell_tolerance_with_floor(p, shots, TOLERANCE_FLOOR)
}

pub fn cell_tolerance_with_floor(p: f64, shots: u64, floor: f64) -> f64 {
    (4.0 * (p * (1.0 - p) / shots as f64).max(0.0).sqrt()).max(floor)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub given: String,
    pub max_deviation: f64,
    /// Label of the cell with the largest deviation relative to its
    /// tolerance, and that tolerance.
    pub worst_label: String,
    pub worst_tolerance: f64,
    pub pass: bool,
}

pub fn compare(empirical: &ProbabilityTable, analytic: &ProbabilityTable, shots: u64) -> Result<ComparisonReport> {
    compare_with_floor(empirical, analytic, shots, TOLERANCE_FLOOR)
}

pub fn compare_with_floor(
    empirical: &ProbabilityTable,
    analytic: &ProbabilityTable,
    shots: u64,
    floor: f64,
) -> Result<ComparisonReport> {
    empirical.max_abs_diff(analytic)?;
    let mut report = ComparisonReport {
        given: analytic.given.clone(),
        max_deviation: 0.0,
        worst_label: String::new(),
        worst_tolerance: 0.0,
        pass: true,
    };
    let mut worst_ratio = -1.0;
    for ((label, &e), &p) in empirical.entries.iter().zip(analytic.entries.values()) {
        let deviation = (e - p).abs();
        let tol = cell_tolerance_with_floor(p, shots, floor);
        report.max_deviation = report.max_deviation.max(deviation);
        report.pass &= deviation <= tol;
        if deviation / tol > worst_ratio {
            worst_ratio = deviation / tol;
            report.worst_label = label.clone();
            report.worst_tolerance = tol;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequentistReport {
    pub ensemble: EnsembleResult,
    pub predict: Vec<ComparisonReport>,
    pub postdict: Vec<ComparisonReport>,
    pub skipped: Vec<String>,
    pub pass: bool,
}

/// Run an ensemble and compare every empirical conditional, in both
/// directions, with the analytic table for the same task.
pub fn frequentist_check(task: &InferenceTask, shots: u64, seed: u64) -> Result<FrequentistReport> {
    frequentist_check_with_floor(task, shots, seed, TOLERANCE_FLOOR)
}

pub fn frequentist_check_with_floor(task: &InferenceTask, shots: u64, seed: u64, floor: f64) -> Result<FrequentistReport> {
    let ensemble = run_ensemble(task, shots, seed)?;
    let mut skipped = Vec::new();
    let mut sides = Vec::with_capacity(2);
    for direction in [Direction::Predict, Direction::Postdict] {
        let oriented = InferenceTask { direction, ..task.clone() };
        let empirical = empirical_conditionals(&ensemble, direction)?;
        skipped.extend(empirical.skipped.iter().cloned());
        let mut reports = Vec::with_capacity(empirical.tables.len());
        for (table, support) in &empirical.tables {
            let given = given_indices(&oriented, &table.given)?;
            let analytic = oriented.solve(&given)?;
            reports.push(compare_with_floor(table, &analytic, *support, floor)?);
        }
        sides.push(reports);
    }
    let postdict = sides.pop().expect("two sides");
    let predict = sides.pop().expect("two sides");
    let pass = predict.iter().chain(&postdict).all(|r| r.pass);
    Ok(FrequentistReport { ensemble, predict, postdict, skipped, pass })
}

/// Outcome indices of the masked factors named in a `*`-padded label.
fn given_indices(task: &InferenceTask, given: &str) -> Result<Vec<usize>> {
    let l = task.likelihood()?;
    let labels = match task.direction {
        Direction::Predict => l.input_labels(),
        Direction::Postdict => l.output_labels(),
    };
    let mask = task.given_mask();
    let parts: Vec<&str> = given.split(crate::table::LABEL_SEPARATOR).collect();
    if parts.len() != labels.len() {
        return Err(Error::invalid(format!("label '{given}' does not match the factor layout")));
    }
    parts
        .iter()
        .zip(labels)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((p, names), _)| {
            names.iter().position(|n| n == p).ok_or_else(|| Error::invalid(format!("unknown outcome label '{p}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{amplitude_damping_instrument, hadamard, identity_channel, make_amplitude_damping};
    use crate::inference::{postdict_channel, Preparation};
    use crate::linalg::Operator;

    fn closed(u: Operator, direction: Direction) -> InferenceTask {
        let d = DimsPartition::single(u.rows());
        InferenceTask::full(Transformation::Unitary(u), d.clone(), d, direction).unwrap()
    }

    #[test]
    fn identity_populates_diagonal_only() {
        let d = DimsPartition::single(2);
        let t = InferenceTask::full(Transformation::Channel(identity_channel(2)), d.clone(), d, Direction::Predict).unwrap();
        let r = run_ensemble(&t, 1000, 3).unwrap();
        assert_eq!(r.total(), 1000);
        assert_eq!(r.count("0", "1") + r.count("1", "0"), 0);
        assert!(r.count("0", "0") > 0 && r.count("1", "1") > 0);
        for direction in [Direction::Predict, Direction::Postdict] {
            for (table, _) in empirical_conditionals(&r, direction).unwrap().tables {
                assert!(table.probabilities().iter().all(|&p| p == 0.0 || p == 1.0));
            }
        }
    }

    #[test]
    fn hadamard_cells_and_conditionals() {
        let t = closed(hadamard(), Direction::Predict);
        let r = run_ensemble(&t, 100_000, 11).unwrap();
        for c in r.counts.values() {
            assert!((*c as f64 / 1e5 - 0.25).abs() < 0.01);
        }
        let report = frequentist_check(&t, 100_000, 11).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.predict.len() + report.postdict.len(), 4);
    }

    #[test]
    fn amplitude_damping_frequencies() {
        let d = DimsPartition::single(2);
        let ad = make_amplitude_damping(0.5).unwrap();
        let t = InferenceTask::full(Transformation::Channel(ad.clone()), d.clone(), d, Direction::Predict).unwrap();
        let r = run_ensemble(&t, 100_000, 5).unwrap();
        let pre = empirical_conditional(&r, Direction::Predict, 1).unwrap();
        assert!((pre.get("0").unwrap() - 0.5).abs() < 0.01);
        let post = empirical_conditional(&r, Direction::Postdict, 0).unwrap();
        let analytic = postdict_channel(&ad, 0).unwrap();
        assert!(post.max_abs_diff(&analytic).unwrap() < 0.015);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let t = closed(crate::linalg::haar_random_unitary(3, 2), Direction::Predict);
        let a = run_ensemble(&t, 20_000, 42).unwrap();
        let b = run_ensemble(&t, 20_000, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts, run_ensemble(&t, 20_000, 43).unwrap().counts);
    }

    #[test]
    fn parallel_equals_sequential() {
        let t = closed(hadamard(), Direction::Predict);
        let l = t.likelihood().unwrap();
        let sampler = Sampler { likelihood: l, outcomes: None };
        let mut sequential = [0u64; 4];
        for trial in 0..10_000 {
            let (a, x) = sampler.draw(&mut substream(9, trial));
            sequential[a * 2 + x] += 1;
        }
        let r = run_ensemble(&t, 10_000, 9).unwrap();
        assert_eq!(r.counts.values().copied().collect::<Vec<_>>(), sequential);
    }

    #[test]
    fn instrument_ensembles() {
        let inst = amplitude_damping_instrument(0.5).unwrap();
        let d = DimsPartition::single(2);
        let t = InferenceTask::full(Transformation::Instrument(inst), d.clone(), d, Direction::Predict).unwrap();
        let report = frequentist_check(&t, 50_000, 1).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.ensemble.output_labels.contains(&"1·0".to_string()));
    }

    #[test]
    fn general_preparation_ensembles() {
        let d = DimsPartition::single(2);
        let t = InferenceTask::new(
            Transformation::Unitary(Operator::identity(2)),
            d.clone(),
            d,
            Preparation::States(vec![crate::channels::ket(2, 0), crate::channels::plus_ket()]),
            Direction::Postdict,
            vec![true],
            vec![true],
        )
        .unwrap();
        let report = frequentist_check(&t, 100_000, 8).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn masked_factors_are_projected() {
        let q = DimsPartition::pair(2, 2);
        let t = InferenceTask::new(
            Transformation::Unitary(crate::channels::cnot()),
            q.clone(),
            q,
            Preparation::Basis,
            Direction::Postdict,
            vec![true, false],
            vec![true, false],
        )
        .unwrap();
        let r = run_ensemble(&t, 1000, 0).unwrap();
        assert_eq!(r.input_labels, ["0", "1"]);
        assert_eq!(r.output_given, ["0·*", "1·*"]);
        assert!(frequentist_check(&t, 100_000, 2).unwrap().pass);
    }

    #[test]
    fn compare_controls() {
        let t = ProbabilityTable::indexed("0", Direction::Predict, &[0.5, 0.5]);
        let r = compare(&t, &t, 100).unwrap();
        assert!(r.pass && r.max_deviation == 0.0);
        let skew = ProbabilityTable::indexed("0", Direction::Predict, &[0.9, 0.1]);
        assert!(!compare(&skew, &t, 100_000).unwrap().pass);
        let swapped = ProbabilityTable::new("0", Direction::Predict, [("1".into(), 0.5), ("0".into(), 0.5)]);
        assert!(compare(&swapped, &t, 100).is_err());
        assert_eq!(cell_tolerance(0.5, 100), 0.2);
        assert_eq!(cell_tolerance(0.5, 1_000_000), 0.01);
    }

    #[test]
    fn inverse_cdf_edges() {
        assert_eq!(inverse_cdf(&[0.0, 1.0], 1.0, 0.0), 1);
        assert_eq!(inverse_cdf(&[0.5, 0.5, 0.0], 1.0, 0.999_999_999_999_999_9), 1);
        assert_eq!(inverse_cdf(&[0.25, 0.25], 0.5, 0.6), 1);
    }

    #[test]
    fn zero_shots_rejected() {
        assert!(run_ensemble(&closed(hadamard(), Direction::Predict), 0, 0).is_err());
    }

    #[test]
    fn serialized_counts_use_cell_keys() {
        let r = run_ensemble(&closed(Operator::identity(2), Direction::Predict), 10, 0).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["shots"], 10);
        assert!(v["counts"]["0|0"].is_u64());
    }
}
