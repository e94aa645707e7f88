//! Likelihood matrices `P(x | a)` over partitioned input and output spaces.
//!
//! Every task reduces to one of these. Prediction conditions on known input
//! factors, averaging unknown ones (maximally mixed input) and summing over
//! ignored outputs. Postdiction conditions on known output factors under a
//! flat prior over all input alternatives, summing over ignored inputs and
//! unknown outputs.

use crate::channels::{make_unitary_channel, Instrument, QuantumMap};
use crate::error::{Error, Result};
use crate::linalg::{DimsPartition, Operator, STRUCTURAL_TOL};
use crate::table::{joint_label, Direction, ProbabilityTable, UNKNOWN_LABEL};

/// Evidence below this makes a postdiction undefined.
pub const EVIDENCE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Likelihood {
    input_labels: Vec<Vec<String>>,
    output_labels: Vec<Vec<String>>,
    inputs: DimsPartition,
    outputs: DimsPartition,
    /// Row-major `[a][x]`.
    values: Vec<f64>,
}

fn index_labels(dims: &DimsPartition) -> Vec<Vec<String>> {
    dims.factors().iter().map(|&d| (0..d).map(|i| i.to_string()).collect()).collect()
}

/// All digit tuples over `dims`, first factor most significant.
fn enumerate(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        out = out.into_iter().flat_map(|prefix| (0..d).map(move |v| [prefix.clone(), vec![v]].concat())).collect();
    }
    out
}

fn split_known(known: &[Option<usize>], labels: &[Vec<String>], side: &str) -> Result<(usize, Vec<usize>, String)> {
    if known.len() != labels.len() {
        return Err(Error::dims(format!(
            "{side} outcome has {} entries for {} factors",
            known.len(),
            labels.len()
        )));
    }
    let mut digits = Vec::with_capacity(known.len());
    let mut unknown = Vec::new();
    let mut given = Vec::with_capacity(known.len());
    for (f, (value, names)) in known.iter().zip(labels).enumerate() {
        match value {
            Some(v) if *v >= names.len() => {
                return Err(Error::invalid(format!(
                    "{side} factor {f} has {} outcomes, got index {v}",
                    names.len()
                )))
            }
            Some(v) => {
                digits.push(*v);
                given.push(names[*v].as_str());
            }
            None => {
                digits.push(0);
                unknown.push(f);
                given.push(UNKNOWN_LABEL);
            }
        }
    }
    let dims = DimsPartition::new(labels.iter().map(Vec::len).collect())?;
    Ok((dims.encode(&digits), unknown, joint_label(&given)))
}

fn split_mask(mask: &[bool], count: usize, side: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    if mask.len() != count {
        return Err(Error::dims(format!("{side} mask has {} entries for {count} factors", mask.len())));
    }
    let guessed: Vec<usize> = (0..count).filter(|&f| mask[f]).collect();
    if guessed.is_empty() {
        return Err(Error::invalid(format!("{side} mask selects no factor to infer")));
    }
    Ok((guessed, (0..count).filter(|&f| !mask[f]).collect()))
}

fn guessed_labels(labels: &[Vec<String>], guessed: &[usize]) -> Vec<String> {
    let dims: Vec<usize> = guessed.iter().map(|&f| labels[f].len()).collect();
    enumerate(&dims)
        .into_iter()
        .map(|digits| joint_label(&digits.iter().zip(guessed).map(|(&v, &f)| labels[f][v].as_str()).collect::<Vec<_>>()))
        .collect()
}

impl Likelihood {
    pub fn new(input_labels: Vec<Vec<String>>, output_labels: Vec<Vec<String>>, values: Vec<f64>) -> Result<Self> {
        let inputs = DimsPartition::new(input_labels.iter().map(Vec::len).collect())?;
        let outputs = DimsPartition::new(output_labels.iter().map(Vec::len).collect())?;
        if values.len() != inputs.total() * outputs.total() {
            return Err(Error::dims("likelihood matrix does not match the label sets"));
        }
        Ok(Self { input_labels, output_labels, inputs, outputs, values })
    }

    /// `|⟨x|U|a⟩|²`.
    pub fn from_unitary(u: &Operator, dims_in: &DimsPartition, dims_out: &DimsPartition) -> Result<Self> {
        let defect = u.unitarity_defect();
        if defect > STRUCTURAL_TOL {
            return Err(Error::NotUnitary { what: "transformation".into(), defect });
        }
        if dims_in.total() != u.cols() || dims_out.total() != u.rows() {
            return Err(Error::dims(format!(
                "unitary is {}x{}, partitions give {}x{}",
                u.rows(),
                u.cols(),
                dims_out.total(),
                dims_in.total()
            )));
        }
        let d = u.rows();
        let values = (0..d).flat_map(|a| (0..d).map(move |x| (a, x))).map(|(a, x)| u.get(x, a).norm_sqr()).collect();
        Self::new(index_labels(dims_in), index_labels(dims_out), values)
    }

    /// `tr(|x⟩⟨x| Φ[|a⟩⟨a|])`.
    pub fn from_channel(map: &QuantumMap, dims_in: &DimsPartition, dims_out: &DimsPartition) -> Result<Self> {
        map.ensure_cptp("transformation")?;
        if dims_in.total() != map.dim_in() || dims_out.total() != map.dim_out() {
            return Err(Error::dims("channel dimensions do not match the partitions"));
        }
        let values = diagonal_responses(map)?;
        Self::new(index_labels(dims_in), index_labels(dims_out), values.concat())
    }

    /// `tr(|x⟩⟨x| O_i[|a⟩⟨a|])` with the outcome `i` as a leading output factor.
    pub fn from_instrument(inst: &Instrument, dims_in: &DimsPartition, dims_out: &DimsPartition) -> Result<Self> {
        if dims_in.total() != inst.dim_in() || dims_out.total() != inst.dim_out() {
            return Err(Error::dims("instrument dimensions do not match the partitions"));
        }
        let per_outcome = inst.outcomes().iter().map(|(_, m)| diagonal_responses(m)).collect::<Result<Vec<_>>>()?;
        let (da, dx) = (inst.dim_in(), inst.dim_out());
        let mut values = Vec::with_capacity(da * inst.len() * dx);
        for a in 0..da {
            for rows in &per_outcome {
                values.extend_from_slice(&rows[a]);
            }
        }
        let mut output_labels = vec![inst.labels().map(str::to_string).collect()];
        output_labels.extend(index_labels(dims_out));
        Self::new(index_labels(dims_in), output_labels, values)
    }

    /// `⟨x|Φ[|ψ_i⟩⟨ψ_i|]|x⟩` for a list of normalized kets, one input
    /// alternative per ket.
    pub fn from_states(states: &[Operator], map: &QuantumMap, dims_out: &DimsPartition) -> Result<Self> {
        map.ensure_cptp("transformation")?;
        if states.is_empty() {
            return Err(Error::invalid("state preparation needs at least one state"));
        }
        if dims_out.total() != map.dim_out() {
            return Err(Error::dims("channel output does not match the output partition"));
        }
        let mut values = Vec::with_capacity(states.len() * map.dim_out());
        for (i, psi) in states.iter().enumerate() {
            if psi.shape() != (map.dim_in(), 1) {
                return Err(Error::dims(format!("state {i} is not a ket of dimension {}", map.dim_in())));
            }
            let norm = psi.inner(psi).re;
            if (norm - 1.0).abs() > STRUCTURAL_TOL {
                return Err(Error::invalid(format!("state {i} is not normalized (⟨ψ|ψ⟩ = {norm:.6})")));
            }
            let out = map.apply(&psi.projector())?;
            values.extend((0..map.dim_out()).map(|x| out.get(x, x).re));
        }
        let input_labels = vec![(0..states.len()).map(|i| i.to_string()).collect()];
        Self::new(input_labels, index_labels(dims_out), values)
    }

    pub fn from_unitary_states(states: &[Operator], u: &Operator) -> Result<Self> {
        Self::from_states(states, &make_unitary_channel(u)?, &DimsPartition::single(u.rows()))
    }

    pub fn inputs(&self) -> &DimsPartition {
        &self.inputs
    }

    pub fn outputs(&self) -> &DimsPartition {
        &self.outputs
    }

    pub fn input_labels(&self) -> &[Vec<String>] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[Vec<String>] {
        &self.output_labels
    }

    pub fn get(&self, a: usize, x: usize) -> f64 {
        self.values[a * self.outputs.total() + x]
    }

    /// Distribution over the full output index for input alternative `a`.
    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.outputs.total();
        &self.values[a * n..(a + 1) * n]
    }

    /// Joint label of a full input index restricted to `factors`.
    pub fn input_label(&self, a: usize, factors: &[usize]) -> String {
        let digits = self.inputs.decode(a);
        joint_label(&factors.iter().map(|&f| self.input_labels[f][digits[f]].as_str()).collect::<Vec<_>>())
    }

    pub fn output_label(&self, x: usize, factors: &[usize]) -> String {
        let digits = self.outputs.decode(x);
        joint_label(&factors.iter().map(|&f| self.output_labels[f][digits[f]].as_str()).collect::<Vec<_>>())
    }

    /// `P(x_g | a_k)`: unknown inputs maximally mixed, unguessed outputs
    /// discarded.
    pub fn predict(&self, known_input: &[Option<usize>], guessed_output: &[bool]) -> Result<ProbabilityTable> {
        let (base, unknown, given) = split_known(known_input, &self.input_labels, "input")?;
        let (guessed, ignored) = split_mask(guessed_output, self.outputs.len(), "output")?;
        let a_offsets = self.inputs.offsets(&unknown);
        let g_offsets = self.outputs.offsets(&guessed);
        let i_offsets = self.outputs.offsets(&ignored);
        let weight = 1.0 / a_offsets.len() as f64;
        let entries = guessed_labels(&self.output_labels, &guessed).into_iter().zip(&g_offsets).map(|(label, &g)| {
            let total: f64 = a_offsets
                .iter()
                .flat_map(|&ao| i_offsets.iter().map(move |&io| self.get(base + ao, g + io)))
                .sum();
            (label, weight * total)
        });
        Ok(ProbabilityTable::new(given, Direction::Predict, entries.collect::<Vec<_>>()))
    }

    /// `P(a_g | x_k)` by Bayesian inversion under a flat prior over all input
    /// alternatives. The table factor is `P_post(a_g|x_k) / P_pre(x_k|a_g)`.
    pub fn postdict(&self, known_output: &[Option<usize>], guessed_input: &[bool]) -> Result<ProbabilityTable> {
        let (base, unknown, given) = split_known(known_output, &self.output_labels, "output")?;
        let (guessed, ignored) = split_mask(guessed_input, self.inputs.len(), "input")?;
        let x_offsets = self.outputs.offsets(&unknown);
        let g_offsets = self.inputs.offsets(&guessed);
        let i_offsets = self.inputs.offsets(&ignored);
        let numerators: Vec<f64> = g_offsets
            .iter()
            .map(|&g| {
                i_offsets
                    .iter()
                    .flat_map(|&io| x_offsets.iter().map(move |&xo| self.get(g + io, base + xo)))
                    .sum()
            })
            .collect();
        let evidence: f64 = numerators.iter().sum();
        if evidence < EVIDENCE_FLOOR {
            return Err(Error::UndefinedConditional(format!(
                "output '{given}' has zero probability under a flat prior"
            )));
        }
        let labels = guessed_labels(&self.input_labels, &guessed);
        let entries: Vec<(String, f64)> = labels.into_iter().zip(numerators).map(|(l, n)| (l, n / evidence)).collect();
        Ok(ProbabilityTable::new(given, Direction::Postdict, entries).with_factor(i_offsets.len() as f64 / evidence))
    }

    /// Fully resolved prediction from input index `a`.
    pub fn predict_full(&self, a: usize) -> Result<ProbabilityTable> {
        let digits = self.inputs.decode(a);
        self.predict(&digits.into_iter().map(Some).collect::<Vec<_>>(), &vec![true; self.outputs.len()])
    }

    /// Fully resolved postdiction from output index `x`.
    pub fn postdict_full(&self, x: usize) -> Result<ProbabilityTable> {
        let digits = self.outputs.decode(x);
        self.postdict(&digits.into_iter().map(Some).collect::<Vec<_>>(), &vec![true; self.inputs.len()])
    }
}

/// Diagonals of `Φ[|a⟩⟨a|]`, one row per input basis state.
fn diagonal_responses(map: &QuantumMap) -> Result<Vec<Vec<f64>>> {
    let d_in = map.dim_in();
    (0..d_in)
        .map(|a| {
            let out = map.apply(&crate::linalg::basis_projector(d_in, a)?)?;
            Ok((0..map.dim_out()).map(|x| out.get(x, x).re).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{amplitude_damping_instrument, cnot, make_amplitude_damping};

    #[test]
    fn enumerate_is_lexicographic() {
        assert_eq!(enumerate(&[2, 3])[4], vec![1, 1]);
        assert_eq!(enumerate(&[]).len(), 1);
    }

    #[test]
    fn given_labels_mark_unknown_factors() {
        let l = Likelihood::from_unitary(&cnot(), &DimsPartition::pair(2, 2), &DimsPartition::pair(2, 2)).unwrap();
        let t = l.predict(&[Some(1), None], &[true, true]).unwrap();
        assert_eq!(t.given, "1·*");
        assert_eq!(t.labels().collect::<Vec<_>>(), ["0·0", "0·1", "1·0", "1·1"]);
    }

    #[test]
    fn mask_errors() {
        let l = Likelihood::from_unitary(&cnot(), &DimsPartition::pair(2, 2), &DimsPartition::pair(2, 2)).unwrap();
        assert!(matches!(l.predict(&[Some(0)], &[true, true]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(l.predict(&[Some(0), None], &[false, false]), Err(Error::InvalidInput(_))));
        assert!(matches!(l.predict(&[Some(2), None], &[true, true]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn instrument_outcome_is_leading_factor() {
        let inst = amplitude_damping_instrument(0.5).unwrap();
        let l = Likelihood::from_instrument(&inst, &DimsPartition::single(2), &DimsPartition::single(2)).unwrap();
        assert_eq!(l.outputs().factors(), &[2, 2]);
        let t = l.predict_full(1).unwrap();
        assert!(t.is_normalized(1e-12));
        // Marginal over the outcome reproduces the channel.
        let m = l.predict(&[Some(1)], &[false, true]).unwrap();
        let ch = Likelihood::from_channel(
            &make_amplitude_damping(0.5).unwrap(),
            &DimsPartition::single(2),
            &DimsPartition::single(2),
        )
        .unwrap();
        assert!(m.max_abs_diff(&ch.predict_full(1).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized_states() {
        let bad = Operator::real(&[&[1.0], &[1.0]]);
        assert!(matches!(
            Likelihood::from_unitary_states(&[bad], &Operator::identity(2)),
            Err(Error::InvalidInput(_))
        ));
    }
}
