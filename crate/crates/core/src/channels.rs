//! Quantum maps, instruments and channels in Kraus form.
//!
//! A [`QuantumMap`] is a list of Kraus operators `K_k` acting as
//! `ρ ↦ Σ_k K_k ρ K_k†`. An [`Instrument`] is an ordered, labelled list of
//! maps whose sum is trace preserving. Maps are compared by their action on
//! an operator basis, never by their Kraus lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    basis_ket, haar_random_unitary, matrix_unit, tensor, DimsPartition, Operator, C64, PROBABILITY_TOL,
    STRUCTURAL_TOL,
};
use crate::table::{joint_label, Direction, ProbabilityTable};

/// Completely positive map `ρ ↦ Σ_k K_k ρ K_k†` from `dim_in` to `dim_out`.
///
/// Construction only checks shapes. Trace non-increase is a property queried
/// through [`QuantumMap::is_trace_non_increasing`], because adjoints of
/// channels are legitimately representable yet may violate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct QuantumMap {
    kraus: Vec<Operator>,
    dim_in: usize,
    dim_out: usize,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<Operator>,
}

impl TryFrom<RawMap> for QuantumMap {
    type Error = Error;

    fn try_from(raw: RawMap) -> Result<Self> {
        QuantumMap::new(raw.kraus, raw.dim_in, raw.dim_out)
    }
}

impl From<QuantumMap> for RawMap {
    fn from(m: QuantumMap) -> Self {
        RawMap { dim_in: m.dim_in, dim_out: m.dim_out, kraus: m.kraus }
    }
}

impl QuantumMap {
    pub fn new(kraus: Vec<Operator>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::invalid("a quantum map needs at least one Kraus operator"));
        }
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::dims("map dimensions must be positive"));
        }
        if let Some((k, op)) = kraus.iter().enumerate().find(|(_, k)| k.shape() != (dim_out, dim_in)) {
            return Err(Error::dims(format!(
                "Kraus operator {k} is {}x{}, expected {dim_out}x{dim_in}",
                op.rows(),
                op.cols()
            )));
        }
        Ok(Self { kraus, dim_in, dim_out })
    }

    /// Infers dimensions from the first Kraus operator.
    pub fn from_kraus(kraus: Vec<Operator>) -> Result<Self> {
        let (rows, cols) = kraus.first().map(Operator::shape).ok_or_else(|| Error::invalid("empty Kraus list"))?;
        Self::new(kraus, cols, rows)
    }

    pub fn kraus(&self) -> &[Operator] {
        &self.kraus
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `Σ_k K_k† K_k`.
    pub fn kraus_gram(&self) -> Operator {
        self.kraus.iter().fold(Operator::zeros(self.dim_in, self.dim_in), |acc, k| &acc + &(&k.adjoint() * k))
    }

    pub fn is_trace_non_increasing(&self) -> bool {
        self.kraus_gram().max_eigenvalue() <= 1.0 + STRUCTURAL_TOL
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        self.kraus_gram().max_abs_diff(&Operator::identity(self.dim_in))
    }

    /// Fails unless the map is CPTP (Kraus form guarantees CP).
    pub fn ensure_cptp(&self, what: &str) -> Result<()> {
        let defect = self.trace_preservation_defect();
        if defect > STRUCTURAL_TOL {
            return Err(Error::NotCptp {
                what: what.to_string(),
                reason: format!("Σ K†K deviates from the identity by {defect:.3e}"),
            });
        }
        Ok(())
    }

    /// Action on an arbitrary `dim_in × dim_in` operator.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        if rho.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::dims(format!(
                "map expects {0}x{0} input, got {1}x{2}",
                self.dim_in,
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(self.kraus.iter().fold(Operator::zeros(self.dim_out, self.dim_out), |acc, k| &acc + &k.conjugate(rho)))
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
    pub fn choi(&self) -> Operator {
        let d = self.dim_in;
        let mut choi = Operator::zeros(d * self.dim_out, d * self.dim_out);
        for i in 0..d {
            for j in 0..d {
                let unit = matrix_unit(d, i, j);
                let block = tensor(&unit, &self.apply(&unit).expect("shape checked"));
                choi = &choi + &block;
            }
        }
        choi
    }

    /// Largest entrywise difference in action over the matrix-unit basis.
    pub fn action_distance(&self, other: &QuantumMap) -> f64 {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return f64::INFINITY;
        }
        let d = self.dim_in;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let unit = matrix_unit(d, i, j);
                let a = self.apply(&unit).expect("shape checked");
                let b = other.apply(&unit).expect("shape checked");
                worst = worst.max(a.max_abs_diff(&b));
            }
        }
        worst
    }
}

/// Apply a map to a state.
pub fn apply(map: &QuantumMap, rho: &Operator) -> Result<Operator> {
    map.apply(rho)
}

/// Outcome-labelled maps satisfying the completeness relation
/// `Σ_i Σ_k K_{i,k}† K_{i,k} = 𝕀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstrument", into = "RawInstrument")]
pub struct Instrument {
    outcomes: Vec<(String, QuantumMap)>,
    dim_in: usize,
    dim_out: usize,
}

#[derive(Serialize, Deserialize)]
struct RawOutcome {
    label: String,
    kraus: Vec<Operator>,
}

#[derive(Serialize, Deserialize)]
struct RawInstrument {
    dim_in: usize,
    dim_out: usize,
    outcomes: Vec<RawOutcome>,
}

impl TryFrom<RawInstrument> for Instrument {
    type Error = Error;

    fn try_from(raw: RawInstrument) -> Result<Self> {
        let outcomes = raw
            .outcomes
            .into_iter()
            .map(|o| Ok((o.label, QuantumMap::new(o.kraus, raw.dim_in, raw.dim_out)?)))
            .collect::<Result<Vec<_>>>()?;
        Instrument::new(outcomes, raw.dim_in, raw.dim_out)
    }
}

impl From<Instrument> for RawInstrument {
    fn from(inst: Instrument) -> Self {
        RawInstrument {
            dim_in: inst.dim_in,
            dim_out: inst.dim_out,
            outcomes: inst.outcomes.into_iter().map(|(label, map)| RawOutcome { label, kraus: map.kraus }).collect(),
        }
    }
}

impl Instrument {
    pub fn new(outcomes: Vec<(String, QuantumMap)>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::invalid("an instrument needs at least one outcome"));
        }
        for (i, (label, map)) in outcomes.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::invalid(format!("outcome {i} has an empty label")));
            }
            if outcomes[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::invalid(format!("duplicate outcome label '{label}'")));
            }
            if map.dim_in != dim_in || map.dim_out != dim_out {
                return Err(Error::dims(format!(
                    "outcome '{label}' maps {}→{}, instrument declares {dim_in}→{dim_out}",
                    map.dim_in, map.dim_out
                )));
            }
        }
        let inst = Self { outcomes, dim_in, dim_out };
        let defect = inst.completeness_defect();
        if defect > STRUCTURAL_TOL {
            return Err(Error::Incomplete { what: "instrument".into(), defect });
        }
        Ok(inst)
    }

    /// Single-outcome instrument wrapping a channel.
    pub fn from_channel(label: impl Into<String>, channel: QuantumMap) -> Result<Self> {
        let (dim_in, dim_out) = (channel.dim_in, channel.dim_out);
        Self::new(vec![(label.into(), channel)], dim_in, dim_out)
    }

    /// A test (`dim_out = 1`) from positive effects summing to the identity.
    /// Each effect `σ = Σ λ |v⟩⟨v|` becomes Kraus rows `√λ ⟨v|`.
    pub fn test_from_effects(effects: Vec<(String, Operator)>) -> Result<Self> {
        let d = effects.first().map(|(_, e)| e.rows()).ok_or_else(|| Error::invalid("no effects"))?;
        let outcomes = effects
            .into_iter()
            .map(|(label, effect)| {
                let kraus = sqrt_factors(&effect, &label)?.into_iter().map(|v| v.adjoint()).collect();
                Ok((label, QuantumMap::new(kraus, d, 1)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(outcomes, d, 1)
    }

    /// A preparation (`dim_in = 1`) from sub-normalised states with total
    /// trace one. Each `ρ = Σ λ |v⟩⟨v|` becomes Kraus columns `√λ |v⟩`.
    pub fn preparation_from_states(states: Vec<(String, Operator)>) -> Result<Self> {
        let d = states.first().map(|(_, s)| s.rows()).ok_or_else(|| Error::invalid("no states"))?;
        let outcomes = states
            .into_iter()
            .map(|(label, rho)| Ok((label.clone(), QuantumMap::new(sqrt_factors(&rho, &label)?, 1, d)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(outcomes, 1, d)
    }

    pub fn outcomes(&self) -> &[(String, QuantumMap)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn map(&self, label: &str) -> Result<&QuantumMap> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::invalid(format!("unknown outcome label '{label}'")))
    }

    /// Effect operator `Σ_k K_k† K_k` of every outcome.
    pub fn effects(&self) -> Vec<(String, Operator)> {
        self.outcomes.iter().map(|(l, m)| (l.clone(), m.kraus_gram())).collect()
    }

    pub fn completeness_defect(&self) -> f64 {
        let total =
            self.outcomes.iter().fold(Operator::zeros(self.dim_in, self.dim_in), |acc, (_, m)| &acc + &m.kraus_gram());
        total.max_abs_diff(&Operator::identity(self.dim_in))
    }
}

fn sqrt_factors(op: &Operator, label: &str) -> Result<Vec<Operator>> {
    if !op.is_hermitian(STRUCTURAL_TOL) {
        return Err(Error::invalid(format!("operator for '{label}' is not Hermitian")));
    }
    let (values, vectors) = op.hermitian_eigen();
    let mut factors = Vec::new();
    for (j, &lambda) in values.iter().enumerate() {
        if lambda < -STRUCTURAL_TOL {
            return Err(Error::invalid(format!("operator for '{label}' is not positive (eigenvalue {lambda:.3e})")));
        }
        if lambda > STRUCTURAL_TOL {
            factors.push(vectors.column(j).scale_real(lambda.sqrt()));
        }
    }
    if factors.is_empty() {
        factors.push(Operator::zeros(op.rows(), 1));
    }
    Ok(factors)
}

fn ensure_state(rho: &Operator, dim: usize) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::dims(format!("expected a {dim}x{dim} state, got {}x{}", rho.rows(), rho.cols())));
    }
    if !rho.is_state(STRUCTURAL_TOL) {
        return Err(Error::invalid("input is not a density matrix (Hermitian, positive, unit trace)"));
    }
    Ok(())
}

/// Generalised Born rule: `P(i|ρ) = tr O_i[ρ]` for every outcome.
pub fn outcome_probabilities(inst: &Instrument, rho: &Operator) -> Result<ProbabilityTable> {
    ensure_state(rho, inst.dim_in)?;
    let entries = inst
        .outcomes
        .iter()
        .map(|(label, map)| Ok((label.clone(), map.apply(rho)?.trace().re)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbabilityTable::new("rho", Direction::Predict, entries))
}

/// Post-measurement state `O_i[ρ] / tr O_i[ρ]`.
pub fn state_update(inst: &Instrument, rho: &Operator, outcome: &str) -> Result<Operator> {
    ensure_state(rho, inst.dim_in)?;
    let unnormalised = inst.map(outcome)?.apply(rho)?;
    let p = unnormalised.trace().re;
    if p <= PROBABILITY_TOL {
        return Err(Error::UndefinedConditional(format!("outcome '{outcome}' has probability {p:.3e}")));
    }
    Ok(unnormalised.scale_real(1.0 / p))
}

/// Forget the outcome: the channel `Σ_i O_i`.
pub fn coarse_grain(inst: &Instrument) -> QuantumMap {
    let kraus = inst.outcomes.iter().flat_map(|(_, m)| m.kraus.iter().cloned()).collect();
    QuantumMap::new(kraus, inst.dim_in, inst.dim_out).expect("shapes already validated")
}

/// `second ∘ first` with outcome labels `i·j`.
pub fn compose_sequential(first: &Instrument, second: &Instrument) -> Result<Instrument> {
    if first.dim_out != second.dim_in {
        return Err(Error::dims(format!(
            "first instrument outputs dimension {}, second expects {}",
            first.dim_out, second.dim_in
        )));
    }
    let mut outcomes = Vec::with_capacity(first.len() * second.len());
    for (li, oi) in &first.outcomes {
        for (lj, mj) in &second.outcomes {
            let kraus = oi.kraus.iter().flat_map(|k| mj.kraus.iter().map(move |m| m * k)).collect();
            outcomes.push((joint_label(&[li, lj]), QuantumMap::new(kraus, first.dim_in, second.dim_out)?));
        }
    }
    Instrument::new(outcomes, first.dim_in, second.dim_out)
}

/// `a ⊗ b` with outcome labels `i·j`.
pub fn compose_parallel(a: &Instrument, b: &Instrument) -> Result<Instrument> {
    let (dim_in, dim_out) = (a.dim_in * b.dim_in, a.dim_out * b.dim_out);
    let mut outcomes = Vec::with_capacity(a.len() * b.len());
    for (li, oi) in &a.outcomes {
        for (lj, mj) in &b.outcomes {
            let kraus = oi.kraus.iter().flat_map(|k| mj.kraus.iter().map(move |m| tensor(k, m))).collect();
            outcomes.push((joint_label(&[li, lj]), QuantumMap::new(kraus, dim_in, dim_out)?));
        }
    }
    Instrument::new(outcomes, dim_in, dim_out)
}

/// Structural properties of a map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelClassification {
    pub is_cp: bool,
    pub is_tp: bool,
    pub is_unital: bool,
    pub choi_min_eigenvalue: f64,
    /// `max |Φ[𝕀] − 𝕀|`.
    pub unital_defect: f64,
}

impl ChannelClassification {
    pub fn is_cptp(&self) -> bool {
        self.is_cp && self.is_tp
    }
}

pub fn classify(map: &QuantumMap) -> ChannelClassification {
    let choi_min_eigenvalue = map.choi().min_eigenvalue();
    let image = map.apply(&Operator::identity(map.dim_in)).expect("identity has the input shape");
    let unital_defect = image.max_abs_diff(&Operator::identity(map.dim_out));
    ChannelClassification {
        is_cp: choi_min_eigenvalue >= -STRUCTURAL_TOL,
        is_tp: map.trace_preservation_defect() < STRUCTURAL_TOL,
        is_unital: unital_defect < STRUCTURAL_TOL,
        choi_min_eigenvalue,
        unital_defect,
    }
}

/// Hilbert–Schmidt adjoint: Kraus operators `K_k†`.
pub fn adjoint_map(map: &QuantumMap) -> QuantumMap {
    QuantumMap::new(map.kraus.iter().map(Operator::adjoint).collect(), map.dim_out, map.dim_in)
        .expect("adjoint shapes are consistent")
}

pub fn make_unitary_channel(u: &Operator) -> Result<QuantumMap> {
    let defect = u.unitarity_defect();
    if defect > STRUCTURAL_TOL {
        return Err(Error::NotUnitary { what: "channel unitary".into(), defect });
    }
    QuantumMap::new(vec![u.clone()], u.cols(), u.rows())
}

/// Qubit dephasing `ρ ↦ Σ_i ⟨i|ρ|i⟩ |i⟩⟨i|`.
pub fn make_dephasing() -> QuantumMap {
    projective_measurement(2).map(|m| coarse_grain(&m)).expect("qubit measurement is complete")
}

/// Noisy operation `ρ ↦ tr_B U[ρ ⊗ 𝕀_B/d_B]` for `U` on `A ⊗ B`.
/// `dims` is `[d_A, d_B]`.
pub fn make_noisy_operation(u: &Operator, dims: &DimsPartition) -> Result<QuantumMap> {
    if dims.len() != 2 {
        return Err(Error::dims("noisy operations need a [d_A, d_B] partition"));
    }
    let (da, db) = (dims.factors()[0], dims.factors()[1]);
    if u.shape() != (da * db, da * db) {
        return Err(Error::dims(format!("unitary is {}x{}, partition needs {}", u.rows(), u.cols(), da * db)));
    }
    let defect = u.unitarity_defect();
    if defect > STRUCTURAL_TOL {
        return Err(Error::NotUnitary { what: "noisy-operation unitary".into(), defect });
    }
    let weight = 1.0 / (db as f64).sqrt();
    let mut kraus = Vec::with_capacity(db * db);
    for j in 0..db {
        for k in 0..db {
            // (𝕀_A ⊗ ⟨k|) U (𝕀_A ⊗ |j⟩) / √d_B
            let op = Operator::from_fn(da, da, |r, c| u.get(r * db + k, c * db + j) * weight);
            kraus.push(op);
        }
    }
    QuantumMap::new(kraus, da, da)
}

/// Amplitude damping with decay probability `gamma`.
pub fn make_amplitude_damping(gamma: f64) -> Result<QuantumMap> {
    let [k0, k1] = amplitude_damping_kraus(gamma)?;
    QuantumMap::new(vec![k0, k1], 2, 2)
}

/// Amplitude damping as a two-outcome instrument: `"0"` keeps, `"1"` decays.
pub fn amplitude_damping_instrument(gamma: f64) -> Result<Instrument> {
    let [k0, k1] = amplitude_damping_kraus(gamma)?;
    Instrument::new(
        vec![("0".into(), QuantumMap::new(vec![k0], 2, 2)?), ("1".into(), QuantumMap::new(vec![k1], 2, 2)?)],
        2,
        2,
    )
}

fn amplitude_damping_kraus(gamma: f64) -> Result<[Operator; 2]> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("damping probability {gamma} outside [0, 1]")));
    }
    Ok([
        Operator::real(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]]),
        Operator::real(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]),
    ])
}

/// Non-destructive projective measurement in the computational basis,
/// outcomes labelled `0..d`.
pub fn projective_measurement(d: usize) -> Result<Instrument> {
    measurement_in_basis(&Operator::identity(d), (0..d).map(|i| i.to_string()).collect())
}

/// Non-destructive projective measurement onto the columns of `basis`.
pub fn measurement_in_basis(basis: &Operator, labels: Vec<String>) -> Result<Instrument> {
    let defect = basis.unitarity_defect();
    if defect > STRUCTURAL_TOL {
        return Err(Error::NotUnitary { what: "measurement basis".into(), defect });
    }
    let d = basis.rows();
    if labels.len() != d {
        return Err(Error::dims(format!("{} labels for a {d}-element basis", labels.len())));
    }
    let outcomes = labels
        .into_iter()
        .enumerate()
        .map(|(j, l)| Ok((l, QuantumMap::new(vec![basis.column(j).projector()], d, d)?)))
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(outcomes, d, d)
}

/// Qubit measurement in the `|±⟩` basis, outcomes `"+"` and `"-"`.
pub fn x_measurement() -> Instrument {
    measurement_in_basis(&hadamard(), vec!["+".into(), "-".into()]).expect("Hadamard is unitary")
}

/// Single-outcome identity instrument.
pub fn identity_instrument(d: usize) -> Instrument {
    Instrument::from_channel("id", identity_channel(d)).expect("identity is complete")
}

pub fn identity_channel(d: usize) -> QuantumMap {
    QuantumMap::new(vec![Operator::identity(d)], d, d).expect("square identity")
}

pub fn hadamard() -> Operator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Operator::real(&[&[s, s], &[s, -s]])
}

pub fn cnot() -> Operator {
    Operator::real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

pub fn swap() -> Operator {
    Operator::real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

/// Random instrument with `outcomes` outcomes and `rank` Kraus operators per
/// outcome, cut from a Haar isometry into `out ⊗ outcome ⊗ rank`.
pub fn random_instrument(dim_in: usize, dim_out: usize, outcomes: usize, rank: usize, seed: u64) -> Instrument {
    assert!(outcomes > 0 && rank > 0, "need at least one outcome and one Kraus operator");
    let env = outcomes * rank;
    let mut total = dim_out * env;
    let mut extra_rank = rank;
    while total < dim_in {
        extra_rank += rank;
        total = dim_out * outcomes * extra_rank;
    }
    let env = outcomes * extra_rank;
    let u = haar_random_unitary(total, seed);
    let list = (0..outcomes)
        .map(|i| {
            let kraus = (0..extra_rank)
                .map(|k| Operator::from_fn(dim_out, dim_in, |o, a| u.get(o * env + i * extra_rank + k, a)))
                .collect();
            (i.to_string(), QuantumMap::new(kraus, dim_in, dim_out).expect("consistent shapes"))
        })
        .collect();
    Instrument::new(list, dim_in, dim_out).expect("isometry blocks are complete")
}

/// Random CPTP map with `rank` Kraus operators.
pub fn random_channel(dim_in: usize, dim_out: usize, rank: usize, seed: u64) -> QuantumMap {
    coarse_grain(&random_instrument(dim_in, dim_out, 1, rank, seed))
}

/// Computational-basis ket helper for the channel constructors' callers.
pub fn ket(d: usize, i: usize) -> Operator {
    basis_ket(d, i).expect("index in range")
}

/// `|+⟩ = (|0⟩ + |1⟩)/√2`.
pub fn plus_ket() -> Operator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Operator::ket(vec![C64::new(s, 0.0), C64::new(s, 0.0)]).expect("two amplitudes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_state, tensor};

    fn diag(a: f64, b: f64) -> Operator {
        Operator::real(&[&[a, 0.0], &[0.0, b]])
    }

    #[test]
    fn identity_channel_is_identity() {
        let rho = random_state(2, 3);
        assert!(identity_channel(2).apply(&rho).unwrap().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn dephasing_kills_coherence() {
        let out = make_dephasing().apply(&plus_ket().projector()).unwrap();
        assert!(out.max_abs_diff(&Operator::identity(2).scale_real(0.5)) < 1e-15);
        assert_eq!(make_dephasing().kraus(), &[ket(2, 0).projector(), ket(2, 1).projector()]);
    }

    #[test]
    fn amplitude_damping_on_identity() {
        let out = make_amplitude_damping(0.5).unwrap().apply(&Operator::identity(2)).unwrap();
        // K0 𝕀 K0† = diag(1, 0.5); K1 𝕀 K1† = diag(0.5, 0).
        assert!(out.max_abs_diff(&diag(1.5, 0.5)) < 1e-15);
    }

    #[test]
    fn apply_rejects_wrong_shape() {
        assert!(matches!(make_dephasing().apply(&Operator::identity(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn projective_probabilities() {
        let m = projective_measurement(2).unwrap();
        let t = outcome_probabilities(&m, &ket(2, 0).projector()).unwrap();
        assert_eq!(t.probabilities(), vec![1.0, 0.0]);
        let t = outcome_probabilities(&m, &plus_ket().projector()).unwrap();
        assert!((t.at(0) - 0.5).abs() < 1e-15 && (t.at(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn damping_instrument_probabilities() {
        let t = outcome_probabilities(&amplitude_damping_instrument(0.5).unwrap(), &ket(2, 1).projector()).unwrap();
        assert!((t.get("0").unwrap() - 0.5).abs() < 1e-15);
        assert!((t.get("1").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn probabilities_reject_non_states() {
        let m = projective_measurement(2).unwrap();
        assert!(outcome_probabilities(&m, &Operator::identity(2)).is_err());
    }

    #[test]
    fn state_update_cases() {
        let m = projective_measurement(2).unwrap();
        let post = state_update(&m, &plus_ket().projector(), "0").unwrap();
        assert!(post.max_abs_diff(&ket(2, 0).projector()) < 1e-15);

        let rho = random_state(3, 8);
        let id = identity_instrument(3);
        assert!(state_update(&id, &rho, "id").unwrap().max_abs_diff(&rho) < 1e-14);

        let decayed = state_update(&amplitude_damping_instrument(0.5).unwrap(), &ket(2, 1).projector(), "1").unwrap();
        assert!(decayed.max_abs_diff(&ket(2, 0).projector()) < 1e-15);

        assert!(matches!(state_update(&m, &ket(2, 0).projector(), "1"), Err(Error::UndefinedConditional(_))));
    }

    #[test]
    fn coarse_grained_measurement_is_dephasing() {
        let cg = coarse_grain(&projective_measurement(2).unwrap());
        assert!(cg.action_distance(&make_dephasing()) < 1e-15);
        let single = Instrument::from_channel("only", make_amplitude_damping(0.3).unwrap()).unwrap();
        assert!(coarse_grain(&single).action_distance(&make_amplitude_damping(0.3).unwrap()) < 1e-15);
    }

    #[test]
    fn coarse_grain_preserves_trace() {
        let inst = random_instrument(3, 3, 3, 1, 42);
        let cg = coarse_grain(&inst);
        assert!(cg.trace_preservation_defect() < 1e-10);
        for seed in 0..100 {
            let rho = random_state(3, seed);
            assert!((cg.apply(&rho).unwrap().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sequential_composition() {
        let id = identity_instrument(2);
        let both = compose_sequential(&id, &id).unwrap();
        assert_eq!(both.len(), 1);
        assert!(coarse_grain(&both).action_distance(&identity_channel(2)) < 1e-15);

        let z = projective_measurement(2).unwrap();
        let rho = random_state(2, 4);
        let zz = outcome_probabilities(&compose_sequential(&z, &z).unwrap(), &rho).unwrap();
        let single = outcome_probabilities(&z, &rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { single.at(i) } else { 0.0 };
                assert!((zz.get(&joint_label(&[i.to_string(), j.to_string()])).unwrap() - expect).abs() < 1e-14);
            }
        }

        let zx = compose_sequential(&z, &x_measurement()).unwrap();
        let t = outcome_probabilities(&zx, &ket(2, 0).projector()).unwrap();
        let expect = [("0·+", 0.5), ("0·-", 0.5), ("1·+", 0.0), ("1·-", 0.0)];
        for (label, p) in expect {
            assert!((t.get(label).unwrap() - p).abs() < 1e-15, "{label}");
        }
        assert!(compose_sequential(&z, &identity_instrument(3)).is_err());
    }

    #[test]
    fn parallel_composition() {
        let id = compose_parallel(&identity_instrument(2), &identity_instrument(3)).unwrap();
        assert!(coarse_grain(&id).action_distance(&identity_channel(6)) < 1e-15);

        let z = projective_measurement(2).unwrap();
        let rho = random_state(2, 1);
        let sigma = random_state(2, 2);
        let joint = outcome_probabilities(&compose_parallel(&z, &identity_instrument(2)).unwrap(), &tensor(&rho, &sigma))
            .unwrap();
        let marginal = outcome_probabilities(&z, &rho).unwrap();
        assert!((joint.get("0·id").unwrap() - marginal.at(0)).abs() < 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = Operator::ket(vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)])
            .unwrap()
            .projector();
        let t = outcome_probabilities(&compose_parallel(&z, &z).unwrap(), &bell).unwrap();
        for (label, p) in [("0·0", 0.5), ("0·1", 0.0), ("1·0", 0.0), ("1·1", 0.5)] {
            assert!((t.get(label).unwrap() - p).abs() < 1e-15, "{label}");
        }
    }

    #[test]
    fn classification() {
        let u = classify(&make_unitary_channel(&haar_random_unitary(3, 2)).unwrap());
        assert!(u.is_cp && u.is_tp && u.is_unital);
        assert!(classify(&make_dephasing()).is_unital);
        let ad = classify(&make_amplitude_damping(0.5).unwrap());
        assert!(ad.is_tp && ad.is_cp && !ad.is_unital);
        assert!((ad.unital_defect - 0.5).abs() < 1e-15);
    }

    #[test]
    fn adjoint_properties() {
        let u = haar_random_unitary(2, 9);
        let adj = adjoint_map(&make_unitary_channel(&u).unwrap());
        assert!(adj.action_distance(&make_unitary_channel(&u.adjoint()).unwrap()) < 1e-15);

        let deph = make_dephasing();
        assert!(adjoint_map(&deph).action_distance(&deph) < 1e-15);

        let ad_adj = adjoint_map(&make_amplitude_damping(0.5).unwrap());
        assert!(!classify(&ad_adj).is_tp);
        // Σ K K† = diag(1.5, 0.5).
        assert!(ad_adj.kraus_gram().max_abs_diff(&diag(1.5, 0.5)) < 1e-15);
        assert!(!ad_adj.is_trace_non_increasing());
    }

    #[test]
    fn adjoint_duality() {
        let map = random_channel(2, 3, 2, 5);
        let adj = adjoint_map(&map);
        for seed in 0..20 {
            let a = crate::linalg::random_operator(3, 3, seed);
            let b = crate::linalg::random_operator(2, 2, seed + 100);
            let lhs = (&a * &map.apply(&b).unwrap()).trace();
            let rhs = (&adj.apply(&a).unwrap() * &b).trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn constructors() {
        let h = make_unitary_channel(&hadamard()).unwrap();
        assert!(h.apply(&ket(2, 0).projector()).unwrap().max_abs_diff(&plus_ket().projector()) < 1e-15);
        assert!(matches!(
            make_unitary_channel(&Operator::real(&[&[1.0, 1.0], &[0.0, 1.0]])),
            Err(Error::NotUnitary { .. })
        ));
        let noisy = make_noisy_operation(&cnot(), &DimsPartition::pair(2, 2)).unwrap();
        let c = classify(&noisy);
        assert!(c.is_cptp() && c.is_unital);
    }

    #[test]
    fn incomplete_instrument_rejected() {
        let half = QuantumMap::new(vec![ket(2, 0).projector()], 2, 2).unwrap();
        assert!(matches!(Instrument::new(vec![("0".into(), half)], 2, 2), Err(Error::Incomplete { .. })));
    }

    #[test]
    fn tests_and_preparations() {
        let plus = plus_ket().projector();
        let minus = &Operator::identity(2) - &plus;
        let test = Instrument::test_from_effects(vec![("+".into(), plus.clone()), ("-".into(), minus)]).unwrap();
        assert_eq!(test.dim_out(), 1);
        let effects = test.effects();
        assert!(effects[0].1.max_abs_diff(&plus) < 1e-12);
        let t = outcome_probabilities(&test, &ket(2, 0).projector()).unwrap();
        assert!((t.get("+").unwrap() - 0.5).abs() < 1e-12);

        let prep = Instrument::preparation_from_states(vec![
            ("a".into(), ket(2, 0).projector().scale_real(0.5)),
            ("b".into(), plus.scale_real(0.5)),
        ])
        .unwrap();
        let one = Operator::identity(1);
        let rho_b = prep.map("b").unwrap().apply(&one).unwrap();
        assert!(rho_b.max_abs_diff(&plus.scale_real(0.5)) < 1e-12);
    }

    #[test]
    fn instrument_serde() {
        let inst = amplitude_damping_instrument(0.5).unwrap();
        let v = serde_json::to_value(&inst).unwrap();
        assert_eq!(v["dim_in"], 2);
        assert_eq!(v["outcomes"][1]["label"], "1");
        let back: Instrument = serde_json::from_value(v).unwrap();
        assert_eq!(back, inst);
        let bad = serde_json::json!({"dim_in":2,"dim_out":2,"outcomes":[{"label":"0","kraus":[[[[1,0],[0,0]],[[0,0],[0,0]]]]}]});
        assert!(serde_json::from_value::<Instrument>(bad).is_err());
    }
}
