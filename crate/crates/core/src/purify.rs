//! Unitary dilations of channels and instruments.
//!
//! The canonical dilation of a channel with Kraus list `{K_k}` is the
//! isometry `V|a⟩ = Σ_k K_k|a⟩ ⊗ |k⟩_Y`, embedded as the `b = 0` columns of
//! a unitary on `A ⊗ B` and completed column by column. The Kraus list is
//! zero-padded until `d_X · r` is a multiple of `d_A`, so that
//! `d_B = d_X · r / d_A` is an integer. Instruments get an extra pointer
//! factor carrying the outcome label: `Y = pointer ⊗ Z`.

use serde::{Deserialize, Serialize};

use crate::channels::{Instrument, QuantumMap};
use crate::error::{Error, Result};
use crate::linalg::{
    basis_projector, complete_to_unitary, haar_random_unitary, matrix_unit, partial_trace,
    random_state, tensor, tensor_all, DimsPartition, Operator, C64, STRUCTURAL_TOL,
};
use crate::rng::child_seed;

/// Unitary `U: A ⊗ B → X ⊗ Y` with a pure ancilla state `b` on `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPurification", into = "RawPurification")]
pub struct Purification {
    unitary: Operator,
    ancilla_state: Operator,
    dims_in: DimsPartition,
    dims_out: DimsPartition,
    pointer_partition: Option<DimsPartition>,
}

#[derive(Serialize, Deserialize)]
struct RawPurification {
    unitary: Operator,
    ancilla_state: Operator,
    dims_in: DimsPartition,
    dims_out: DimsPartition,
    pointer_dims: Option<DimsPartition>,
}

impl TryFrom<RawPurification> for Purification {
    type Error = Error;

    fn try_from(raw: RawPurification) -> Result<Self> {
        Purification::new(raw.unitary, raw.ancilla_state, raw.dims_in, raw.dims_out, raw.pointer_dims)
    }
}

impl From<Purification> for RawPurification {
    fn from(p: Purification) -> Self {
        RawPurification {
            unitary: p.unitary,
            ancilla_state: p.ancilla_state,
            dims_in: p.dims_in,
            dims_out: p.dims_out,
            pointer_dims: p.pointer_partition,
        }
    }
}

impl Purification {
    pub fn new(
        unitary: Operator,
        ancilla_state: Operator,
        dims_in: DimsPartition,
        dims_out: DimsPartition,
        pointer_partition: Option<DimsPartition>,
    ) -> Result<Self> {
        if dims_in.len() != 2 || dims_out.len() != 2 {
            return Err(Error::dims("purifications use [d_A, d_B] and [d_X, d_Y] partitions"));
        }
        if dims_in.total() != dims_out.total() {
            return Err(Error::dims(format!(
                "d_A·d_B = {} but d_X·d_Y = {}",
                dims_in.total(),
                dims_out.total()
            )));
        }
        if unitary.shape() != (dims_in.total(), dims_in.total()) {
            return Err(Error::dims("unitary does not match the declared dimensions"));
        }
        let defect = unitary.unitarity_defect();
        if defect > STRUCTURAL_TOL {
            return Err(Error::NotUnitary { what: "purification unitary".into(), defect });
        }
        let db = dims_in.factors()[1];
        if ancilla_state.shape() != (db, db) || !ancilla_state.is_state(STRUCTURAL_TOL) {
            return Err(Error::invalid("ancilla state must be a density matrix on B"));
        }
        let purity = (&ancilla_state * &ancilla_state).trace().re;
        if (purity - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::invalid(format!("ancilla state is not pure (purity {purity:.6})")));
        }
        if let Some(p) = &pointer_partition {
            if p.len() != 2 || p.total() != dims_out.factors()[1] {
                return Err(Error::dims("pointer partition must split d_Y into [pointer, discard]"));
            }
        }
        Ok(Self { unitary, ancilla_state, dims_in, dims_out, pointer_partition })
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn ancilla_state(&self) -> &Operator {
        &self.ancilla_state
    }

    pub fn dims_in(&self) -> &DimsPartition {
        &self.dims_in
    }

    pub fn dims_out(&self) -> &DimsPartition {
        &self.dims_out
    }

    pub fn pointer_partition(&self) -> Option<&DimsPartition> {
        self.pointer_partition.as_ref()
    }

    pub fn d_a(&self) -> usize {
        self.dims_in.factors()[0]
    }

    pub fn d_b(&self) -> usize {
        self.dims_in.factors()[1]
    }

    pub fn d_x(&self) -> usize {
        self.dims_out.factors()[0]
    }

    pub fn d_y(&self) -> usize {
        self.dims_out.factors()[1]
    }

    /// `U[ρ ⊗ b]` on `X ⊗ Y`.
    pub fn dilate(&self, rho: &Operator) -> Result<Operator> {
        if rho.shape() != (self.d_a(), self.d_a()) {
            return Err(Error::dims(format!("expected a {0}x{0} input", self.d_a())));
        }
        Ok(self.unitary.conjugate(&tensor(rho, &self.ancilla_state)))
    }

    /// `tr_Y U[ρ ⊗ b]`.
    pub fn reduced_action(&self, rho: &Operator) -> Result<Operator> {
        partial_trace(&self.dilate(rho)?, &self.dims_out, &[0])
    }

    /// `tr_{YZ}((|i⟩⟨i| ⊗ 𝕀_Z) U[ρ ⊗ b])` for pointer value `i`.
    pub fn outcome_action(&self, rho: &Operator, pointer: usize) -> Result<Operator> {
        let split = self.pointer_partition.as_ref().ok_or_else(|| Error::invalid("purification has no pointer"))?;
        let (n, m) = (split.factors()[0], split.factors()[1]);
        if pointer >= n {
            return Err(Error::invalid(format!("pointer value {pointer} out of range for {n} outcomes")));
        }
        let projector = tensor_all([&Operator::identity(self.d_x()), &basis_projector(n, pointer)?, &Operator::identity(m)]);
        let selected = &projector * &self.dilate(rho)?;
        let dims = DimsPartition::new(vec![self.d_x(), n, m])?;
        partial_trace(&selected, &dims, &[0])
    }

    /// Same purification with a different ancilla input state.
    pub fn with_ancilla(&self, ancilla_state: Operator) -> Result<Self> {
        Self::new(
            self.unitary.clone(),
            ancilla_state,
            self.dims_in.clone(),
            self.dims_out.clone(),
            self.pointer_partition.clone(),
        )
    }

    /// Equivalent purification in rotated ancilla bases:
    /// `U' = (𝕀_X ⊗ W) U (𝕀_A ⊗ R†)` with `b' = R b R†`, where `R` and `W`
    /// are Haar-random. The reduced action on `X` is unchanged.
    pub fn rotated(&self, seed: u64) -> Result<Self> {
        if self.pointer_partition.is_some() {
            return Err(Error::invalid("rotating the output ancilla would scramble the pointer"));
        }
        let r = haar_random_unitary(self.d_b(), child_seed(seed, 0));
        let w = haar_random_unitary(self.d_y(), child_seed(seed, 1));
        let left = tensor(&Operator::identity(self.d_x()), &w);
        let right = tensor(&Operator::identity(self.d_a()), &r.adjoint());
        let unitary = &(&left * &self.unitary) * &right;
        Self::new(unitary, r.conjugate(&self.ancilla_state), self.dims_in.clone(), self.dims_out.clone(), None)
    }
}

/// Smallest `r' ≥ r` with `d_A | d_X · r'`.
fn padded_rank(d_a: usize, d_x: usize, rank: usize) -> usize {
    (rank..).find(|r| (d_x * r).is_multiple_of(d_a)).expect("a multiple always exists")
}

/// Isometry `V|a⟩ = Σ_k K_k|a⟩ ⊗ |k⟩` before padding, shape `(d_X·r) × d_A`.
pub fn stinespring_isometry(channel: &QuantumMap) -> Operator {
    let r = channel.kraus().len();
    let dx = channel.dim_out();
    Operator::from_fn(dx * r, channel.dim_in(), |row, a| channel.kraus()[row % r].get(row / r, a))
}

/// Canonical Stinespring dilation of a CPTP map with ancilla `|0⟩_B`.
pub fn stinespring(channel: &QuantumMap) -> Result<Purification> {
    channel.ensure_cptp("channel")?;
    let (da, dx) = (channel.dim_in(), channel.dim_out());
    let r = padded_rank(da, dx, channel.kraus().len());
    let db = dx * r / da;
    let kraus = channel.kraus();
    let columns = (0..da)
        .map(|a| {
            let v = Operator::from_fn(dx * r, 1, |row, _| {
                let (x, k) = (row / r, row % r);
                kraus.get(k).map_or(C64::new(0.0, 0.0), |op| op.get(x, a))
            });
            (a * db, v)
        })
        .collect::<Vec<_>>();
    let unitary = complete_to_unitary(da * db, &columns)?;
    Purification::new(
        unitary,
        basis_projector(db, 0)?,
        DimsPartition::pair(da, db),
        DimsPartition::pair(dx, r),
        None,
    )
}

/// Dilation of an instrument with a measured pointer factor.
pub fn purify_instrument(inst: &Instrument) -> Result<Purification> {
    let defect = inst.completeness_defect();
    if defect > STRUCTURAL_TOL {
        return Err(Error::Incomplete { what: "instrument".into(), defect });
    }
    let (da, dx, n) = (inst.dim_in(), inst.dim_out(), inst.len());
    let widest = inst.outcomes().iter().map(|(_, m)| m.kraus().len()).max().expect("non-empty");
    let m = padded_rank(da, dx * n, widest);
    let dy = n * m;
    let db = dx * dy / da;
    let columns = (0..da)
        .map(|a| {
            let v = Operator::from_fn(dx * dy, 1, |row, _| {
                let (x, rest) = (row / dy, row % dy);
                let (i, k) = (rest / m, rest % m);
                inst.outcomes()[i].1.kraus().get(k).map_or(C64::new(0.0, 0.0), |op| op.get(x, a))
            });
            (a * db, v)
        })
        .collect::<Vec<_>>();
    let unitary = complete_to_unitary(da * db, &columns)?;
    Purification::new(
        unitary,
        basis_projector(db, 0)?,
        DimsPartition::pair(da, db),
        DimsPartition::pair(dx, dy),
        Some(DimsPartition::pair(n, m)),
    )
}

/// Round-trip defect of a purification against the map it should realise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationReport {
    pub basis_defect: f64,
    pub random_defect: f64,
    pub trials: usize,
}

impl PurificationReport {
    pub fn max_defect(&self) -> f64 {
        self.basis_defect.max(self.random_defect)
    }
}

fn probe_inputs(d: usize, trials: usize, seed: u64) -> (Vec<Operator>, Vec<Operator>) {
    let basis = (0..d).flat_map(|i| (0..d).map(move |j| matrix_unit(d, i, j))).collect();
    let random = (0..trials).map(|t| random_state(d, child_seed(seed, t as u64))).collect();
    (basis, random)
}

/// Compare `tr_Y U[ρ ⊗ b]` with `channel[ρ]` on the matrix-unit basis and
/// on `trials` random states.
pub fn verify_purification(
    channel: &QuantumMap,
    purification: &Purification,
    trials: usize,
    seed: u64,
) -> Result<PurificationReport> {
    if channel.dim_in() != purification.d_a() || channel.dim_out() != purification.d_x() {
        return Err(Error::dims("purification and channel disagree on system dimensions"));
    }
    let (basis, random) = probe_inputs(channel.dim_in(), trials, seed);
    let defect = |inputs: &[Operator]| -> Result<f64> {
        inputs.iter().try_fold(0.0f64, |worst, rho| {
            Ok(worst.max(purification.reduced_action(rho)?.max_abs_diff(&channel.apply(rho)?)))
        })
    };
    Ok(PurificationReport { basis_defect: defect(&basis)?, random_defect: defect(&random)?, trials })
}

/// Per-outcome comparison for an instrument purification.
pub fn verify_instrument_purification(
    inst: &Instrument,
    purification: &Purification,
    trials: usize,
    seed: u64,
) -> Result<PurificationReport> {
    if inst.dim_in() != purification.d_a() || inst.dim_out() != purification.d_x() {
        return Err(Error::dims("purification and instrument disagree on system dimensions"));
    }
    let (basis, random) = probe_inputs(inst.dim_in(), trials, seed);
    let defect = |inputs: &[Operator]| -> Result<f64> {
        let mut worst = 0.0f64;
        for rho in inputs {
            for (i, (_, map)) in inst.outcomes().iter().enumerate() {
                worst = worst.max(purification.outcome_action(rho, i)?.max_abs_diff(&map.apply(rho)?));
            }
        }
        Ok(worst)
    };
    Ok(PurificationReport { basis_defect: defect(&basis)?, random_defect: defect(&random)?, trials })
}

/// Ancilla ket `|b⟩` recovered from the stored pure state.
pub fn ancilla_ket(p: &Purification) -> Operator {
    let (values, vectors) = p.ancilla_state().hermitian_eigen();
    let top = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty");
    vectors.column(top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        amplitude_damping_instrument, coarse_grain, hadamard, make_amplitude_damping, make_dephasing,
        make_noisy_operation, make_unitary_channel, plus_ket, projective_measurement, random_instrument,
    };

    #[test]
    fn unitary_channel_is_its_own_dilation() {
        let u = haar_random_unitary(3, 4);
        let p = stinespring(&make_unitary_channel(&u).unwrap()).unwrap();
        assert_eq!((p.d_b(), p.d_y()), (1, 1));
        assert!(p.unitary().max_abs_diff(&u) < 1e-15);
        let report = verify_purification(&make_unitary_channel(&u).unwrap(), &p, 10, 1).unwrap();
        assert!(report.max_defect() < 1e-14);
    }

    #[test]
    fn dephasing_dilation() {
        let deph = make_dephasing();
        let p = stinespring(&deph).unwrap();
        assert_eq!((p.d_b(), p.d_y()), (2, 2));
        let out = p.reduced_action(&plus_ket().projector()).unwrap();
        assert!(out.max_abs_diff(&deph.apply(&plus_ket().projector()).unwrap()) < 1e-12);
        assert!(out.max_abs_diff(&Operator::identity(2).scale_real(0.5)) < 1e-12);
    }

    #[test]
    fn amplitude_damping_dilation() {
        let ad = make_amplitude_damping(0.5).unwrap();
        let p = stinespring(&ad).unwrap();
        assert_eq!(p.unitary().shape(), (4, 4));
        assert!(verify_purification(&ad, &p, 0, 0).unwrap().basis_defect < 1e-10);
    }

    #[test]
    fn rejects_non_cptp() {
        let adj = crate::channels::adjoint_map(&make_amplitude_damping(0.5).unwrap());
        assert!(matches!(stinespring(&adj), Err(Error::NotCptp { .. })));
    }

    #[test]
    fn padding_makes_dimensions_integral() {
        // Qubit to qutrit with one Kraus operator: 3·1 is odd, so r' = 2.
        let ch = crate::channels::random_channel(2, 3, 1, 8);
        let p = stinespring(&ch).unwrap();
        assert_eq!((p.d_y(), p.d_b()), (2, 3));
        assert!(verify_purification(&ch, &p, 5, 3).unwrap().max_defect() < 1e-10);
        // Qutrit to qubit with rank 2: 2·2 is not a multiple of 3, so r' = 3.
        let ch = crate::channels::random_channel(3, 2, 2, 7);
        let p = stinespring(&ch).unwrap();
        assert_eq!((p.d_y(), p.d_b()), (3, 2));
        assert!(verify_purification(&ch, &p, 5, 3).unwrap().max_defect() < 1e-10);
    }

    #[test]
    fn isometry_before_completion() {
        for seed in 0..5 {
            let u = haar_random_unitary(4, seed);
            let ch = make_noisy_operation(&u, &DimsPartition::pair(2, 2)).unwrap();
            assert!(stinespring_isometry(&ch).isometry_defect() < 1e-12);
        }
    }

    #[test]
    fn dephasing_with_ancilla_one_is_still_dephasing() {
        // Lexicographic completion sends |0,1⟩ -> |0,1⟩ and |1,1⟩ -> |1,0⟩, so
        // the environment still records the basis value.
        let deph = make_dephasing();
        let p = stinespring(&deph).unwrap().with_ancilla(basis_projector(2, 1).unwrap()).unwrap();
        let out = p.reduced_action(&plus_ket().projector()).unwrap();
        assert!(out.max_abs_diff(&Operator::identity(2).scale_real(0.5)) < 1e-12);
        assert!(verify_purification(&deph, &p, 10, 2).unwrap().max_defect() < 1e-10);
    }

    #[test]
    fn wrong_ancilla_is_caught() {
        let deph = make_dephasing();
        let p = stinespring(&deph).unwrap().with_ancilla(plus_ket().projector()).unwrap();
        // |a⟩|+⟩ -> |a⟩|+⟩: the identity channel, off by 1/2 on coherences.
        let report = verify_purification(&deph, &p, 10, 2).unwrap();
        assert!((report.basis_defect - 1.0).abs() < 1e-12);
        assert!(report.max_defect() > 0.1);

        let ad = make_amplitude_damping(0.5).unwrap();
        let p = stinespring(&ad).unwrap().with_ancilla(basis_projector(2, 1).unwrap()).unwrap();
        assert!(verify_purification(&ad, &p, 10, 2).unwrap().max_defect() > 0.1);
    }

    #[test]
    fn instrument_dilations() {
        let unitary = Instrument::from_channel("u", make_unitary_channel(&hadamard()).unwrap()).unwrap();
        let p = purify_instrument(&unitary).unwrap();
        assert_eq!(p.pointer_partition().unwrap().factors()[0], 1);

        for inst in [projective_measurement(2).unwrap(), amplitude_damping_instrument(0.5).unwrap()] {
            let p = purify_instrument(&inst).unwrap();
            assert_eq!(p.pointer_partition().unwrap().factors()[0], inst.len());
            assert!(verify_instrument_purification(&inst, &p, 10, 5).unwrap().max_defect() < 1e-10);
        }
    }

    #[test]
    fn instrument_and_channel_dilations_agree() {
        let inst = random_instrument(2, 2, 3, 2, 11);
        let via_instrument = purify_instrument(&inst).unwrap();
        let via_channel = stinespring(&coarse_grain(&inst)).unwrap();
        for seed in 0..10 {
            let rho = random_state(2, seed);
            let a = via_instrument.reduced_action(&rho).unwrap();
            let b = via_channel.reduced_action(&rho).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
        }
    }

    #[test]
    fn rotated_purification_still_purifies() {
        let ch = make_amplitude_damping(0.3).unwrap();
        let p = stinespring(&ch).unwrap().rotated(17).unwrap();
        assert!(verify_purification(&ch, &p, 10, 1).unwrap().max_defect() < 1e-10);
        let b = ancilla_ket(&p);
        assert!(b.projector().max_abs_diff(p.ancilla_state()) < 1e-10);
    }

    #[test]
    fn serde_shape() {
        let p = stinespring(&make_dephasing()).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["dims_in"], serde_json::json!([2, 2]));
        assert!(v["pointer_dims"].is_null());
        let back: Purification = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
        let q = purify_instrument(&projective_measurement(2).unwrap()).unwrap();
        let v = serde_json::to_value(&q).unwrap();
        assert_eq!(v["pointer_dims"], serde_json::json!([2, 1]));
    }
}
