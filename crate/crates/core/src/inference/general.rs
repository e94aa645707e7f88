//! Preparations drawn from a list of pure states that need not be
//! orthogonal, with a flat prior over the list.

use serde::{Deserialize, Serialize};

use super::likelihood::{Likelihood, EVIDENCE_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{basis_ket, complete_to_unitary, tensor, DimsPartition, Operator};
use crate::table::{Direction, ProbabilityTable};

/// One prediction table per state, over the output basis.
pub fn predict_general_prep(states: &[Operator], u: &Operator) -> Result<Vec<ProbabilityTable>> {
    let l = Likelihood::from_unitary_states(states, u)?;
    (0..states.len()).map(|i| l.predict(&[Some(i)], &[true])).collect()
}

/// `i ↦ P_pre(x|ψ_i) / (n·tr(|x⟩⟨x| U[ρ_A]))` with `ρ_A` the uniform mixture.
pub fn postdict_general_prep(states: &[Operator], u: &Operator, x: usize) -> Result<ProbabilityTable> {
    Likelihood::from_unitary_states(states, u)?.postdict(&[Some(x)], &[true])
}

/// Unitary on `A ⊗ B` (with `d_B` = number of states) taking `|0⟩|i⟩` to
/// `|ψ_i⟩|i⟩`.
pub fn controlled_preparation(states: &[Operator]) -> Result<Operator> {
    let n = states.len();
    let d = states.first().ok_or_else(|| Error::invalid("no states given"))?.rows();
    let columns = states
        .iter()
        .enumerate()
        .map(|(i, psi)| {
            if psi.shape() != (d, 1) {
                return Err(Error::dims(format!("state {i} is not a ket of dimension {d}")));
            }
            Ok((i, tensor(psi, &basis_ket(n, i)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    complete_to_unitary(d * n, &columns)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralPrepReport {
    pub direct: ProbabilityTable,
    pub purified: ProbabilityTable,
    pub max_defect: f64,
}

/// Compare the direct postdiction with `P_post(a₁b_i|x,U′)/P_post(a₁|x,U′)`
/// where `U′ = (U ⊗ 𝕀)·U_P` and `a₁ = 0`.
pub fn general_prep_purified_check(states: &[Operator], u: &Operator, x: usize) -> Result<GeneralPrepReport> {
    let direct = postdict_general_prep(states, u, x)?;
    let n = states.len();
    let d = u.rows();
    let up = controlled_preparation(states)?;
    let combined = &tensor(u, &Operator::identity(n)) * &up;
    let dims = DimsPartition::pair(d, n);
    let l = Likelihood::from_unitary(&combined, &dims, &dims)?;
    let joint = l.postdict(&[Some(x), None], &[true, true])?;
    let first = l.postdict(&[Some(x), None], &[true, false])?.at(0);
    if first < EVIDENCE_FLOOR {
        return Err(Error::UndefinedConditional(format!("output {x} rules out the fixed input a₁")));
    }
    let entries: Vec<(String, f64)> = (0..n).map(|i| (i.to_string(), joint.at(i) / first)).collect();
    let purified = ProbabilityTable::new(x.to_string(), Direction::Postdict, entries);
    let max_defect = direct.max_abs_diff(&purified)?;
    Ok(GeneralPrepReport { direct, purified, max_defect })
}
