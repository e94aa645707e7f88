//! Marginalizing a later operation leaves earlier outcome statistics
//! unchanged, in the predictive reading and in the purified postdictive one.

use serde::{Deserialize, Serialize};

use super::likelihood::Likelihood;
use crate::channels::{coarse_grain, compose_sequential, outcome_probabilities, Instrument};
use crate::error::{Error, Result};
use crate::linalg::{permutation_operator, tensor, DimsPartition, Operator, STRUCTURAL_TOL};
use crate::purify::{purify_instrument, Purification};
use crate::table::{joint_label, Direction, ProbabilityTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoSignallingReport {
    /// `P(x|ρ,E)`.
    pub marginal: ProbabilityTable,
    /// `max_x |Σ_y P(x,y|ρ,F∘E) − P(x|ρ,E)|`.
    pub marginal_defect: f64,
    /// Same identity for postdiction through the purifications, maximized
    /// over computational-basis inputs `a`.
    pub purified_defect: f64,
    /// `P(x|y)` from the joint table against `tr F_y[E_x ρ] / tr F_y[ℰ ρ]`.
    pub conditional_defect: f64,
    /// `P(x|y)` for each `y` with nonzero probability.
    pub conditionals: Vec<ProbabilityTable>,
    /// Labels of `y` values that never occur.
    pub skipped: Vec<String>,
}

/// Output factors of the combined purification, in order.
const COMBINED_OUTPUTS: usize = 5;

/// `W = (U_F ⊗ 𝕀_{Y_E})·Perm·(U_E ⊗ 𝕀_C)` on `A ⊗ B_E ⊗ C`, with outputs
/// `[Z, P_F, Z_F, P_E, Z_E]` (system, then each pointer and discard).
fn combined_purification(pe: &Purification, pf: &Purification) -> Result<(Operator, DimsPartition, DimsPartition)> {
    let [n_e, m_e] = pointer_dims(pe)?;
    let [n_f, m_f] = pointer_dims(pf)?;
    let (dm, dye, dc) = (pe.d_x(), pe.d_y(), pf.d_b());
    let first = tensor(pe.unitary(), &Operator::identity(dc));
    let perm = permutation_operator(&DimsPartition::new(vec![dm, dye, dc])?, &[0, 2, 1])?;
    let second = tensor(pf.unitary(), &Operator::identity(dye));
    let w = &(&second * &perm) * &first;
    let dims_in = DimsPartition::new(vec![pe.d_a(), pe.d_b(), dc])?;
    let dims_out = DimsPartition::new(vec![pf.d_x(), n_f, m_f, n_e, m_e])?;
    debug_assert_eq!(dims_out.len(), COMBINED_OUTPUTS);
    Ok((w, dims_in, dims_out))
}

fn pointer_dims(p: &Purification) -> Result<[usize; 2]> {
    let split = p.pointer_partition().ok_or_else(|| Error::invalid("instrument purification expected"))?;
    Ok([split.factors()[0], split.factors()[1]])
}

/// Purified postdiction defect `max_{a,x} |Σ_y P_post(xy|abc,W†) − P_post(x|ab,U_E†)|`.
fn purified_marginal_defect(e: &Instrument, f: &Instrument) -> Result<f64> {
    let pe = purify_instrument(e)?;
    let pf = purify_instrument(f)?;
    let (w, dims_in, dims_out) = combined_purification(&pe, &pf)?;
    let reverse_combined = Likelihood::from_unitary(&w.adjoint(), &dims_out, &dims_in)?;
    let [n_e, m_e] = pointer_dims(&pe)?;
    let e_outputs = DimsPartition::new(vec![pe.d_x(), n_e, m_e])?;
    let reverse_e = Likelihood::from_unitary(&pe.unitary().adjoint(), &e_outputs, pe.dims_in())?;
    let n_f = pointer_dims(&pf)?[0];

    let mut worst = 0.0f64;
    for a in 0..e.dim_in() {
        let joint = reverse_combined.postdict(&[Some(a), Some(0), Some(0)], &[false, true, false, true, false])?;
        let single = reverse_e.postdict(&[Some(a), Some(0)], &[false, true, false])?;
        for x in 0..n_e {
            let summed: f64 = (0..n_f).map(|y| joint.at(y * n_e + x)).sum();
            worst = worst.max((summed - single.at(x)).abs());
        }
    }
    Ok(worst)
}

pub fn no_signalling_check(e: &Instrument, f: &Instrument, rho: &Operator) -> Result<NoSignallingReport> {
    if e.dim_out() != f.dim_in() {
        return Err(Error::dims(format!(
            "first instrument outputs dimension {}, second expects {}",
            e.dim_out(),
            f.dim_in()
        )));
    }
    let marginal = outcome_probabilities(e, rho)?;
    let joint = outcome_probabilities(&compose_sequential(e, f)?, rho)?;
    let nf = f.len();
    let e_labels: Vec<&str> = e.labels().collect();
    let f_labels: Vec<&str> = f.labels().collect();

    let mut marginal_defect = 0.0f64;
    for (i, &x) in e_labels.iter().enumerate() {
        let summed: f64 = (0..nf).map(|j| joint.at(i * nf + j)).sum();
        marginal_defect = marginal_defect.max((summed - marginal.get(x).expect("label present")).abs());
    }

    // Conditionals given the later outcome, against the footnote formula.
    let averaged = coarse_grain(e).apply(rho)?;
    let mut conditional_defect = 0.0f64;
    let mut conditionals = Vec::new();
    let mut skipped = Vec::new();
    for (j, &y) in f_labels.iter().enumerate() {
        let fy = f.map(y)?;
        let denominator = fy.apply(&averaged)?.trace().re;
        let column: f64 = (0..e.len()).map(|i| joint.at(i * nf + j)).sum();
        if denominator < STRUCTURAL_TOL || column < STRUCTURAL_TOL {
            skipped.push(y.to_string());
            continue;
        }
        let mut entries = Vec::with_capacity(e.len());
        for (i, (x, ex)) in e.outcomes().iter().enumerate() {
            let from_joint = joint.at(i * nf + j) / column;
            let footnote = fy.apply(&ex.apply(rho)?)?.trace().re / denominator;
            conditional_defect = conditional_defect.max((from_joint - footnote).abs());
            entries.push((x.clone(), from_joint));
        }
        conditionals.push(ProbabilityTable::new(joint_label(&["rho", y]), Direction::Predict, entries));
    }

    Ok(NoSignallingReport {
        marginal,
        marginal_defect,
        purified_defect: purified_marginal_defect(e, f)?,
        conditional_defect,
        conditionals,
        skipped,
    })
}
