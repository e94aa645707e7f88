//! Tasks through general channels, directly and through purifications.

use serde::{Deserialize, Serialize};

use super::likelihood::Likelihood;
use crate::channels::{classify, QuantumMap};
use crate::error::{Error, Result};
use crate::linalg::{complete_to_unitary, haar_random_unitary, tensor, DimsPartition, Operator};
use crate::purify::{ancilla_ket, stinespring, Purification};
use crate::rng::child_seed;
use crate::table::{Direction, ProbabilityTable};

fn channel_likelihood(channel: &QuantumMap) -> Result<Likelihood> {
    Likelihood::from_channel(
        channel,
        &DimsPartition::single(channel.dim_in()),
        &DimsPartition::single(channel.dim_out()),
    )
}

/// `x ↦ tr(|x⟩⟨x| Φ[|a⟩⟨a|])`.
pub fn predict_channel(channel: &QuantumMap, a: usize) -> Result<ProbabilityTable> {
    channel_likelihood(channel)?.predict(&[Some(a)], &[true])
}

/// `a ↦ tr(|x⟩⟨x| Φ[|a⟩⟨a|]) / tr(|x⟩⟨x| Φ[𝕀])`, with factor
/// `f_Φ(x) = 1 / tr(|x⟩⟨x| Φ[𝕀])`.
pub fn postdict_channel(channel: &QuantumMap, x: usize) -> Result<ProbabilityTable> {
    channel_likelihood(channel)?.postdict(&[Some(x)], &[true])
}

/// `P_post(a|x,Φ) = P_post(ab|x,U)/P_post(b|x,U)` for the given
/// purification, with `b` its ancilla state.
pub fn postdict_via_purification(p: &Purification, x: usize) -> Result<ProbabilityTable> {
    if p.pointer_partition().is_some() {
        return Err(Error::invalid("instrument purifications carry a pointer; use a channel purification"));
    }
    // Rotate B so that the ancilla is its first basis vector.
    let basis = complete_to_unitary(p.d_b(), &[(0, ancilla_ket(p))])?;
    let u = p.unitary() * &tensor(&Operator::identity(p.d_a()), &basis);
    let l = Likelihood::from_unitary(&u, p.dims_in(), p.dims_out())?;
    let joint = l.postdict(&[Some(x), None], &[true, true])?;
    let ancilla = l.postdict(&[Some(x), None], &[false, true])?.at(0);
    if ancilla < super::likelihood::EVIDENCE_FLOOR {
        return Err(Error::UndefinedConditional(format!("output {x} is incompatible with the ancilla state")));
    }
    let db = p.d_b();
    let entries = (0..p.d_a()).map(|a| (a.to_string(), joint.at(a * db) / ancilla));
    Ok(ProbabilityTable::new(x.to_string(), Direction::Postdict, entries.collect::<Vec<_>>()))
}

/// Postdiction through the canonical Stinespring purification.
pub fn postdict_channel_via_purification(channel: &QuantumMap, x: usize) -> Result<ProbabilityTable> {
    postdict_via_purification(&stinespring(channel)?, x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowardPastReport {
    pub direct: f64,
    pub purified: f64,
    pub defect: f64,
}

/// `tr(|x⟩⟨x| Φ[|a⟩⟨a|]) = P_post(x|ab, U_Φ†)`: the forward transition
/// probability read as a postdiction with the adjoint purification, which
/// exists even when the channel has no active reverse.
pub fn channel_toward_past_check(channel: &QuantumMap, a: usize, x: usize) -> Result<TowardPastReport> {
    let p = stinespring(channel)?;
    if a >= p.d_a() || x >= p.d_x() {
        return Err(Error::invalid("basis index out of range"));
    }
    let direct = channel.apply(&crate::linalg::basis_projector(p.d_a(), a)?)?.get(x, x).re;
    let reverse = Likelihood::from_unitary(&p.unitary().adjoint(), p.dims_out(), p.dims_in())?;
    let purified = reverse.postdict(&[Some(a), Some(0)], &[true, false])?.at(x);
    Ok(TowardPastReport { direct, purified, defect: (direct - purified).abs() })
}

/// Number of Haar-rotated basis pairs used to corroborate the unital test.
pub const ROTATED_BASIS_PAIRS: u64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub unital: bool,
    pub unital_defect: f64,
    /// `max |P_post(a|x) − P_pre(x|a)|` in the computational bases; infinite
    /// when some outcome is impossible under a flat prior.
    pub computational_defect: f64,
    /// Same, maximized over the rotated basis pairs.
    pub rotated_defect: f64,
    pub tables_symmetric: bool,
}

fn table_asymmetry(channel: &QuantumMap) -> Result<f64> {
    let l = channel_likelihood(channel)?;
    let mut worst = 0.0f64;
    for x in 0..channel.dim_out() {
        let post = match l.postdict(&[Some(x)], &[true]) {
            Ok(t) => t,
            Err(Error::UndefinedConditional(_)) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        for a in 0..channel.dim_in() {
            worst = worst.max((post.at(a) - l.get(a, x)).abs());
        }
    }
    Ok(worst)
}

/// `Ψ[ρ] = W† Φ[V ρ V†] W`: the channel read in bases `{V|a⟩}`, `{W|x⟩}`.
fn in_bases(channel: &QuantumMap, v: &Operator, w: &Operator) -> Result<QuantumMap> {
    let wd = w.adjoint();
    QuantumMap::new(
        channel.kraus().iter().map(|k| &(&wd * k) * v).collect(),
        channel.dim_in(),
        channel.dim_out(),
    )
}

/// Unital criterion cross-checked against direct table comparison.
pub fn inference_symmetry_report(channel: &QuantumMap, tol: f64, seed: u64) -> Result<SymmetryReport> {
    channel.ensure_cptp("channel")?;
    let c = classify(channel);
    let computational_defect = table_asymmetry(channel)?;
    let mut rotated_defect = 0.0f64;
    for k in 0..ROTATED_BASIS_PAIRS {
        let v = haar_random_unitary(channel.dim_in(), child_seed(seed, 2 * k));
        let w = haar_random_unitary(channel.dim_out(), child_seed(seed, 2 * k + 1));
        rotated_defect = rotated_defect.max(table_asymmetry(&in_bases(channel, &v, &w)?)?);
    }
    Ok(SymmetryReport {
        unital: c.unital_defect <= tol,
        unital_defect: c.unital_defect,
        computational_defect,
        rotated_defect,
        tables_symmetric: computational_defect <= tol && rotated_defect <= tol,
    })
}

/// Whether prediction and postdiction tables coincide, decided by the unital
/// criterion.
pub fn is_inference_symmetric(channel: &QuantumMap, tol: f64) -> Result<bool> {
    channel.ensure_cptp("channel")?;
    Ok(classify(channel).unital_defect <= tol)
}

/// Rotate the ancilla bases of a purification at random and postdict
/// through the result.
pub fn postdict_via_rotated_purification(channel: &QuantumMap, x: usize, seed: u64) -> Result<ProbabilityTable> {
    let p = stinespring(channel)?;
    if p.d_b() == 1 && p.d_y() == 1 {
        return postdict_via_purification(&p, x);
    }
    postdict_via_purification(&p.rotated(seed)?, x)
}
