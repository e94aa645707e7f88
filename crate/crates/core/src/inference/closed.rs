//! Closed systems: a unitary between orthonormal bases of equal dimension.

use serde::{Deserialize, Serialize};

use super::channel::{postdict_channel, predict_channel};
use super::likelihood::Likelihood;
use crate::channels::{adjoint_map, classify, QuantumMap};
use crate::error::{Error, Result};
use crate::linalg::{DimsPartition, Operator, STRUCTURAL_TOL};
use crate::table::ProbabilityTable;

fn closed_likelihood(u: &Operator) -> Result<Likelihood> {
    if !u.is_square() {
        return Err(Error::dims("closed-system transformation must be square"));
    }
    let d = DimsPartition::single(u.rows());
    Likelihood::from_unitary(u, &d, &d)
}

/// `x ↦ |⟨x|U|a⟩|²`.
pub fn predict_closed(u: &Operator, a: usize) -> Result<ProbabilityTable> {
    closed_likelihood(u)?.predict(&[Some(a)], &[true])
}

/// `a ↦ P(a | x)` under a flat prior over `a`.
pub fn postdict_closed(u: &Operator, x: usize) -> Result<ProbabilityTable> {
    closed_likelihood(u)?.postdict(&[Some(x)], &[true])
}

/// `P_pre(x|a,U)`, `P_post(a|x,U)`, `P_pre(a|x,U†)`, `P_post(x|a,U†)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourTaskReport {
    pub values: [f64; 4],
    /// Independent evaluation of the common value.
    pub reference: f64,
    pub max_defect: f64,
}

impl FourTaskReport {
    fn new(values: [f64; 4], reference: f64) -> Self {
        let max_defect = values.iter().map(|v| (v - reference).abs()).fold(0.0, f64::max);
        Self { values, reference, max_defect }
    }
}

pub fn four_task_check(u: &Operator, a: usize, x: usize) -> Result<FourTaskReport> {
    let ud = u.adjoint();
    let lookup = |t: ProbabilityTable, i: usize| t.at(i);
    let values = [
        lookup(predict_closed(u, a)?, x),
        lookup(postdict_closed(u, x)?, a),
        lookup(predict_closed(&ud, x)?, a),
        lookup(postdict_closed(&ud, a)?, x),
    ];
    Ok(FourTaskReport::new(values, u.get(x, a).norm_sqr()))
}

/// Four-task square for a unital channel, with `Φ†` standing in for `U†`.
pub fn four_task_check_channel(channel: &QuantumMap, a: usize, x: usize) -> Result<FourTaskReport> {
    channel.ensure_cptp("channel")?;
    let adjoint = adjoint_map(channel);
    if !classify(&adjoint).is_cptp() {
        return Err(Error::NoActiveReverse(format!(
            "channel is not unital (defect {:.3e}), so its adjoint is not a channel",
            classify(channel).unital_defect
        )));
    }
    if a >= channel.dim_in() || x >= channel.dim_out() {
        return Err(Error::invalid("basis index out of range"));
    }
    let values = [
        predict_channel(channel, a)?.at(x),
        postdict_channel(channel, x)?.at(a),
        predict_channel(&adjoint, x)?.at(a),
        postdict_channel(&adjoint, a)?.at(x),
    ];
    let reference = channel.apply(&crate::linalg::basis_projector(channel.dim_in(), a)?)?.get(x, x).re;
    debug_assert!(reference > -STRUCTURAL_TOL);
    Ok(FourTaskReport::new(values, reference))
}
