//! Self-contained description of a prediction or postdiction task.

use super::likelihood::Likelihood;
use crate::channels::{adjoint_map, classify, make_unitary_channel, Instrument, QuantumMap};
use crate::error::{Error, Result};
use crate::linalg::{DimsPartition, Operator};
use crate::table::{Direction, ProbabilityTable};

#[derive(Clone, Debug, PartialEq)]
pub enum Transformation {
    Unitary(Operator),
    Channel(QuantumMap),
    Instrument(Instrument),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum Preparation {
    /// Computational basis of the input space.
    #[default]
    Basis,
    /// Normalized kets, one alternative each.
    States(Vec<Operator>),
}

/// A transformation with input/output partitions, a preparation, a
/// direction and per-factor masks.
///
/// `input_mask` marks the input factors in play: given when predicting,
/// guessed when postdicting. `output_mask` marks the output factors in
/// play: guessed when predicting, given when postdicting. For instruments
/// the output mask has a leading entry for the outcome label; for state
/// preparations the input mask has a single entry for the state index.
#[derive(Clone, Debug, PartialEq)]
pub struct InferenceTask {
    pub transformation: Transformation,
    pub dims_in: DimsPartition,
    pub dims_out: DimsPartition,
    pub preparation: Preparation,
    pub direction: Direction,
    pub input_mask: Vec<bool>,
    pub output_mask: Vec<bool>,
}

impl InferenceTask {
    pub fn new(
        transformation: Transformation,
        dims_in: DimsPartition,
        dims_out: DimsPartition,
        preparation: Preparation,
        direction: Direction,
        input_mask: Vec<bool>,
        output_mask: Vec<bool>,
    ) -> Result<Self> {
        let task = Self { transformation, dims_in, dims_out, preparation, direction, input_mask, output_mask };
        let l = task.likelihood()?;
        if task.input_mask.len() != l.inputs().len() {
            return Err(Error::dims(format!(
                "input mask has {} entries for {} factors",
                task.input_mask.len(),
                l.inputs().len()
            )));
        }
        if task.output_mask.len() != l.outputs().len() {
            return Err(Error::dims(format!(
                "output mask has {} entries for {} factors",
                task.output_mask.len(),
                l.outputs().len()
            )));
        }
        let guessed = match task.direction {
            Direction::Predict => &task.output_mask,
            Direction::Postdict => &task.input_mask,
        };
        if !guessed.iter().any(|&m| m) {
            return Err(Error::invalid("the task guesses no factor"));
        }
        Ok(task)
    }

    /// Task with every factor in play.
    pub fn full(transformation: Transformation, dims_in: DimsPartition, dims_out: DimsPartition, direction: Direction) -> Result<Self> {
        let inputs = dims_in.len();
        let outputs = dims_out.len() + usize::from(matches!(transformation, Transformation::Instrument(_)));
        Self::new(transformation, dims_in, dims_out, Preparation::Basis, direction, vec![true; inputs], vec![true; outputs])
    }

    /// Likelihood matrix over all input alternatives and output outcomes.
    pub fn likelihood(&self) -> Result<Likelihood> {
        match (&self.preparation, &self.transformation) {
            (Preparation::Basis, Transformation::Unitary(u)) => Likelihood::from_unitary(u, &self.dims_in, &self.dims_out),
            (Preparation::Basis, Transformation::Channel(m)) => Likelihood::from_channel(m, &self.dims_in, &self.dims_out),
            (Preparation::Basis, Transformation::Instrument(i)) => {
                Likelihood::from_instrument(i, &self.dims_in, &self.dims_out)
            }
            (Preparation::States(states), t) => {
                if self.dims_in.len() != 1 {
                    return Err(Error::dims("state preparations use a single input factor"));
                }
                let map = match t {
                    Transformation::Unitary(u) => make_unitary_channel(u)?,
                    Transformation::Channel(m) => m.clone(),
                    Transformation::Instrument(_) => {
                        return Err(Error::invalid("state preparations are supported for unitaries and channels"))
                    }
                };
                if map.dim_in() != self.dims_in.total() {
                    return Err(Error::dims("transformation input does not match dims_in"));
                }
                Likelihood::from_states(states, &map, &self.dims_out)
            }
        }
    }

    /// Mask of the side that is conditioned on.
    pub fn given_mask(&self) -> &[bool] {
        match self.direction {
            Direction::Predict => &self.input_mask,
            Direction::Postdict => &self.output_mask,
        }
    }

    /// Solve with outcome indices for the given factors, in factor order.
    pub fn solve(&self, given: &[usize]) -> Result<ProbabilityTable> {
        let l = self.likelihood()?;
        let mask = self.given_mask();
        let needed = mask.iter().filter(|&&m| m).count();
        if given.len() != needed {
            return Err(Error::invalid(format!("task needs {needed} given outcome(s), got {}", given.len())));
        }
        let mut values = given.iter().copied();
        let known: Vec<Option<usize>> = mask.iter().map(|&m| if m { values.next() } else { None }).collect();
        match self.direction {
            Direction::Predict => l.predict(&known, &self.output_mask),
            Direction::Postdict => l.postdict(&known, &self.input_mask),
        }
    }
}

/// Time-reversed task: adjoint transformation, input and output roles
/// swapped, same direction.
///
/// Channels are reversible only when unital; otherwise the adjoint is not
/// trace preserving and no active reverse exists.
pub fn time_reverse(task: &InferenceTask) -> Result<InferenceTask> {
    if task.preparation != Preparation::Basis {
        return Err(Error::invalid("only basis preparations have a time-reversed task"));
    }
    let transformation = match &task.transformation {
        Transformation::Unitary(u) => Transformation::Unitary(u.adjoint()),
        Transformation::Channel(m) => {
            let adjoint = adjoint_map(m);
            let c = classify(&adjoint);
            if !c.is_cptp() {
                return Err(Error::NoActiveReverse(format!(
                    "the adjoint is not trace preserving (channel unital defect {:.3e})",
                    classify(m).unital_defect
                )));
            }
            Transformation::Channel(adjoint)
        }
        Transformation::Instrument(_) => {
            return Err(Error::invalid("time reversal is defined for unitaries and channels"));
        }
    };
    InferenceTask::new(
        transformation,
        task.dims_out.clone(),
        task.dims_in.clone(),
        Preparation::Basis,
        task.direction,
        task.output_mask.clone(),
        task.input_mask.clone(),
    )
}
