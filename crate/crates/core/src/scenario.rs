//! JSON scenario files and their validation.
//!
//! Complex numbers are `[re, im]`, matrices are row-major nested arrays.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::channels::{Instrument, QuantumMap};
use crate::error::Error;
use crate::inference::{InferenceTask, Preparation, Transformation};
use crate::linalg::{DimsPartition, Operator, C64, STRUCTURAL_TOL};
use crate::table::Direction;

/// Task tags a scenario may declare.
pub const TASKS: [&str; 6] = ["predict", "postdict", "classify", "purify", "verify", "sample"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Predict,
    Postdict,
    Classify,
    Purify,
    Verify,
    Sample,
}

impl TaskKind {
    pub fn parse(tag: &str) -> Option<Self> {
        Some(match tag {
            "predict" => TaskKind::Predict,
            "postdict" => TaskKind::Postdict,
            "classify" => TaskKind::Classify,
            "purify" => TaskKind::Purify,
            "verify" => TaskKind::Verify,
            "sample" => TaskKind::Sample,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        TASKS[self as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransformationSpec {
    Unitary { matrix: Operator },
    KrausChannel { kraus: Vec<Operator> },
    Instrument { outcomes: Vec<OutcomeSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    pub label: String,
    pub kraus: Vec<Operator>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PreparationSpec {
    #[default]
    Basis,
    States { states: Vec<Vec<C64>> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TestSpec {
    #[default]
    Basis,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasksSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Vec<bool>>,
}

/// An outcome named by index or by label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeLabel {
    Index(usize),
    Name(String),
}

impl std::fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutcomeLabel::Index(i) => write!(f, "{i}"),
            OutcomeLabel::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub task: String,
    pub dims_in: Vec<usize>,
    pub dims_out: Vec<usize>,
    pub transformation: TransformationSpec,
    #[serde(default)]
    pub preparation: PreparationSpec,
    #[serde(default)]
    pub test: TestSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given: Option<Vec<OutcomeLabel>>,
    #[serde(default)]
    pub masks: MasksSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, ThisError)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed scenario: {0}")]
    Malformed(String),

    #[error("unknown task '{0}' (expected one of: predict, postdict, classify, purify, verify, sample)")]
    UnknownTask(String),

    #[error("{field}: {message}")]
    Dimension { field: String, message: String },

    #[error("{field}: not unitary (max deviation {defect:.3e})")]
    NotUnitary { field: String, defect: f64 },

    #[error("{field}: not a valid quantum channel: {reason}")]
    NotCptp { field: String, reason: String },

    #[error("{field}: completeness violated (defect {defect:.3e})")]
    Incomplete { field: String, defect: f64 },

    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ScenarioError {
    /// Stable identifier of the failure class.
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::Io { .. } => "E_IO",
            ScenarioError::Malformed(_) => "E_MALFORMED",
            ScenarioError::UnknownTask(_) => "E_UNKNOWN_TASK",
            ScenarioError::Dimension { .. } => "E_DIMENSION",
            ScenarioError::NotUnitary { .. } => "E_NOT_UNITARY",
            ScenarioError::NotCptp { .. } => "E_NOT_CPTP",
            ScenarioError::Incomplete { .. } => "E_INCOMPLETE",
            ScenarioError::Invalid { .. } => "E_INVALID",
        }
    }

    pub fn is_parse_error(&self) -> bool {
        matches!(self, ScenarioError::Io { .. } | ScenarioError::Malformed(_) | ScenarioError::UnknownTask(_))
    }

    /// Attach a field name to a library error.
    pub fn at(field: &str, e: Error) -> Self {
        let field = field.to_string();
        match e {
            Error::DimensionMismatch(message) => ScenarioError::Dimension { field, message },
            Error::NotUnitary { defect, .. } => ScenarioError::NotUnitary { field, defect },
            Error::NotCptp { reason, .. } => ScenarioError::NotCptp { field, reason },
            Error::Incomplete { defect, .. } => ScenarioError::Incomplete { field, defect },
            other => ScenarioError::Invalid { field, message: other.to_string() },
        }
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn task_kind(&self) -> Result<TaskKind, ScenarioError> {
        TaskKind::parse(&self.task).ok_or_else(|| ScenarioError::UnknownTask(self.task.clone()))
    }
}

/// A scenario whose matrices and dimensions have been checked.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedScenario {
    pub file: ScenarioFile,
    pub kind: TaskKind,
    pub dims_in: DimsPartition,
    pub dims_out: DimsPartition,
    pub transformation: Transformation,
    pub preparation: Preparation,
}

fn partition(field: &str, dims: &[usize]) -> Result<DimsPartition, ScenarioError> {
    DimsPartition::new(dims.to_vec()).map_err(|e| ScenarioError::at(field, e))
}

fn transformation(
    spec: &TransformationSpec,
    dims_in: &DimsPartition,
    dims_out: &DimsPartition,
) -> Result<Transformation, ScenarioError> {
    let (d_in, d_out) = (dims_in.total(), dims_out.total());
    match spec {
        TransformationSpec::Unitary { matrix } => {
            let field = "transformation.matrix";
            if matrix.shape() != (d_out, d_in) {
                return Err(ScenarioError::Dimension {
                    field: field.into(),
                    message: format!(
                        "matrix is {}x{} but dims_out x dims_in is {d_out}x{d_in}",
                        matrix.rows(),
                        matrix.cols()
                    ),
                });
            }
            let defect = matrix.unitarity_defect();
            if defect > STRUCTURAL_TOL {
                return Err(ScenarioError::NotUnitary { field: field.into(), defect });
            }
            Ok(Transformation::Unitary(matrix.clone()))
        }
        TransformationSpec::KrausChannel { kraus } => {
            let field = "transformation.kraus";
            let map = QuantumMap::new(kraus.clone(), d_in, d_out).map_err(|e| ScenarioError::at(field, e))?;
            map.ensure_cptp(field).map_err(|e| ScenarioError::at(field, e))?;
            Ok(Transformation::Channel(map))
        }
        TransformationSpec::Instrument { outcomes } => {
            let field = "transformation.outcomes";
            let maps = outcomes
                .iter()
                .map(|o| Ok((o.label.clone(), QuantumMap::new(o.kraus.clone(), d_in, d_out)?)))
                .collect::<crate::error::Result<Vec<_>>>()
                .map_err(|e| ScenarioError::at(field, e))?;
            let inst = Instrument::new(maps, d_in, d_out).map_err(|e| ScenarioError::at(field, e))?;
            Ok(Transformation::Instrument(inst))
        }
    }
}

fn preparation(spec: &PreparationSpec, dims_in: &DimsPartition) -> Result<Preparation, ScenarioError> {
    match spec {
        PreparationSpec::Basis => Ok(Preparation::Basis),
        PreparationSpec::States { states } => {
            let field = "preparation.states";
            if states.is_empty() {
                return Err(ScenarioError::Invalid { field: field.into(), message: "no states listed".into() });
            }
            let kets = states
                .iter()
                .enumerate()
                .map(|(i, amplitudes)| {
                    if amplitudes.len() != dims_in.total() {
                        return Err(ScenarioError::Dimension {
                            field: field.into(),
                            message: format!("state {i} has {} amplitudes, dims_in gives {}", amplitudes.len(), dims_in.total()),
                        });
                    }
                    let ket = Operator::ket(amplitudes.clone()).map_err(|e| ScenarioError::at(field, e))?;
                    let norm = ket.inner(&ket).re;
                    if (norm - 1.0).abs() > STRUCTURAL_TOL {
                        return Err(ScenarioError::Invalid {
                            field: field.into(),
                            message: format!("state {i} is not normalized (⟨ψ|ψ⟩ = {norm:.6})"),
                        });
                    }
                    Ok(ket)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Preparation::States(kets))
        }
    }
}

impl ValidatedScenario {
    pub fn new(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let kind = file.task_kind()?;
        let dims_in = partition("dims_in", &file.dims_in)?;
        let dims_out = partition("dims_out", &file.dims_out)?;
        let transformation = transformation(&file.transformation, &dims_in, &dims_out)?;
        let preparation = preparation(&file.preparation, &dims_in)?;
        let scenario = Self { file, kind, dims_in, dims_out, transformation, preparation };
        // Build the task once so mask and preparation errors surface here.
        let task = scenario.task(Direction::Predict)?;
        if matches!(kind, TaskKind::Predict | TaskKind::Postdict) {
            let direction = if kind == TaskKind::Predict { Direction::Predict } else { Direction::Postdict };
            let task = InferenceTask { direction, ..task };
            scenario.given_indices(&task)?;
        }
        Ok(scenario)
    }

    /// The inference task described by the scenario, in the given direction.
    pub fn task(&self, direction: Direction) -> Result<InferenceTask, ScenarioError> {
        let inputs = match self.preparation {
            Preparation::States(_) => 1,
            Preparation::Basis => self.dims_in.len(),
        };
        let outputs = self.dims_out.len() + usize::from(matches!(self.transformation, Transformation::Instrument(_)));
        let input_mask = self.file.masks.input.clone().unwrap_or_else(|| vec![true; inputs]);
        let output_mask = self.file.masks.output.clone().unwrap_or_else(|| vec![true; outputs]);
        InferenceTask::new(
            self.transformation.clone(),
            self.dims_in.clone(),
            self.dims_out.clone(),
            self.preparation.clone(),
            direction,
            input_mask,
            output_mask,
        )
        .map_err(|e| ScenarioError::at("masks", e))
    }

    /// Indices of the `given` outcomes for the task's conditioning side.
    pub fn given_indices(&self, task: &InferenceTask) -> Result<Vec<usize>, ScenarioError> {
        self.resolve_given(task, self.file.given.as_deref())
    }

    pub fn resolve_given(&self, task: &InferenceTask, given: Option<&[OutcomeLabel]>) -> Result<Vec<usize>, ScenarioError> {
        let field = "given";
        let given = given.ok_or_else(|| ScenarioError::Invalid {
            field: field.into(),
            message: format!("a {} task needs the given outcome(s)", task.direction),
        })?;
        let likelihood = task.likelihood().map_err(|e| ScenarioError::at("transformation", e))?;
        let labels = match task.direction {
            Direction::Predict => likelihood.input_labels(),
            Direction::Postdict => likelihood.output_labels(),
        };
        let factors: Vec<&Vec<String>> =
            labels.iter().zip(task.given_mask()).filter(|(_, &m)| m).map(|(l, _)| l).collect();
        if factors.len() != given.len() {
            return Err(ScenarioError::Invalid {
                field: field.into(),
                message: format!("expected {} outcome(s), got {}", factors.len(), given.len()),
            });
        }
        given
            .iter()
            .zip(factors)
            .map(|(g, names)| {
                let found = match g {
                    OutcomeLabel::Index(i) if *i < names.len() => Some(*i),
                    OutcomeLabel::Index(_) => None,
                    OutcomeLabel::Name(s) => names.iter().position(|n| n == s),
                };
                found.ok_or_else(|| ScenarioError::Invalid {
                    field: field.into(),
                    message: format!("'{g}' is not one of [{}]", names.join(", ")),
                })
            })
            .collect()
    }

    /// The transformation as a channel: unitaries wrapped, instruments
    /// coarse-grained.
    pub fn channel(&self) -> Result<QuantumMap, ScenarioError> {
        match &self.transformation {
            Transformation::Unitary(u) => {
                crate::channels::make_unitary_channel(u).map_err(|e| ScenarioError::at("transformation.matrix", e))
            }
            Transformation::Channel(m) => Ok(m.clone()),
            Transformation::Instrument(i) => Ok(crate::channels::coarse_grain(i)),
        }
    }
}

pub fn parse_scenario_str(text: &str) -> Result<ValidatedScenario, ScenarioError> {
    ValidatedScenario::new(ScenarioFile::from_json(text)?)
}

pub fn parse_scenario(path: &Path) -> Result<ValidatedScenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_scenario_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = r#"{
        "task": "predict",
        "dims_in": [2], "dims_out": [2],
        "transformation": {"type": "kraus-channel", "kraus": [[[[1,0],[0,0]],[[0,0],[1,0]]]]},
        "given": ["1"]
    }"#;

    #[test]
    fn minimal_identity_scenario() {
        let s = parse_scenario_str(IDENTITY).unwrap();
        assert_eq!(s.kind, TaskKind::Predict);
        let task = s.task(Direction::Predict).unwrap();
        let given = s.given_indices(&task).unwrap();
        assert_eq!(task.solve(&given).unwrap().probabilities(), [0.0, 1.0]);
    }

    #[test]
    fn non_unitary_matrix_names_the_field() {
        let text = r#"{"task":"predict","dims_in":[2],"dims_out":[2],"given":[0],
            "transformation":{"type":"unitary","matrix":[[[1,0],[1,0]],[[0,0],[1,0]]]}}"#;
        let e = parse_scenario_str(text).unwrap_err();
        assert_eq!(e.code(), "E_NOT_UNITARY");
        assert!(e.to_string().contains("transformation.matrix"));
        assert!(!e.is_parse_error());
    }

    #[test]
    fn error_classes_are_distinct() {
        let cases = [
            ("{not json", "E_MALFORMED"),
            (r#"{"task":"teleport","dims_in":[2],"dims_out":[2],"transformation":{"type":"unitary","matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}}"#, "E_UNKNOWN_TASK"),
            (r#"{"task":"classify","dims_in":[3],"dims_out":[3],"transformation":{"type":"unitary","matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}}"#, "E_DIMENSION"),
            (r#"{"task":"classify","dims_in":[2],"dims_out":[2],"transformation":{"type":"kraus-channel","kraus":[[[[1,0],[0,0]],[[0,0],[0.5,0]]]]}}"#, "E_NOT_CPTP"),
            (r#"{"task":"classify","dims_in":[2],"dims_out":[2],"transformation":{"type":"instrument","outcomes":[{"label":"0","kraus":[[[[1,0],[0,0]],[[0,0],[0,0]]]]}]}}"#, "E_INCOMPLETE"),
            (r#"{"task":"predict","dims_in":[2],"dims_out":[2],"transformation":{"type":"unitary","matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}}"#, "E_INVALID"),
            (r#"{"task":"classify","dims_in":[2],"dims_out":[2],"bogus":1,"transformation":{"type":"unitary","matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}}"#, "E_MALFORMED"),
        ];
        for (text, code) in cases {
            assert_eq!(parse_scenario_str(text).unwrap_err().code(), code, "{text}");
        }
    }

    #[test]
    fn labels_by_name_or_index() {
        let text = r#"{"task":"postdict","dims_in":[2],"dims_out":[2],"given":["1", 0],
            "transformation":{"type":"instrument","outcomes":[
                {"label":"0","kraus":[[[[1,0],[0,0]],[[0,0],[0,0]]]]},
                {"label":"1","kraus":[[[[0,0],[0,0]],[[0,0],[1,0]]]]}]}}"#;
        let s = parse_scenario_str(text).unwrap();
        let task = s.task(Direction::Postdict).unwrap();
        assert_eq!(s.given_indices(&task).unwrap(), [1, 0]);
    }

    #[test]
    fn round_trip() {
        let file = ScenarioFile::from_json(IDENTITY).unwrap();
        let again = ScenarioFile::from_json(&file.to_json()).unwrap();
        assert_eq!(file, again);
    }

    #[test]
    fn state_preparations() {
        let text = r#"{"task":"postdict","dims_in":[2],"dims_out":[2],"given":[0],
            "preparation":{"type":"states","states":[[[1,0],[0,0]],[[0.7071067811865476,0],[0.7071067811865476,0]]]},
            "transformation":{"type":"unitary","matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}}"#;
        let s = parse_scenario_str(text).unwrap();
        let task = s.task(Direction::Postdict).unwrap();
        let t = task.solve(&s.given_indices(&task).unwrap()).unwrap();
        assert!((t.at(0) - 2.0 / 3.0).abs() < 1e-12);
        let bad = text.replace("0.7071067811865476", "0.8");
        assert_eq!(parse_scenario_str(&bad).unwrap_err().code(), "E_INVALID");
    }
}
