//! Outcome-labelled probability tables.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator used in joint outcome labels such as `0·1` or `meas·+`.
pub const LABEL_SEPARATOR: &str = "·";
/// Label standing in for a factor whose value is not part of the data.
pub const UNKNOWN_LABEL: &str = "*";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Predict,
    Postdict,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Predict => Direction::Postdict,
            Direction::Postdict => Direction::Predict,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Predict => "predict",
            Direction::Postdict => "postdict",
        })
    }
}

/// Join per-factor labels with [`LABEL_SEPARATOR`].
pub fn joint_label<S: AsRef<str>>(parts: &[S]) -> String {
    parts.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(LABEL_SEPARATOR)
}

/// Conditional (or joint) distribution keyed by outcome label, in basis
/// index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub given: String,
    pub direction: Direction,
    pub entries: IndexMap<String, f64>,
    /// Multiplicative factor relating postdiction to prediction, when one
    /// exists (`f_Φ(x)` for channels).
    pub factor: Option<f64>,
    /// `|Σ entries − 1|`.
    pub normalization_defect: f64,
}

impl ProbabilityTable {
    pub fn new(
        given: impl Into<String>,
        direction: Direction,
        entries: impl IntoIterator<Item = (String, f64)>,
    ) -> Self {
        let entries: IndexMap<String, f64> = entries.into_iter().collect();
        let total: f64 = entries.values().sum();
        Self {
            given: given.into(),
            direction,
            entries,
            factor: None,
            normalization_defect: (total - 1.0).abs(),
        }
    }

    /// Table whose labels are `0, 1, …, n-1`.
    pub fn indexed(given: impl Into<String>, direction: Direction, probabilities: &[f64]) -> Self {
        Self::new(given, direction, probabilities.iter().enumerate().map(|(i, &p)| (i.to_string(), p)))
    }

    pub fn with_factor(mut self, factor: f64) -> Self {
        self.factor = Some(factor);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.get(label).copied()
    }

    /// Probability at position `i` in label order.
    pub fn at(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.values().copied().collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.normalization_defect <= tol
    }

    /// Largest absolute difference between two tables over the same labels.
    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> Result<f64> {
        if self.entries.len() != other.entries.len() || self.labels().ne(other.labels()) {
            return Err(Error::invalid(format!(
                "label sets differ: [{}] vs [{}]",
                self.labels().collect::<Vec<_>>().join(", "),
                other.labels().collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(self.entries.values().zip(other.entries.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Every entry lies in `[-tol, 1 + tol]`.
    pub fn entries_in_unit_interval(&self, tol: f64) -> bool {
        self.entries.values().all(|&p| (-tol..=1.0 + tol).contains(&p))
    }
}

/// Bayesian inversion of a likelihood column under an explicit prior.
///
/// `likelihoods[i]` is `P(data | hypothesis i)`; the result is the posterior
/// over hypothesis labels. The inference tasks themselves always use a flat
/// prior; this is the general entry point for callers that need another one.
pub fn bayes_invert(
    given: impl Into<String>,
    hypotheses: &[String],
    likelihoods: &[f64],
    prior: &[f64],
) -> Result<ProbabilityTable> {
    if hypotheses.len() != likelihoods.len() || likelihoods.len() != prior.len() {
        return Err(Error::dims(format!(
            "{} hypotheses, {} likelihoods, {} prior weights",
            hypotheses.len(),
            likelihoods.len(),
            prior.len()
        )));
    }
    if prior.iter().any(|&p| p < 0.0) || ((prior.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("prior must be a probability distribution"));
    }
    let given = given.into();
    let evidence: f64 = likelihoods.iter().zip(prior).map(|(l, p)| l * p).sum();
    if evidence <= 1e-12 {
        return Err(Error::UndefinedConditional(format!("data '{given}' has zero probability under the prior")));
    }
    Ok(ProbabilityTable::new(
        given,
        Direction::Postdict,
        hypotheses.iter().zip(likelihoods.iter().zip(prior)).map(|(h, (l, p))| (h.clone(), l * p / evidence)),
    ))
}

/// Flat prior over `n` alternatives.
pub fn flat_prior(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_defect_is_tracked() {
        let t = ProbabilityTable::indexed("0", Direction::Predict, &[0.25, 0.5]);
        assert!((t.normalization_defect - 0.25).abs() < 1e-15);
        assert!(!t.is_normalized(1e-9));
    }

    #[test]
    fn bayes_with_flat_prior() {
        let labels = vec!["0".to_string(), "1".to_string()];
        let t = bayes_invert("x=0", &labels, &[1.0, 0.5], &flat_prior(2)).unwrap();
        assert!((t.at(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((t.at(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bayes_with_skewed_prior() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let t = bayes_invert("x", &labels, &[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((t.get("a").unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn bayes_rejects_impossible_data() {
        let labels = vec!["a".to_string()];
        assert!(matches!(
            bayes_invert("x", &labels, &[0.0], &[1.0]),
            Err(Error::UndefinedConditional(_))
        ));
    }

    #[test]
    fn diff_needs_matching_labels() {
        let a = ProbabilityTable::indexed("0", Direction::Predict, &[0.5, 0.5]);
        let b = ProbabilityTable::new("0", Direction::Predict, [("1".into(), 0.5), ("0".into(), 0.5)]);
        assert!(a.max_abs_diff(&b).is_err());
        assert_eq!(a.max_abs_diff(&a).unwrap(), 0.0);
    }

    #[test]
    fn json_shape() {
        let t = ProbabilityTable::indexed("1", Direction::Postdict, &[0.0, 1.0]).with_factor(2.0);
        let v: serde_json::Value = serde_json::to_value(&t).unwrap();
        assert_eq!(v["direction"], "postdict");
        assert_eq!(v["factor"], 2.0);
        assert_eq!(v["entries"]["1"], 1.0);
        let back: ProbabilityTable = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }
}
