//! Open systems: a unitary on `A ⊗ B → X ⊗ Y` where only some factors are
//! prepared or observed.

use serde::{Deserialize, Serialize};

use super::likelihood::Likelihood;
use crate::error::{Error, Result};
use crate::linalg::{DimsPartition, Operator};
use crate::table::ProbabilityTable;

pub fn predict_open(
    u: &Operator,
    dims_in: &DimsPartition,
    dims_out: &DimsPartition,
    known_input: &[Option<usize>],
    guessed_output: &[bool],
) -> Result<ProbabilityTable> {
    Likelihood::from_unitary(u, dims_in, dims_out)?.predict(known_input, guessed_output)
}

pub fn postdict_open(
    u: &Operator,
    dims_in: &DimsPartition,
    dims_out: &DimsPartition,
    known_output: &[Option<usize>],
    guessed_input: &[bool],
) -> Result<ProbabilityTable> {
    Likelihood::from_unitary(u, dims_in, dims_out)?.postdict(known_output, guessed_input)
}

fn bipartite(dims_in: &DimsPartition, dims_out: &DimsPartition) -> Result<()> {
    if dims_in.len() != 2 || dims_out.len() != 2 {
        return Err(Error::dims("open-system identities need [d_A, d_B] and [d_X, d_Y] partitions"));
    }
    Ok(())
}

/// Defect of each named identity, maximized over all basis outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identities: Vec<(String, f64)>,
    pub max_defect: f64,
}

impl IdentityReport {
    fn from_pairs(identities: Vec<(String, f64)>) -> Self {
        let max_defect = identities.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        Self { identities, max_defect }
    }

    pub fn defect(&self, name: &str) -> Option<f64> {
        self.identities.iter().find(|(n, _)| n == name).map(|(_, d)| *d)
    }
}

/// Largest entrywise gap between two families of tables.
fn worst(pairs: impl IntoIterator<Item = Result<(ProbabilityTable, ProbabilityTable)>>) -> Result<f64> {
    pairs.into_iter().try_fold(0.0f64, |acc, pair| {
        let (lhs, rhs) = pair?;
        Ok(acc.max(lhs.max_abs_diff(&rhs)?))
    })
}

/// Ratio laws between open-system prediction and postdiction:
/// `P_post(ab|x) = P_pre(x|ab)/d_Y`, `P_post(a|xy) = d_B·P_pre(xy|a)` and
/// `d_Y·P_post(a|x) = d_B·P_pre(x|a)`. When `d_B = d_Y` the last one is an
/// equality, reported as `equal-dims`.
pub fn open_ratio_check(u: &Operator, dims_in: &DimsPartition, dims_out: &DimsPartition) -> Result<IdentityReport> {
    bipartite(dims_in, dims_out)?;
    let l = Likelihood::from_unitary(u, dims_in, dims_out)?;
    let [da, db] = [dims_in.factors()[0], dims_in.factors()[1]];
    let [dx, dy] = [dims_out.factors()[0], dims_out.factors()[1]];
    let (db_f, dy_f) = (db as f64, dy as f64);

    let mut missing_output = 0.0f64;
    for x in 0..dx {
        let post = l.postdict(&[Some(x), None], &[true, true])?;
        for a in 0..da {
            for b in 0..db {
                let pre = l.predict(&[Some(a), Some(b)], &[true, false])?.at(x);
                missing_output = missing_output.max((post.at(a * db + b) - pre / dy_f).abs());
            }
        }
    }

    let mut missing_input = 0.0f64;
    for x in 0..dx {
        for y in 0..dy {
            let post = l.postdict(&[Some(x), Some(y)], &[true, false])?;
            for a in 0..da {
                let pre = l.predict(&[Some(a), None], &[true, true])?.at(x * dy + y);
                missing_input = missing_input.max((post.at(a) - db_f * pre).abs());
            }
        }
    }

    let mut missing_both = 0.0f64;
    let mut equal_dims = 0.0f64;
    for x in 0..dx {
        let post = l.postdict(&[Some(x), None], &[true, false])?;
        for a in 0..da {
            let pre = l.predict(&[Some(a), None], &[true, false])?.at(x);
            missing_both = missing_both.max((dy_f * post.at(a) - db_f * pre).abs());
            equal_dims = equal_dims.max((post.at(a) - pre).abs());
        }
    }

    let mut identities = vec![
        ("missing-output".to_string(), missing_output),
        ("missing-input".to_string(), missing_input),
        ("missing-both".to_string(), missing_both),
    ];
    if db == dy {
        identities.push(("equal-dims".to_string(), equal_dims));
    }
    Ok(IdentityReport::from_pairs(identities))
}

/// The six identities relating tasks with `U` to time-reversed tasks with
/// `U†`, each evaluated on both sides over every basis outcome.
pub fn open_reversal_check(u: &Operator, dims_in: &DimsPartition, dims_out: &DimsPartition) -> Result<IdentityReport> {
    bipartite(dims_in, dims_out)?;
    let forward = Likelihood::from_unitary(u, dims_in, dims_out)?;
    let reverse = Likelihood::from_unitary(&u.adjoint(), dims_out, dims_in)?;
    let [da, db] = [dims_in.factors()[0], dims_in.factors()[1]];
    let [dx, dy] = [dims_out.factors()[0], dims_out.factors()[1]];
    let pairs = |xs: usize, ys: Option<usize>| -> Vec<[Option<usize>; 2]> {
        (0..xs).flat_map(|x| match ys {
            Some(n) => (0..n).map(|y| [Some(x), Some(y)]).collect::<Vec<_>>(),
            None => vec![[Some(x), None]],
        })
        .collect()
    };
    const BOTH: [bool; 2] = [true, true];
    const FIRST: [bool; 2] = [true, false];

    let out_full = pairs(dx, Some(dy));
    let out_first = pairs(dx, None);
    let in_full = pairs(da, Some(db));
    let in_first = pairs(da, None);

    let identities = vec![
        (
            "pre-a-xy",
            worst(out_full.iter().map(|k| Ok((reverse.predict(k, &FIRST)?, forward.postdict(k, &FIRST)?))))?,
        ),
        (
            "pre-ab-x",
            worst(out_first.iter().map(|k| Ok((reverse.predict(k, &BOTH)?, forward.postdict(k, &BOTH)?))))?,
        ),
        (
            "post-xy-a",
            worst(in_first.iter().map(|k| Ok((reverse.postdict(k, &BOTH)?, forward.predict(k, &BOTH)?))))?,
        ),
        (
            "post-x-ab",
            worst(in_full.iter().map(|k| Ok((reverse.postdict(k, &FIRST)?, forward.predict(k, &FIRST)?))))?,
        ),
        (
            "pre-a-x",
            worst(out_first.iter().map(|k| Ok((reverse.predict(k, &FIRST)?, forward.postdict(k, &FIRST)?))))?,
        ),
        (
            "post-x-a",
            worst(in_first.iter().map(|k| Ok((reverse.postdict(k, &FIRST)?, forward.predict(k, &FIRST)?))))?,
        ),
    ];
    Ok(IdentityReport::from_pairs(identities.into_iter().map(|(n, d)| (n.to_string(), d)).collect()))
}
