//! Uniqueness of the deterministic effect on the output side.
//!
//! A weighting `w` of the output basis is deterministic for `Φ` when
//! `Σ_x w_x ⟨x|Φ[ρ]|x⟩ = 1` for every state. By linearity this is
//! `Σ_x w_x ⟨x|Φ[E_ij]|x⟩ = δ_ij` on matrix units, a real linear system in
//! `w` whose kernel decides uniqueness.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::QuantumMap;
use crate::error::Result;
use crate::linalg::matrix_unit;

/// Smallest singular value (and alternative residual) counted as nonzero.
pub const UNIQUENESS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterministicEffectReport {
    /// Least-squares solution.
    pub weights: Vec<f64>,
    pub residual: f64,
    /// `max_x |w_x − 1|`.
    pub deviation_from_discard: f64,
    pub min_singular_value: f64,
    /// Smallest residual among perturbed candidates `1 + v` with `|v| = 1`:
    /// each basis direction and the least-constrained singular direction.
    pub min_alternative_residual: f64,
    pub unique: bool,
}

fn system(channel: &QuantumMap) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (d_in, d_out) = (channel.dim_in(), channel.dim_out());
    let rows = 2 * d_in * d_in;
    let mut a = DMatrix::<f64>::zeros(rows, d_out);
    let mut rhs = DVector::<f64>::zeros(rows);
    for i in 0..d_in {
        for j in 0..d_in {
            let image = channel.apply(&matrix_unit(d_in, i, j))?;
            let r = 2 * (i * d_in + j);
            for x in 0..d_out {
                let v = image.get(x, x);
                a[(r, x)] = v.re;
                a[(r + 1, x)] = v.im;
            }
            rhs[r] = if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok((a, rhs))
}

pub fn deterministic_effect_check(channel: &QuantumMap) -> Result<DeterministicEffectReport> {
    channel.ensure_cptp("channel")?;
    let (a, rhs) = system(channel)?;
    let d_out = a.ncols();
    let svd = a.clone().svd(true, true);
    let weights = svd.solve(&rhs, f64::EPSILON).expect("both factors were computed");
    let residual = (&a * &weights - &rhs).norm();
    let deviation_from_discard = weights.iter().map(|w| (w - 1.0).abs()).fold(0.0, f64::max);

    let (min_index, min_singular_value) = if a.nrows() < d_out {
        (None, 0.0)
    } else {
        let (i, s) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("at least one column");
        (Some(i), s)
    };

    let discard = DVector::<f64>::from_element(d_out, 1.0);
    let mut directions: Vec<DVector<f64>> = (0..d_out)
        .map(|k| {
            let mut e = DVector::zeros(d_out);
            e[k] = 1.0;
            e
        })
        .collect();
    if let Some(i) = min_index {
        let v_t = svd.v_t.as_ref().expect("computed");
        directions.push(v_t.row(i).transpose());
    }
    let min_alternative_residual = directions
        .iter()
        .map(|v| (&a * (&discard + v) - &rhs).norm())
        .fold(f64::INFINITY, f64::min);

    Ok(DeterministicEffectReport {
        weights: weights.iter().copied().collect(),
        residual,
        deviation_from_discard,
        min_singular_value,
        min_alternative_residual,
        unique: min_singular_value > UNIQUENESS_TOL && min_alternative_residual > UNIQUENESS_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_amplitude_damping, make_dephasing, random_channel};
    use crate::linalg::Operator;

    #[test]
    fn discard_is_the_solution() {
        for ch in [make_dephasing(), make_amplitude_damping(0.3).unwrap(), random_channel(2, 3, 2, 5)] {
            let r = deterministic_effect_check(&ch).unwrap();
            assert!(r.residual < 1e-10);
            assert!(r.deviation_from_discard < 1e-10);
            assert!(r.unique, "{r:?}");
        }
    }

    #[test]
    fn replacement_channel_is_not_unique() {
        // ρ ↦ tr(ρ)|0⟩⟨0| only constrains w_0.
        let k0 = Operator::real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let k1 = Operator::real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let ch = QuantumMap::from_kraus(vec![k0, k1]).unwrap();
        let r = deterministic_effect_check(&ch).unwrap();
        assert!(!r.unique);
        assert!(r.min_singular_value < 1e-12);
    }
}
