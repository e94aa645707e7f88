//! Dense complex-matrix kernel.
//!
//! [`Operator`] is a row-major dense complex matrix. It stores kets (column
//! vectors), density matrices, unitaries, Kraus operators and effects. The
//! dimensions handled by this crate stay in the tens, so all products are
//! plain loops; eigenvalues and QR are delegated to `nalgebra`.
//!
//! Subsystem ordering is fixed: in a tensor product `A ⊗ B` the left factor
//! is the first (most significant) subsystem, so `|a b⟩` has flat index
//! `a * d_B + b`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng;

pub type C64 = Complex64;

/// Tolerance for structural checks: unitarity, Hermiticity, trace, CPTP.
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Tolerance for exact probability identities.
pub const PROBABILITY_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct Operator {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dims("operators need at least one row and one column"));
        }
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries supplied for a {rows}x{cols} operator",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty operator");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.data[i * d + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dims("ragged matrix rows"));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Real-valued matrix literal, mostly for tests and fixed gates.
    pub fn real(rows: &[&[f64]]) -> Self {
        let data = rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(data).expect("well-formed literal")
    }

    /// Column vector from amplitudes.
    pub fn ket(amplitudes: Vec<C64>) -> Result<Self> {
        let n = amplitudes.len();
        Self::new(n, 1, amplitudes)
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let d = entries.len();
        Self::from_fn(d, d, |i, j| if i == j { entries[i] } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn column(&self, j: usize) -> Operator {
        Operator::from_fn(self.rows, 1, |i, _| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.cols).map(<[C64]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> Operator {
        Operator::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn scale_real(&self, factor: f64) -> Operator {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Matrix product; `None` when the inner dimensions differ.
    pub fn checked_mul(&self, rhs: &Operator) -> Option<Operator> {
        if self.cols != rhs.rows {
            return None;
        }
        let mut out = Operator::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Some(out)
    }

    /// `self · rho · self†`.
    pub fn conjugate(&self, rho: &Operator) -> Operator {
        &(self * rho) * &self.adjoint()
    }

    /// `|ψ⟩⟨ψ|` for a column vector.
    pub fn projector(&self) -> Operator {
        assert_eq!(self.cols, 1, "projector needs a column vector");
        self * &self.adjoint()
    }

    /// `⟨self|other⟩` for column vectors.
    pub fn inner(&self, other: &Operator) -> C64 {
        assert_eq!(self.shape(), other.shape(), "inner product of mismatched vectors");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `max |(U†U − 𝕀)_{ij}|`; infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&Operator::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// `max |(V†V − 𝕀)_{ij}|` for a possibly rectangular isometry.
    pub fn isometry_defect(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Operator::identity(self.cols))
    }

    /// Eigenvalues of a Hermitian operator in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert!(self.is_square(), "eigenvalues of a non-square operator");
        // Symmetrize so rounding noise does not leak into the solver.
        let h = (self + &self.adjoint()).scale_real(0.5);
        let mut values: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Eigenpairs of a Hermitian operator: eigenvalues and the matching
    /// eigenvectors as columns.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, Operator) {
        assert!(self.is_square(), "eigen decomposition of a non-square operator");
        let h = (self + &self.adjoint()).scale_real(0.5);
        let eig = h.to_nalgebra().symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), Operator::from_nalgebra(&eig.eigenvectors))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.hermitian_eigenvalues().last().expect("non-empty")
    }

    /// Density-matrix check: square, Hermitian, PSD and unit trace within `tol`.
    pub fn is_state(&self, tol: f64) -> bool {
        self.is_square()
            && self.is_hermitian(tol)
            && (self.trace() - ONE).norm() <= tol
            && self.min_eigenvalue() >= -tol
    }

    pub fn determinant(&self) -> C64 {
        self.to_nalgebra().determinant()
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Operator {
        Operator::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            let cells: Vec<String> = row.iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im)).collect();
            writeln!(f, "  {}", cells.join("  "))?;
        }
        write!(f, "]")
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.checked_mul(rhs).unwrap_or_else(|| {
            panic!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, rhs.rows, rhs.cols)
        })
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.shape(), rhs.shape(), "adding mismatched operators");
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.shape(), rhs.shape(), "subtracting mismatched operators");
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

// Matrices travel as row-major nested arrays of [re, im] pairs.
impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            self.data.chunks(self.cols).map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows = rows.into_iter().map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect()).collect();
        Operator::from_rows(rows).map_err(D::Error::custom)
    }
}

/// Ordered subsystem dimensions of a composite space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DimsPartition {
    factors: Vec<usize>,
}

impl DimsPartition {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::dims("a partition needs at least one factor"));
        }
        if factors.contains(&0) {
            return Err(Error::dims("subsystem dimensions must be positive"));
        }
        Ok(Self { factors })
    }

    pub fn single(d: usize) -> Self {
        Self::new(vec![d]).expect("positive dimension")
    }

    pub fn pair(first: usize, second: usize) -> Self {
        Self::new(vec![first, second]).expect("positive dimensions")
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total(&self) -> usize {
        self.factors.iter().product()
    }

    /// Flat-index stride of each factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1];
        }
        strides
    }

    /// Per-factor digits of a flat index.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.factors.len()];
        for (slot, &d) in digits.iter_mut().zip(&self.factors).rev() {
            *slot = index % d;
            index /= d;
        }
        digits
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.factors).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    /// Flat-index contributions of every joint value of the listed factors,
    /// enumerated with the first listed factor most significant.
    pub fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offsets.len() * self.factors[f]);
            for &base in &offsets {
                for v in 0..self.factors[f] {
                    next.push(base + v * strides[f]);
                }
            }
            offsets = next;
        }
        offsets
    }

    /// Product of the listed factors.
    pub fn sub_total(&self, factors: &[usize]) -> usize {
        factors.iter().map(|&f| self.factors[f]).product()
    }
}

impl TryFrom<Vec<usize>> for DimsPartition {
    type Error = Error;

    fn try_from(factors: Vec<usize>) -> Result<Self> {
        Self::new(factors)
    }
}

impl From<DimsPartition> for Vec<usize> {
    fn from(d: DimsPartition) -> Self {
        d.factors
    }
}

/// Kronecker product; `a` is the first subsystem.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let (br, bc) = b.shape();
    Operator::from_fn(a.rows * br, a.cols * bc, |i, j| a.get(i / br, j / bc) * b.get(i % br, j % bc))
}

/// Kronecker product of a list, left to right.
pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> Operator {
    let mut iter = ops.into_iter();
    let first = iter.next().expect("tensor_all needs at least one operator").clone();
    iter.fold(first, |acc, op| tensor(&acc, op))
}

/// Reduced operator on the factors in `keep`, tracing out the others.
/// The kept factors appear in ascending order.
pub fn partial_trace(op: &Operator, dims: &DimsPartition, keep: &[usize]) -> Result<Operator> {
    if !op.is_square() {
        return Err(Error::dims("partial trace of a non-square operator"));
    }
    if dims.total() != op.rows() {
        return Err(Error::dims(format!(
            "partition {:?} has total {} but the operator is {}x{}",
            dims.factors(),
            dims.total(),
            op.rows(),
            op.cols()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::dims(format!("factor {bad} is out of range for {} factors", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
    let kept_offsets = dims.offsets(&kept);
    let traced_offsets = dims.offsets(&traced);
    let d = kept_offsets.len();
    Ok(Operator::from_fn(d, d, |r, c| {
        let (ro, co) = (kept_offsets[r], kept_offsets[c]);
        traced_offsets.iter().map(|&t| op.get(ro + t, co + t)).sum()
    }))
}

/// Computational-basis ket `|i⟩` in dimension `d`.
pub fn basis_ket(d: usize, i: usize) -> Result<Operator> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if i >= d {
        return Err(Error::invalid(format!("basis index {i} out of range for dimension {d}")));
    }
    let mut v = Operator::zeros(d, 1);
    v.set(i, 0, ONE);
    Ok(v)
}

/// `|i⟩⟨i|` in dimension `d`.
pub fn basis_projector(d: usize, i: usize) -> Result<Operator> {
    Ok(basis_ket(d, i)?.projector())
}

/// Matrix unit `|i⟩⟨j|`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> Operator {
    let mut m = Operator::zeros(d, d);
    m.set(i, j, ONE);
    m
}

/// Haar-distributed unitary of dimension `d` from `seed`.
///
/// A complex Ginibre matrix is QR-factorised and the columns of `Q` are
/// rephased by `R_jj / |R_jj|`, which makes the distribution exactly Haar.
pub fn haar_random_unitary(d: usize, seed: u64) -> Operator {
    assert!(d > 0, "dimension must be positive");
    let mut rng = rng::seeded(seed);
    let mut ginibre = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            ginibre[(i, j)] = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Operator::from_nalgebra(&q)
}

/// Random mixed state `G G† / tr(G G†)` with `G` complex Ginibre.
pub fn random_state(d: usize, seed: u64) -> Operator {
    let mut rng = rng::seeded(seed);
    let g = Operator::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let rho = &g * &g.adjoint();
    let t = rho.trace().re;
    rho.scale_real(1.0 / t)
}

/// Random pure state as a ket.
pub fn random_pure_ket(d: usize, seed: u64) -> Operator {
    haar_random_unitary(d, seed).column(0)
}

/// Random Hermitian operator with Gaussian entries.
pub fn random_hermitian(d: usize, seed: u64) -> Operator {
    let mut rng = rng::seeded(seed);
    let g = Operator::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Random complex operator with Gaussian entries.
pub fn random_operator(rows: usize, cols: usize, seed: u64) -> Operator {
    let mut rng = rng::seeded(seed);
    Operator::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    })
}

/// Complete a set of orthonormal columns to a `dim × dim` unitary.
///
/// `fixed` pins column `j` to the given vector. Free columns are filled in
/// ascending order with the first standard basis vectors whose component
/// orthogonal to everything placed so far is large enough; the orthogonal
/// projection is applied twice (reorthogonalised Gram–Schmidt).
pub fn complete_to_unitary(dim: usize, fixed: &[(usize, Operator)]) -> Result<Operator> {
    let mut columns: Vec<Option<Vec<C64>>> = vec![None; dim];
    for (j, v) in fixed {
        if *j >= dim {
            return Err(Error::dims(format!("column {j} out of range for dimension {dim}")));
        }
        if v.shape() != (dim, 1) {
            return Err(Error::dims(format!("column {j} has shape {:?}, expected ({dim}, 1)", v.shape())));
        }
        if columns[*j].is_some() {
            return Err(Error::invalid(format!("column {j} pinned twice")));
        }
        columns[*j] = Some(v.data().to_vec());
    }
    let mut basis: Vec<Vec<C64>> = columns.iter().flatten().cloned().collect();
    // The fixed columns must already be orthonormal.
    for (a, u) in basis.iter().enumerate() {
        for (b, v) in basis.iter().enumerate() {
            let ip: C64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
            let expected = if a == b { ONE } else { ZERO };
            if (ip - expected).norm() > STRUCTURAL_TOL {
                return Err(Error::invalid("pinned columns are not orthonormal"));
            }
        }
    }
    // Some standard vector always has residual² ≥ 1/dim, so this threshold
    // is always met by at least one candidate.
    let threshold = 0.5 / dim as f64;
    let mut candidate = 0usize;
    for slot in columns.iter_mut().filter(|c| c.is_none()) {
        loop {
            if candidate >= dim {
                return Err(Error::invalid("could not complete the column set"));
            }
            let mut v = vec![ZERO; dim];
            v[candidate] = ONE;
            candidate += 1;
            for _ in 0..2 {
                for u in &basis {
                    let ip: C64 = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= ip * ui;
                    }
                }
            }
            let norm_sqr: f64 = v.iter().map(C64::norm_sqr).sum();
            if norm_sqr > threshold {
                let inv = 1.0 / norm_sqr.sqrt();
                v.iter_mut().for_each(|z| *z *= inv);
                basis.push(v.clone());
                *slot = Some(v);
                break;
            }
        }
    }
    Ok(Operator::from_fn(dim, dim, |i, j| columns[j].as_ref().expect("filled")[i]))
}

/// Unitary that reorders subsystems: factor `perm[k]` of the input lands in
/// position `k` of the output.
pub fn permutation_operator(dims: &DimsPartition, perm: &[usize]) -> Result<Operator> {
    let n = dims.len();
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::invalid(format!("{perm:?} is not a permutation of {n} factors")));
    }
    let out_dims = DimsPartition::new(perm.iter().map(|&p| dims.factors()[p]).collect())?;
    let total = dims.total();
    let mut m = Operator::zeros(total, total);
    for input in 0..total {
        let digits = dims.decode(input);
        let permuted: Vec<usize> = perm.iter().map(|&p| digits[p]).collect();
        m.set(out_dims.encode(&permuted), input, ONE);
    }
    Ok(m)
}
