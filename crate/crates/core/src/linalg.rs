//! Dense complex linear algebra for small qubit registers.
//!
//! Everything here is dense and immutable. Multi-qubit indices follow the
//! plain Kronecker convention: in `a ⊗ b` the index of `a` is the more
//! significant block, so qubit slot 0 is the most significant bit of a basis
//! index and the last slot varies fastest.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RspError};

pub type C64 = Complex64;

/// Tolerance for normalization, unitarity and Hermiticity checks.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Returns `log2(dim)` when `dim` is a power of two.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(RspError::NotPowerOfTwo(dim))
    }
}

/// Kronecker product.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Tensor product of a non-empty sequence, left to right.
pub fn tensor_all<'a, T: Tensor + Clone + 'a>(items: impl IntoIterator<Item = &'a T>) -> Option<T> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, x| acc.tensor(x)))
}

// ---------------------------------------------------------------------------
// State vectors
// ---------------------------------------------------------------------------

/// A normalized pure state.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps `amps`, rejecting vectors whose squared norm is not 1 within
    /// [`NORM_TOL`].
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(RspError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let n2 = norm_sqr(&amps);
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(RspError::NotNormalized(n2));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm. Fails on the zero vector.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n2 = norm_sqr(&amps);
        if amps.is_empty() || n2 <= f64::MIN_POSITIVE {
            return Err(RspError::NotNormalized(n2));
        }
        let inv = 1.0 / n2.sqrt();
        amps.iter_mut().for_each(|a| *a *= inv);
        Ok(Self { amps })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index⟩` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    pub(crate) fn from_raw(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.amps, &other.amps)
    }

    /// Largest imaginary part in magnitude.
    pub fn max_imag(&self) -> f64 {
        self.amps.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }

    /// Multiplies by the unit phase that makes the largest-magnitude
    /// amplitude real and positive.
    pub fn canonical_phase(&self) -> Self {
        let pivot = self
            .amps
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(ONE);
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        self.scaled(pivot.conj() / pivot.norm())
    }

    /// Outer product `|self⟩⟨self|`.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.amps[i]
    }
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Self { amps }
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(RspError::DimensionMismatch { expected, found })
    }
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major real entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a matrix whose rows are the given vectors.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.cols, other.rows)?;
        let mut m = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    m.data[r * other.cols + c] += a * other.data[k * other.cols + c];
                }
            }
        }
        Ok(m)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    /// Block-diagonal sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut m = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self[(r, c)];
            }
        }
        for r in 0..other.rows {
            for c in 0..other.cols {
                m[(self.rows + r, self.cols + c)] = other[(r, c)];
            }
        }
        m
    }

    /// Largest entrywise distance; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        max_abs_diff(&self.data, &other.data)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: C64 = (0..n).map(|k| self[(k, i)].conj() * self[(k, j)]).sum();
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let d = self.unitarity_defect();
        if d <= NORM_TOL {
            Ok(())
        } else {
            Err(RspError::NotUnitary(d))
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }

    /// Real parts in row-major order, one `Vec` per row.
    pub fn real_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|a| a.re).collect())
            .collect()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Tensor for ComplexMatrix {
    fn tensor(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        m[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        m
    }
}

/// Pauli and related single-qubit matrices.
pub mod gates {
    use super::{ComplexMatrix, C64, ONE, ZERO};

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
    }

    pub fn pauli_y() -> ComplexMatrix {
        let i = C64::new(0.0, 1.0);
        ComplexMatrix::from_vec(2, 2, vec![ZERO, -i, i, ZERO]).unwrap()
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![ONE, ZERO, ZERO, -ONE]).unwrap()
    }

    /// `−iσ_y = [[0, −1], [1, 0]]`, a real rotation by π/2.
    pub fn minus_i_sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]).unwrap()
    }
}

/// Splits `m` into `a ⊗ b` with `a` of size `left × left`, if `m` is a
/// Kronecker product within `tol`.
///
/// The scale is fixed so that `a` has Frobenius norm `√left` and its first
/// nonzero entry (row-major) is real and positive.
pub fn kron_factor(
    m: &ComplexMatrix,
    left: usize,
    tol: f64,
) -> Option<(ComplexMatrix, ComplexMatrix)> {
    if !m.is_square() || left == 0 || !m.rows().is_multiple_of(left) {
        return None;
    }
    let right = m.rows() / left;
    // block (i, j) of size right×right is a[i][j] * b
    let block = |i: usize, j: usize, r: usize, c: usize| m[(i * right + r, j * right + c)];
    let (mut pi, mut pj, mut pr, mut pc, mut best) = (0, 0, 0, 0, 0.0);
    for i in 0..left {
        for j in 0..left {
            for r in 0..right {
                for c in 0..right {
                    let v = block(i, j, r, c).norm();
                    if v > best {
                        (pi, pj, pr, pc, best) = (i, j, r, c, v);
                    }
                }
            }
        }
    }
    if best == 0.0 {
        return None;
    }
    let pivot = block(pi, pj, pr, pc);
    let mut a = ComplexMatrix::zeros(left, left);
    for i in 0..left {
        for j in 0..left {
            a[(i, j)] = block(i, j, pr, pc);
        }
    }
    let mut b = ComplexMatrix::zeros(right, right);
    for r in 0..right {
        for c in 0..right {
            b[(r, c)] = block(pi, pj, r, c) / pivot;
        }
    }
    let fro = a.data().iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let lead = a
        .data()
        .iter()
        .copied()
        .find(|x| x.norm() > tol)
        .unwrap_or(ONE);
    let scale = C64::from_polar((left as f64).sqrt() / fro, -lead.arg());
    let a = a.scaled(scale);
    let b = b.scaled(scale.inv());
    if a.tensor(&b).max_abs_diff(m) <= tol {
        Some((a, b))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Operator application
// ---------------------------------------------------------------------------

/// `M·v` for a square `M`.
pub fn apply(m: &ComplexMatrix, v: &StateVector) -> Result<StateVector> {
    if !m.is_square() {
        return Err(RspError::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    Ok(StateVector::from_raw(m.mul_vec(v.amplitudes())?))
}

fn validate_slots(slots: &[usize], qubits: usize) -> Result<()> {
    for (i, &s) in slots.iter().enumerate() {
        if s >= qubits {
            return Err(RspError::InvalidSlots(format!(
                "slot {s} out of range for {qubits} qubits"
            )));
        }
        if slots[..i].contains(&s) {
            return Err(RspError::InvalidSlots(format!("slot {s} listed twice")));
        }
    }
    Ok(())
}

/// Applies `m` to the qubits named by `slots`, identity elsewhere.
///
/// `slots[0]` is the most significant qubit of `m`'s index space.
pub fn apply_on_slots(m: &ComplexMatrix, v: &StateVector, slots: &[usize]) -> Result<StateVector> {
    let qubits = qubit_count(v.dim())?;
    validate_slots(slots, qubits)?;
    let k = slots.len();
    if !m.is_square() || m.rows() != 1 << k {
        return Err(RspError::DimensionMismatch {
            expected: 1 << k,
            found: m.rows(),
        });
    }
    let masks: Vec<usize> = slots.iter().map(|&s| 1 << (qubits - 1 - s)).collect();
    let slot_mask: usize = masks.iter().sum();
    let sub = 1usize << k;
    // offset[j] is the bit pattern of local index j spread over the slots
    let offsets: Vec<usize> = (0..sub)
        .map(|j| {
            masks
                .iter()
                .enumerate()
                .filter(|(bit, _)| j & (1 << (k - 1 - bit)) != 0)
                .map(|(_, &m)| m)
                .sum()
        })
        .collect();

    let src = v.amplitudes();
    let mut out = vec![ZERO; src.len()];
    let mut gathered = vec![ZERO; sub];
    for base in (0..src.len()).filter(|b| b & slot_mask == 0) {
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = src[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            out[base | off] = m.row(r).iter().zip(&gathered).map(|(a, b)| a * b).sum();
        }
    }
    Ok(StateVector::from_raw(out))
}

/// `|⟨a|b⟩|²`, insensitive to the global phase of either argument.
pub fn fidelity_global_phase(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues ≥ −1e-10).
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(RspError::InvalidDensityMatrix("not square".into()));
        }
        let herm = m.max_abs_diff(&m.adjoint());
        if herm > NORM_TOL {
            return Err(RspError::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr: C64 = (0..m.rows()).map(|i| m[(i, i)]).sum();
        if (tr - ONE).norm() > NORM_TOL {
            return Err(RspError::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let shifted = {
            let mut s = m.clone();
            for i in 0..s.rows() {
                s[(i, i)] += NORM_TOL;
            }
            s
        };
        if !cholesky_succeeds(&shifted) {
            return Err(RspError::InvalidDensityMatrix("negative eigenvalue".into()));
        }
        Ok(Self { m })
    }

    pub fn from_pure(v: &StateVector) -> Self {
        let n = v.dim();
        let a = v.amplitudes();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = a[i] * a[j].conj();
            }
        }
        Self { m }
    }

    /// Maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(dim).scaled(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.m[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m.max_abs_diff(&other.m)
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.m.fmt(f)
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            m: self.m.tensor(&other.m),
        }
    }
}

/// Complex Cholesky attempt; succeeds iff the Hermitian input is positive definite.
fn cholesky_succeeds(a: &ComplexMatrix) -> bool {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    true
}

/// Reduced density matrix on the `keep` slots of an `qubits`-qubit state.
///
/// Kept slots appear in ascending slot order in the result.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize], qubits: usize) -> Result<DensityMatrix> {
    let dim = rho.dim();
    if qubit_count(dim)? != qubits {
        return Err(RspError::DimensionMismatch {
            expected: 1 << qubits,
            found: dim,
        });
    }
    validate_slots(keep, qubits)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..qubits).filter(|s| !keep.contains(s)).collect();

    let spread = |pattern: usize, slots: &[usize]| -> usize {
        let n = slots.len();
        slots
            .iter()
            .enumerate()
            .filter(|(i, _)| pattern & (1 << (n - 1 - i)) != 0)
            .map(|(_, &s)| 1usize << (qubits - 1 - s))
            .sum()
    };
    let keep_off: Vec<usize> = (0..1usize << keep.len())
        .map(|p| spread(p, &keep))
        .collect();
    let trace_off: Vec<usize> = (0..1usize << traced.len())
        .map(|p| spread(p, &traced))
        .collect();

    let dk = keep_off.len();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for (i, &ki) in keep_off.iter().enumerate() {
        for (j, &kj) in keep_off.iter().enumerate() {
            out[(i, j)] = trace_off.iter().map(|&t| rho.m[(ki | t, kj | t)]).sum();
        }
    }
    Ok(DensityMatrix { m: out })
}

/// `tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.m.data().iter().map(|a| a.norm_sqr()).sum()
}
