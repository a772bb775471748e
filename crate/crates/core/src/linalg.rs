//! Dense complex linear algebra for small quantum systems.
//!
//! Everything here works on square row-major matrices of dimension up to a
//! few thousand. Qubit ordering follows the big-endian convention: qubit 0 is
//! the most significant bit of a basis index, so the last qubits of a register
//! are its least significant bits.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Absolute max-norm tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Magnitude below which a vector component does not count as "first nonzero"
/// when fixing eigenvector phases.
pub const PHASE_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Square complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; `data.len()` must be a perfect square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = *v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let c: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        Self::diag(&c)
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        assert_eq!(a.len(), b.len(), "outer product of vectors of different length");
        Self::from_fn(a.len(), |i, j| a[i] * b[j].conj())
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i * self.dim + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        for (i, c) in col.iter().enumerate() {
            self.data[i * self.dim + j] = *c;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.data[j * self.dim + i].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance to `other`.
    pub fn max_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm of `A − A†`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let diff = (self.data[i * d + j] - self.data[j * d + i].conj()).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL
    }

    /// `(A + A†)/2`.
    pub fn symmetrized(&self) -> Self {
        let d = self.dim;
        Self::from_fn(d, |i, j| (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5)
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|x| x.im == 0.0)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * d..(k + 1) * d];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix { dim: d, data: out }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "matrix-vector dimension mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        inner(v, &self.apply(v))
    }

    /// `Tr(A·B)` without forming the product.
    pub fn trace_product(&self, other: &DenseMatrix) -> C64 {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.data[i * d + k] * other.data[k * d + i];
            }
        }
        acc
    }

    pub fn commutator(&self, other: &DenseMatrix) -> DenseMatrix {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &DenseMatrix) -> DenseMatrix {
        &self.matmul(other) + &other.matmul(self)
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.data[i * self.dim + j])
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim.min(16) {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .take(16)
                .map(|c| format!("{:+.4}{:+.4}i", c.re, c.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim);
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim);
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

// ---------------------------------------------------------------------------
// vectors

/// `⟨a|b⟩`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len(), "inner product of vectors of different length");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Vec<C64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Rotates `v` so that its first component with magnitude above [`PHASE_TOL`]
/// is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    if let Some(c) = v.iter().find(|c| c.norm() > PHASE_TOL).copied() {
        let phase = c.conj() / c.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Number of qubits `n` with `2^n == dim`.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

// ---------------------------------------------------------------------------
// tensor products and partial traces

/// Kronecker product: `(A⊗B)[(i·dB + k), (j·dB + l)] = A[i,j]·B[k,l]`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (da, db) = (a.dim, b.dim);
    let d = da * db;
    let mut out = vec![ZERO; d * d];
    for i in 0..da {
        for j in 0..da {
            let aij = a.data[i * da + j];
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                let row = (i * db + k) * d + j * db;
                for l in 0..db {
                    out[row + l] = aij * b.data[k * db + l];
                }
            }
        }
    }
    DenseMatrix { dim: d, data: out }
}

/// Traces out the qubits listed in `discard` (0-based, qubit 0 most significant)
/// from an `n`-qubit operator. Remaining qubits keep their relative order.
pub fn partial_trace(a: &DenseMatrix, n: usize, discard: &[usize]) -> Result<DenseMatrix> {
    if a.dim != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: a.dim });
    }
    let mut discard_mask = 0usize;
    for &q in discard {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
        discard_mask |= 1 << (n - 1 - q);
    }
    let keep_bits: Vec<usize> = (0..n)
        .map(|q| n - 1 - q)
        .filter(|b| discard_mask & (1 << b) == 0)
        .collect();
    let traced_bits: Vec<usize> = (0..n)
        .map(|q| n - 1 - q)
        .filter(|b| discard_mask & (1 << b) != 0)
        .collect();

    // Scatter a compact index over the listed bit positions (most significant first).
    let scatter = |compact: usize, bits: &[usize]| -> usize {
        let len = bits.len();
        bits.iter()
            .enumerate()
            .filter(|(pos, _)| compact & (1 << (len - 1 - pos)) != 0)
            .fold(0usize, |acc, (_, b)| acc | (1 << b))
    };

    let dk = 1usize << keep_bits.len();
    let dt = 1usize << traced_bits.len();
    let keep_idx: Vec<usize> = (0..dk).map(|c| scatter(c, &keep_bits)).collect();
    let traced_idx: Vec<usize> = (0..dt).map(|c| scatter(c, &traced_bits)).collect();

    let mut out = DenseMatrix::zeros(dk);
    for (ri, &ki) in keep_idx.iter().enumerate() {
        for (rj, &kj) in keep_idx.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_idx {
                acc += a[(ki | t, kj | t)];
            }
            out[(ri, rj)] = acc;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hermitian spectral routines

/// Eigendecomposition of a Hermitian matrix.
///
/// `values` ascend; column `k` of `vectors` is the eigenvector for `values[k]`,
/// phase-fixed by [`fix_phase`].
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V·diag(f(values))·V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> C64) -> DenseMatrix {
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        self.reconstruct(&fv)
    }

    /// `V·diag(fv)·V†`.
    pub fn reconstruct(&self, fv: &[C64]) -> DenseMatrix {
        let d = self.values.len();
        let v = &self.vectors;
        let mut out = DenseMatrix::zeros(d);
        for k in 0..d {
            if fv[k] == ZERO {
                continue;
            }
            for i in 0..d {
                let vik = v[(i, k)] * fv[k];
                if vik == ZERO {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Hermitian eigendecomposition. The input is symmetrized before solving.
pub fn herm_eig(a: &DenseMatrix) -> Result<EigenSystem> {
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let sym = a.symmetrized();
    let d = sym.dim;

    let (raw_values, raw_vectors): (Vec<f64>, DenseMatrix) = if sym.is_real() {
        let m = DMatrix::from_fn(d, d, |i, j| sym[(i, j)].re);
        let eig = m.symmetric_eigen();
        let vecs = DenseMatrix::from_fn(d, |i, j| C64::new(eig.eigenvectors[(i, j)], 0.0));
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let eig = sym.to_nalgebra().symmetric_eigen();
        let vecs = DenseMatrix::from_fn(d, |i, j| eig.eigenvectors[(i, j)]);
        (eig.eigenvalues.iter().copied().collect(), vecs)
    };

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| raw_values[x].total_cmp(&raw_values[y]));

    let mut vectors = DenseMatrix::zeros(d);
    let mut values = Vec::with_capacity(d);
    for (k, &src) in order.iter().enumerate() {
        values.push(raw_values[src]);
        let mut col = raw_vectors.column(src);
        fix_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(EigenSystem { values, vectors })
}

/// Applies a scalar function to a Hermitian matrix through its spectrum.
/// `f` returns `None` where it is undefined.
pub fn herm_fn(a: &DenseMatrix, f: impl Fn(f64) -> Option<C64>) -> Result<DenseMatrix> {
    let eig = herm_eig(a)?;
    let mut fv = Vec::with_capacity(eig.values.len());
    for &x in &eig.values {
        fv.push(f(x).ok_or(Error::FunctionUndefined(x))?);
    }
    Ok(eig.reconstruct(&fv))
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// `[-tol, 0)` are clipped to zero; anything more negative is an error.
pub fn herm_sqrt(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    herm_fn(a, |x| {
        if x >= 0.0 {
            Some(C64::new(x.sqrt(), 0.0))
        } else if x >= -tol {
            Some(ZERO)
        } else {
            None
        }
    })
}

/// `exp(−iθA)` for Hermitian `A`.
pub fn herm_exp_i(a: &DenseMatrix, theta: f64) -> Result<DenseMatrix> {
    herm_fn(a, |x| Some(C64::from_polar(1.0, -theta * x)))
}

/// Solves `AX + XA = B` for strictly positive Hermitian `A` and Hermitian `B`,
/// working in the eigenbasis of `A`.
pub fn solve_lyapunov(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
    }
    let defect = b.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let eig = herm_eig(a)?;
    let min = eig.values[0];
    if min <= 1e-12 {
        return Err(Error::NotPositive(min));
    }
    let v = &eig.vectors;
    let vd = v.adjoint();
    let bt = vd.matmul(b).matmul(v);
    let d = a.dim;
    let xt = DenseMatrix::from_fn(d, |i, j| bt[(i, j)] / (eig.values[i] + eig.values[j]));
    Ok(v.matmul(&xt).matmul(&vd).symmetrized())
}

/// Single-qubit Pauli matrices.
pub mod pauli {
    use super::*;

    pub fn x() -> DenseMatrix {
        DenseMatrix::from_vec(vec![ZERO, ONE, ONE, ZERO]).unwrap()
    }

    pub fn y() -> DenseMatrix {
        DenseMatrix::from_vec(vec![ZERO, -I, I, ZERO]).unwrap()
    }

    pub fn z() -> DenseMatrix {
        DenseMatrix::diag_real(&[1.0, -1.0])
    }
}
