//! The parametrized observable `M = Σ λ_i U†(𝟙 ⊗ |i⟩⟨i|)U` that measures the
//! last `m` qubits after a circuit, plus explicit spectral observables and the
//! ancilla embedding.

use num_complex::Complex64 as C64;

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::linalg::{kron, kron_vec, DenseMatrix};
use crate::states::State;

/// Probabilities below this are reported as exactly zero.
pub const PROB_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamObservable {
    circuit: Circuit,
    m: usize,
    lambdas: Vec<f64>,
}

impl ParamObservable {
    pub fn new(circuit: Circuit, m: usize, lambdas: Vec<f64>) -> Result<Self> {
        if m < 1 || m > circuit.n() {
            return Err(Error::InvalidArgument(format!(
                "measured-qubit count {m} outside 1..={}",
                circuit.n()
            )));
        }
        if lambdas.len() != 1 << m {
            return Err(Error::DimensionMismatch { expected: 1 << m, found: lambdas.len() });
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("eigenvalues must be finite".into()));
        }
        Ok(Self { circuit, m, lambdas })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn with_lambdas(&self, lambdas: Vec<f64>) -> Result<Self> {
        Self::new(self.circuit.clone(), self.m, lambdas)
    }

    pub fn probabilities(&self, theta: &[f64], state: &State) -> Result<Vec<f64>> {
        let d = self.circuit.dim();
        if state.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: state.dim() });
        }
        let diag = match state {
            State::Pure(psi) => {
                let mut v = psi.clone();
                self.circuit.apply(theta, &mut v)?;
                v.iter().map(|a| a.norm_sqr()).collect()
            }
            State::Mixed(rho) => {
                let u = self.circuit.unitary(theta)?;
                rotated_diagonal(&u, rho)
            }
        };
        Ok(outcome_probabilities(&diag, self.m))
    }

    pub fn expectation(&self, theta: &[f64], state: &State) -> Result<f64> {
        Ok(expectation_from(&self.probabilities(theta, state)?, &self.lambdas))
    }

    pub fn variance(&self, theta: &[f64], state: &State) -> Result<f64> {
        Ok(variance_from(&self.probabilities(theta, state)?, &self.lambdas))
    }

    /// Explicit projectors `Λ_i = U†(𝟙 ⊗ |i⟩⟨i|)U`.
    pub fn matrix(&self, theta: &[f64]) -> Result<SpectralObservable> {
        let u = self.circuit.unitary(theta)?;
        let d = u.dim();
        let outcomes = 1usize << self.m;
        let mask = outcomes - 1;
        let mut projectors = Vec::with_capacity(outcomes);
        for i in 0..outcomes {
            // Λ_i = Σ_{k: k&mask = i} (row k of U)† (row k of U).
            let mut p = DenseMatrix::zeros(d);
            for k in (0..d).filter(|k| k & mask == i) {
                let row = u.row(k);
                for a in 0..d {
                    let ra = row[a].conj();
                    if ra == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for b in 0..d {
                        p[(a, b)] += ra * row[b];
                    }
                }
            }
            projectors.push(p);
        }
        SpectralObservable::new(self.lambdas.clone(), projectors)
    }
}

/// `diag(U·ρ·U†)`.
pub fn rotated_diagonal(u: &DenseMatrix, rho: &DenseMatrix) -> Vec<f64> {
    let ur = u.matmul(rho);
    let d = u.dim();
    (0..d)
        .map(|k| {
            let (a, b) = (ur.row(k), u.row(k));
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<C64>().re
        })
        .collect()
}

/// Sums basis probabilities into outcomes of the last `m` qubits and clamps
/// values below [`PROB_FLOOR`] to zero.
pub fn outcome_probabilities(diag: &[f64], m: usize) -> Vec<f64> {
    let mask = (1usize << m) - 1;
    let mut p = vec![0.0; 1 << m];
    for (k, &x) in diag.iter().enumerate() {
        p[k & mask] += x;
    }
    for x in &mut p {
        if *x < PROB_FLOOR {
            *x = 0.0;
        }
    }
    p
}

pub fn expectation_from(p: &[f64], lambdas: &[f64]) -> f64 {
    p.iter().zip(lambdas).map(|(a, b)| a * b).sum()
}

/// `Σ p λ² − (Σ p λ)²`, clipped at zero.
pub fn variance_from(p: &[f64], lambdas: &[f64]) -> f64 {
    let mean = expectation_from(p, lambdas);
    let second: f64 = p.iter().zip(lambdas).map(|(a, b)| a * b * b).sum();
    (second - mean * mean).max(0.0)
}

/// `M = Σ λ_i Λ_i` with explicit orthogonal projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralObservable {
    pub lambdas: Vec<f64>,
    pub projectors: Vec<DenseMatrix>,
}

impl SpectralObservable {
    pub fn new(lambdas: Vec<f64>, projectors: Vec<DenseMatrix>) -> Result<Self> {
        if lambdas.len() != projectors.len() || projectors.is_empty() {
            return Err(Error::DimensionMismatch { expected: lambdas.len(), found: projectors.len() });
        }
        let d = projectors[0].dim();
        if let Some(p) = projectors.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        Ok(Self { lambdas, projectors })
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    /// Largest deviation from `Λ_iΛ_j = δ_ij Λ_i` and `Σ Λ_i = 𝟙`.
    pub fn projector_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        let mut sum = DenseMatrix::zeros(d);
        for (i, a) in self.projectors.iter().enumerate() {
            sum = &sum + a;
            for (j, b) in self.projectors.iter().enumerate().skip(i) {
                let prod = a.matmul(b);
                let target = if i == j { a.clone() } else { DenseMatrix::zeros(d) };
                worst = worst.max(prod.max_diff(&target));
            }
        }
        worst.max(sum.max_diff(&DenseMatrix::identity(d)))
    }

    pub fn matrix(&self) -> DenseMatrix {
        let d = self.dim();
        self.projectors
            .iter()
            .zip(&self.lambdas)
            .fold(DenseMatrix::zeros(d), |acc, (p, &l)| &acc + &p.scale_real(l))
    }

    pub fn probabilities(&self, state: &State) -> Vec<f64> {
        self.projectors.iter().map(|p| state.expectation(p).re).collect()
    }

    pub fn expectation(&self, state: &State) -> f64 {
        expectation_from(&self.probabilities(state), &self.lambdas)
    }

    /// `Tr(M²ρ) − Tr(Mρ)²` computed from the dense matrix.
    pub fn variance(&self, state: &State) -> f64 {
        let m = self.matrix();
        let mean = state.expectation(&m).re;
        let second = state.expectation(&m.matmul(&m)).re;
        (second - mean * mean).max(0.0)
    }
}

/// `ρ ⊗ |0⟩⟨0|^{⊗m_a}` with the ancillas as least-significant qubits.
pub fn naimark_embed(rho: &DenseMatrix, m_a: usize) -> Result<DenseMatrix> {
    if m_a < 1 {
        return Err(Error::InvalidArgument("at least one ancilla is required".into()));
    }
    let mut zero = DenseMatrix::zeros(1 << m_a);
    zero[(0, 0)] = C64::new(1.0, 0.0);
    Ok(kron(rho, &zero))
}

/// Vector form of [`naimark_embed`].
pub fn naimark_embed_vector(psi: &[C64], m_a: usize) -> Result<Vec<C64>> {
    if m_a < 1 {
        return Err(Error::InvalidArgument("at least one ancilla is required".into()));
    }
    let mut zero = vec![C64::new(0.0, 0.0); 1 << m_a];
    zero[0] = C64::new(1.0, 0.0);
    Ok(kron_vec(psi, &zero))
}

pub fn naimark_embed_state(state: &State, m_a: usize) -> Result<State> {
    Ok(match state {
        State::Pure(v) => State::Pure(naimark_embed_vector(v, m_a)?),
        State::Mixed(m) => State::Mixed(naimark_embed(m, m_a)?),
    })
}
