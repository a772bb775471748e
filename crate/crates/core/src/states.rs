//! Labeled quantum states: mixtures, GHZ vectors, ground states, fidelity.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, herm_sqrt, inner, norm, DenseMatrix, ZERO};

/// Eigenvalues of density matrices may dip this far below zero before they
/// count as invalid.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;

/// A pure or mixed state.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(Vec<C64>),
    Mixed(DenseMatrix),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(v) => v.len(),
            State::Mixed(m) => m.dim(),
        }
    }

    pub fn to_density(&self) -> DenseMatrix {
        match self {
            State::Pure(v) => DenseMatrix::projector(v),
            State::Mixed(m) => m.clone(),
        }
    }

    /// `Tr(A·ρ)`.
    pub fn expectation(&self, a: &DenseMatrix) -> C64 {
        match self {
            State::Pure(v) => a.expectation(v),
            State::Mixed(m) => a.trace_product(m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            State::Pure(v) => {
                let n = norm(v);
                if (n - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!("state vector has norm {n}")));
                }
            }
            State::Mixed(m) => validate_density(m)?,
        }
        Ok(())
    }
}

/// A state together with its real regression label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledState {
    pub state: State,
    pub label: f64,
}

impl LabeledState {
    pub fn new(state: State, label: f64) -> Self {
        Self { state, label }
    }
}

/// Checks unit trace, Hermiticity and positivity (up to [`NEGATIVE_EIGEN_TOL`]).
pub fn validate_density(rho: &DenseMatrix) -> Result<()> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("density matrix has trace {tr}")));
    }
    let eig = herm_eig(rho)?;
    if eig.values[0] < -NEGATIVE_EIGEN_TOL {
        return Err(Error::NotPositive(eig.values[0]));
    }
    Ok(())
}

/// `α·ρ₁ + (1−α)·ρ₂`.
pub fn mixture_state(alpha: f64, rho1: &DenseMatrix, rho2: &DenseMatrix) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange { alpha, lo: 0.0, hi: 1.0 });
    }
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch { expected: rho1.dim(), found: rho2.dim() });
    }
    Ok(&rho1.scale_real(alpha) + &rho2.scale_real(1.0 - alpha))
}

/// `r·|v₁⟩⟨v₁| + (1−r)·|v₂⟩⟨v₂|` for orthonormal `v₁`, `v₂`.
pub fn rank2_state(r: f64, v1: &[C64], v2: &[C64]) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("weight r = {r} outside [0, 1]")));
    }
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch { expected: v1.len(), found: v2.len() });
    }
    let overlap = inner(v1, v2).norm();
    if overlap > 1e-10 {
        return Err(Error::NotOrthogonal(overlap));
    }
    Ok(&DenseMatrix::projector(v1).scale_real(r) + &DenseMatrix::projector(v2).scale_real(1.0 - r))
}

/// `(|0…0⟩ ± |1…1⟩)/√2` on `n` qubits; `plus` selects the sign.
pub fn ghz(n: usize, plus: bool) -> Vec<C64> {
    assert!(n >= 1, "GHZ state needs at least one qubit");
    let d = 1usize << n;
    let s = 1.0 / 2f64.sqrt();
    let mut v = vec![ZERO; d];
    v[0] = C64::new(s, 0.0);
    v[d - 1] = C64::new(if plus { s } else { -s }, 0.0);
    v
}

/// Uhlmann fidelity `Tr√(√ρ·τ·√ρ)`.
pub fn fidelity(rho: &DenseMatrix, tau: &DenseMatrix) -> Result<f64> {
    if rho.dim() != tau.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: tau.dim() });
    }
    let sr = herm_sqrt(&rho.symmetrized(), NEGATIVE_EIGEN_TOL)?;
    let inner_m = sr.matmul(&tau.symmetrized()).matmul(&sr).symmetrized();
    let eig = herm_eig(&inner_m)?;
    // Eigenvalues at rounding level would contribute O(√ε) to the sum.
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let noise = 64.0 * f64::EPSILON * rho.dim() as f64 * top.max(1e-300);
    let mut f = 0.0;
    for &x in &eig.values {
        if x < -NEGATIVE_EIGEN_TOL {
            return Err(Error::NotPositive(x));
        }
        if x > noise {
            f += x.sqrt();
        }
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Fidelity between two states, using the cheap closed forms when one or both
/// are pure.
pub fn state_fidelity(a: &State, b: &State) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    match (a, b) {
        (State::Pure(x), State::Pure(y)) => Ok(inner(x, y).norm().min(1.0)),
        (State::Pure(x), State::Mixed(m)) | (State::Mixed(m), State::Pure(x)) => {
            Ok(m.expectation(x).re.max(0.0).sqrt().min(1.0))
        }
        (State::Mixed(x), State::Mixed(y)) => fidelity(x, y),
    }
}

/// Lowest eigenvector of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub vector: Vec<C64>,
    pub energy: f64,
    /// Gap to the next eigenvalue.
    pub gap: f64,
    /// Set when the gap is below `1e-10`; the returned vector is then just the
    /// lowest-index member of the ground space.
    pub degenerate: bool,
}

pub const DEGENERACY_GAP: f64 = 1e-10;

pub fn ground_state(h: &DenseMatrix) -> Result<GroundState> {
    let eig = herm_eig(h)?;
    let gap = if eig.values.len() > 1 { eig.values[1] - eig.values[0] } else { f64::INFINITY };
    Ok(GroundState {
        vector: eig.vector(0),
        energy: eig.values[0],
        gap,
        degenerate: gap < DEGENERACY_GAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, pauli};
    use crate::random::{random_density, random_unit_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mixture_endpoints_and_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r1 = random_density(&mut rng, 4);
        let r2 = random_density(&mut rng, 4);
        assert!(mixture_state(0.0, &r1, &r2).unwrap().max_diff(&r2) < 1e-15);
        assert!(mixture_state(1.0, &r1, &r2).unwrap().max_diff(&r1) < 1e-15);
        let zero = DenseMatrix::projector(&basis_vector(2, 0));
        let mixed = DenseMatrix::identity(2).scale_real(0.5);
        let m = mixture_state(0.5, &zero, &mixed).unwrap();
        assert!(m.max_diff(&DenseMatrix::diag_real(&[0.75, 0.25])) < 1e-15);
        assert!(mixture_state(1.1, &r1, &r2).is_err());
    }

    #[test]
    fn mixture_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r1 = random_density(&mut rng, 4);
        let r2 = random_density(&mut rng, 4);
        let s0 = mixture_state(0.0, &r1, &r2).unwrap();
        let s1 = mixture_state(1.0, &r1, &r2).unwrap();
        for k in 0..=10 {
            let a = k as f64 / 10.0;
            let direct = mixture_state(a, &r1, &r2).unwrap();
            let affine = &s1.scale_real(a) + &s0.scale_real(1.0 - a);
            assert!(direct.max_diff(&affine) < 1e-14);
        }
    }

    #[test]
    fn rank2_cases() {
        let p = ghz(5, true);
        let m = ghz(5, false);
        let full = rank2_state(1.0, &p, &m).unwrap();
        assert!(full.max_diff(&DenseMatrix::projector(&p)) < 1e-15);
        let half = rank2_state(0.5, &p, &m).unwrap();
        let span = &DenseMatrix::projector(&p) + &DenseMatrix::projector(&m);
        assert!(half.max_diff(&span.scale_real(0.5)) < 1e-15);
        let quarter = rank2_state(0.25, &p, &m).unwrap();
        let eig = herm_eig(&quarter).unwrap();
        assert!((eig.values[31] - 0.75).abs() < 1e-12 && (eig.values[30] - 0.25).abs() < 1e-12);
        assert!(matches!(rank2_state(0.5, &p, &p), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn ghz_vectors() {
        let plus1 = ghz(1, true);
        let s = 1.0 / 2f64.sqrt();
        assert!((plus1[0].re - s).abs() < 1e-15 && (plus1[1].re - s).abs() < 1e-15);
        let m3 = ghz(3, false);
        assert!((m3[0].re - s).abs() < 1e-15 && (m3[7].re + s).abs() < 1e-15);
        assert_eq!(m3.iter().filter(|x| x.norm() > 0.0).count(), 2);
        for n in 1..=8 {
            assert!(inner(&ghz(n, true), &ghz(n, false)).norm() < 1e-15);
        }
    }

    #[test]
    fn fidelity_basic_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density(&mut rng, 4);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        let z0 = DenseMatrix::projector(&basis_vector(2, 0));
        let z1 = DenseMatrix::projector(&basis_vector(2, 1));
        assert!(fidelity(&z0, &z1).unwrap().abs() < 1e-10);
        let plus = DenseMatrix::projector(&ghz(1, true));
        assert!((fidelity(&z0, &plus).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_symmetric_and_matches_pure_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_density(&mut rng, 4);
            let b = random_density(&mut rng, 4);
            let f1 = fidelity(&a, &b).unwrap();
            let f2 = fidelity(&b, &a).unwrap();
            assert!((f1 - f2).abs() < 1e-8);
        }
        for _ in 0..100 {
            let x = random_unit_vector(&mut rng, 4);
            let y = random_unit_vector(&mut rng, 4);
            let f = fidelity(&DenseMatrix::projector(&x), &DenseMatrix::projector(&y)).unwrap();
            assert!((f - inner(&x, &y).norm()).abs() < 1e-8);
            let g = state_fidelity(&State::Pure(x.clone()), &State::Mixed(DenseMatrix::projector(&y)))
                .unwrap();
            assert!((g - f).abs() < 1e-8);
        }
    }

    #[test]
    fn ground_state_of_paulis() {
        let g = ground_state(&pauli::z()).unwrap();
        assert!((g.vector[1].re - 1.0).abs() < 1e-14 && g.energy == -1.0);
        let g = ground_state(&pauli::x().scale_real(-1.0)).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((g.vector[0].re - s).abs() < 1e-14 && (g.vector[1].re - s).abs() < 1e-14);
        assert!(!g.degenerate);
        let g = ground_state(&DenseMatrix::identity(2)).unwrap();
        assert!(g.degenerate);
    }

    #[test]
    fn ground_energy_is_variational_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = crate::random::random_hermitian(&mut rng, 8);
        let g = ground_state(&h).unwrap();
        let e = h.expectation(&g.vector).re;
        for _ in 0..100 {
            let v = random_unit_vector(&mut rng, 8);
            assert!(e <= h.expectation(&v).re + 1e-12);
        }
    }
}
