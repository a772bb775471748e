//! Closed forms for the optimal observable of the convex-mixture task
//! `ρ_α = αρ₁ + (1−α)𝟙/2ⁿ` with `ρ₁ = r|v₁⟩⟨v₁| + (1−r)|v₂⟩⟨v₂|`, and
//! brute-force oracles for the optimality of the rank-constrained projectors.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fisher::{density_derivative, qfi_spectral, StateFamily};
use crate::linalg::{basis_vector, herm_eig, inner, norm, solve_lyapunov, DenseMatrix};
use crate::observables::SpectralObservable;
use crate::random::random_unitary;
use crate::states::{ghz, mixture_state, rank2_state, State};

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    n: usize,
    r: f64,
    v1: Vec<C64>,
    v2: Vec<C64>,
}

impl MixtureModel {
    pub fn new(n: usize, r: f64, v1: Vec<C64>, v2: Vec<C64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("need at least one qubit".into()));
        }
        let d = 1usize << n;
        for v in [&v1, &v2] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
            if (norm(v) - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument("mixture vectors must be normalized".into()));
            }
        }
        rank2_state(r, &v1, &v2)?;
        Ok(Self { n, r, v1, v2 })
    }

    /// `v₁ = GHZ₊`, `v₂ = GHZ₋`.
    pub fn ghz(n: usize, r: f64) -> Result<Self> {
        Self::new(n, r, ghz(n, true), ghz(n, false))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn rho1(&self) -> DenseMatrix {
        rank2_state(self.r, &self.v1, &self.v2).expect("validated in constructor")
    }

    pub fn rho2(&self) -> DenseMatrix {
        DenseMatrix::identity(self.dim()).scale_real(1.0 / self.dim() as f64)
    }

    pub fn state(&self, alpha: f64) -> Result<DenseMatrix> {
        mixture_state(alpha, &self.rho1(), &self.rho2())
    }

    pub fn family(&self) -> Result<StateFamily> {
        StateFamily::mixture(self.rho1(), self.rho2())
    }

    /// Orthonormal basis of eigenvectors of `ρ₁` in descending eigenvalue
    /// order: the larger-weight of `v₁`, `v₂`, the other, then a deterministic
    /// completion of the kernel.
    pub fn eigenbasis(&self) -> Vec<Vec<C64>> {
        let (a, b) = if self.r >= 0.5 { (&self.v1, &self.v2) } else { (&self.v2, &self.v1) };
        complete_basis(&[a.clone(), b.clone()])
    }

    /// `[v₁, v₂, kernel…]`, the order the eigenvalues of the full optimum
    /// refer to.
    fn labeled_basis(&self) -> Vec<Vec<C64>> {
        complete_basis(&[self.v1.clone(), self.v2.clone()])
    }
}

/// Extends orthonormal `seed` vectors to a basis by Gram–Schmidt on the
/// computational basis.
fn complete_basis(seed: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let d = seed[0].len();
    let mut out: Vec<Vec<C64>> = seed.to_vec();
    for k in 0..d {
        if out.len() == d {
            break;
        }
        let mut v = basis_vector(d, k);
        for _ in 0..2 {
            for q in &out {
                let c = inner(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    out
}

fn pow2(n: usize) -> f64 {
    (1u64 << n) as f64
}

/// `I_q(ρ_{1/2}) = 4 − 8(r−1)/(2ⁿ(r−1)−1) − 8r/(2ⁿr+1)`.
pub fn qfi_half_closed(n: usize, r: f64) -> f64 {
    let p = pow2(n);
    4.0 - 8.0 * (r - 1.0) / (p * (r - 1.0) - 1.0) - 8.0 * r / (p * r + 1.0)
}

/// Which `D` enters the α-dependent QFI closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiClosedForm {
    /// `D = 1 − 2ⁿ(1 + r)`. Disagrees with the spectral formula.
    AsPrinted,
    /// `D = 1 − 2ⁿ(1 − r)`, which matches the spectral formula.
    Corrected,
}

/// `I_q(ρ_α) = (αDE − 2r(1−D) + 2ⁿ − 1) / ((1−α)(1−αD)(1−αE))`, `E = 1 − 2ⁿr`.
pub fn qfi_closed(alpha: f64, n: usize, r: f64, form: QfiClosedForm) -> f64 {
    let p = pow2(n);
    let d = match form {
        QfiClosedForm::AsPrinted => 1.0 - p * (1.0 + r),
        QfiClosedForm::Corrected => 1.0 - p * (1.0 - r),
    };
    let e = 1.0 - p * r;
    (alpha * d * e - 2.0 * r * (1.0 - d) + p - 1.0) / ((1.0 - alpha) * (1.0 - alpha * d) * (1.0 - alpha * e))
}

/// Eigenvalues of the full-measurement optimum, `[λ₁, λ₂, λ₃, …]` attached
/// to `[v₁, v₂, kernel…]`.
pub fn optimal_eigenvalues_full(n: usize, r: f64) -> Vec<f64> {
    let p = pow2(n);
    let inv = 1.0 / p;
    let c = 2.0 / qfi_half_closed(n, r);
    let l1 = 0.5 + c * (r - inv) / (r + inv);
    let l2 = 0.5 + c * ((1.0 - r) - inv) / ((1.0 - r) + inv);
    let l3 = 0.5 - c;
    let mut out = vec![l3; 1 << n];
    out[0] = l1;
    out[1] = l2;
    out
}

/// Distinct eigenvalues of the optimum when `m < n` qubits are measured:
/// `[1, 1/(1−2ᵐ), …]`, each `2^{n−m}`-fold degenerate.
pub fn optimal_eigenvalues_partial(n: usize, m: usize) -> Result<Vec<f64>> {
    if m >= n || m == 0 {
        return Err(Error::InvalidArgument(format!("partial measurement needs 1 ≤ m < n (m={m}, n={n})")));
    }
    let mut out = vec![1.0 / (1.0 - pow2(m)); 1 << m];
    out[0] = 1.0;
    Ok(out)
}

/// Variance of the full-measurement optimum,
/// `(1−α)α + (2α−1)(1−2ⁿA)A/B² + (2(2+2ⁿ)C − α(1 + 2(4+2ⁿ)C))/B`.
pub fn variance_full(alpha: f64, n: usize, r: f64) -> f64 {
    let p = pow2(n);
    let a = (1.0 - 2.0 * r).powi(2);
    let b = 1.0 - p + p * (p - 4.0) * (r - 1.0) * r;
    let c = r * (r - 1.0);
    (1.0 - alpha) * alpha + (2.0 * alpha - 1.0) * (1.0 - p * a) * a / (b * b)
        + (2.0 * (2.0 + p) * c - alpha * (1.0 + 2.0 * (4.0 + p) * c)) / b
}

/// `(1−α)(1/(2ᵐ−1) + α)`.
pub fn variance_partial(alpha: f64, m: usize) -> f64 {
    (1.0 - alpha) * (1.0 / (pow2(m) - 1.0) + alpha)
}

/// CFI of the optimal `m`-qubit measurement at `α = 1/2`: `4(2ᵐ−1)/(2ᵐ+1)`.
pub fn cfi_half_partial(m: usize) -> f64 {
    let p = pow2(m);
    4.0 * (p - 1.0) / (p + 1.0)
}

/// Both forms of `∫₀¹ Δ²M dα` for the partial optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVariance {
    /// `1/I_c − 1/12`.
    pub via_fisher: f64,
    /// `1/(2(2ᵐ−1)) + 1/6`, the exact integral of [`variance_partial`].
    pub integral: f64,
}

pub fn total_variance_partial(m: usize) -> TotalVariance {
    TotalVariance {
        via_fisher: 1.0 / cfi_half_partial(m) - 1.0 / 12.0,
        integral: 1.0 / (2.0 * (pow2(m) - 1.0)) + 1.0 / 6.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measured {
    Full,
    Partial(usize),
}

/// Dense optimal observable. Full: rank-one projectors on `[v₁, v₂, …]`
/// carrying [`optimal_eigenvalues_full`]. Partial: `2ᵐ` blocks of
/// `2^{n−m}` consecutive eigenvectors of `ρ₁` in descending order.
pub fn optimal_observable_matrix(model: &MixtureModel, which: Measured) -> Result<SpectralObservable> {
    match which {
        Measured::Full => {
            let basis = model.labeled_basis();
            let lambdas = optimal_eigenvalues_full(model.n, model.r);
            let projectors = basis.iter().map(|v| DenseMatrix::projector(v)).collect();
            SpectralObservable::new(lambdas, projectors)
        }
        Measured::Partial(m) => {
            let lambdas = optimal_eigenvalues_partial(model.n, m)?;
            let projectors = block_projectors(&model.eigenbasis(), 1 << m);
            SpectralObservable::new(lambdas, projectors)
        }
    }
}

fn block_projectors(basis: &[Vec<C64>], blocks: usize) -> Vec<DenseMatrix> {
    let d = basis.len();
    let size = d / blocks;
    (0..blocks)
        .map(|b| {
            basis[b * size..(b + 1) * size]
                .iter()
                .fold(DenseMatrix::zeros(d), |acc, v| &acc + &DenseMatrix::projector(v))
        })
        .collect()
}

/// `ρ_{1/2}M + Mρ_{1/2} − ρ_{1/2} − (2/I_q)(ρ₁ − ρ₂)`, the stationarity
/// condition of the full optimum.
pub fn lyapunov_residual(model: &MixtureModel, m: &DenseMatrix) -> Result<f64> {
    let half = model.state(0.5)?;
    let lhs = &half.matmul(m) + &m.matmul(&half);
    let rhs = &half + &(&model.rho1() - &model.rho2()).scale_real(2.0 / qfi_half_closed(model.n, model.r));
    Ok(lhs.max_diff(&rhs))
}

/// The full optimum obtained directly by solving the Lyapunov equation.
pub fn lyapunov_solution(model: &MixtureModel) -> Result<DenseMatrix> {
    let half = model.state(0.5)?;
    let rhs = &half + &(&model.rho1() - &model.rho2()).scale_real(2.0 / qfi_half_closed(model.n, model.r));
    solve_lyapunov(&half, &rhs)
}

/// `Σ q_i f(p_i/q_i)` with `f(x) = (x−1)²/(x+1)`.
pub fn f_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    let mut total = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if b <= 0.0 {
            return Err(Error::ZeroDenominator(i));
        }
        let x = a / b;
        total += b * (x - 1.0).powi(2) / (x + 1.0);
    }
    Ok(total)
}

/// Whether `p′ ≺ p`: every descending prefix sum of `p′` is at most that of
/// `p`, with equal totals (to 1e-10).
pub fn check_majorization(p_prime: &[f64], p: &[f64]) -> Result<bool> {
    if p_prime.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: p_prime.len() });
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (a, b) = (sorted(p_prime), sorted(p));
    let (mut sa, mut sb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        sa += x;
        sb += y;
        if sa > sb + 1e-10 {
            return Ok(false);
        }
    }
    Ok((sa - sb).abs() <= 1e-10)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub trials: usize,
    /// f-divergence of the optimal projector family.
    pub optimal: f64,
    /// Largest f-divergence among the random families (`-∞` with no trials).
    pub best_random: f64,
    /// Trials exceeding `optimal + 1e-10`.
    pub exceedances: usize,
    /// Trials whose rotated diagonal of `ρ₁` was not majorized by its spectrum.
    pub majorization_failures: usize,
}

impl OptimalityReport {
    pub fn passed(&self) -> bool {
        self.exceedances == 0 && self.majorization_failures == 0
    }
}

/// Draws `trials` Haar-random conjugations of the optimal rank-`2^{n−m}`
/// projector family and compares their f-divergence against the optimum.
pub fn projector_optimality_oracle(
    model: &MixtureModel,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<OptimalityReport> {
    if m >= model.n || m == 0 {
        return Err(Error::InvalidArgument(format!("oracle needs 1 ≤ m < n (m={m}, n={})", model.n)));
    }
    let rho1 = model.rho1();
    let rho2 = model.rho2();
    let opt = block_projectors(&model.eigenbasis(), 1 << m);
    let probs = |proj: &[DenseMatrix], rho: &DenseMatrix| -> Vec<f64> {
        proj.iter().map(|p| p.trace_product(rho).re).collect()
    };
    let optimal = f_divergence(&probs(&opt, &rho1), &probs(&opt, &rho2))?;
    let spectrum = herm_eig(&rho1)?.values;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OptimalityReport {
        trials,
        optimal,
        best_random: f64::NEG_INFINITY,
        exceedances: 0,
        majorization_failures: 0,
    };
    for _ in 0..trials {
        let w = random_unitary(&mut rng, model.dim());
        let wd = w.adjoint();
        let family: Vec<DenseMatrix> = opt.iter().map(|p| w.matmul(p).matmul(&wd)).collect();
        let value = f_divergence(&probs(&family, &rho1), &probs(&family, &rho2))?;
        report.best_random = report.best_random.max(value);
        if value > optimal + 1e-10 {
            report.exceedances += 1;
        }
        let rotated = wd.matmul(&rho1).matmul(&w);
        let diag: Vec<f64> = rotated.diagonal().iter().map(|z| z.re).collect();
        if !check_majorization(&diag, &spectrum)? {
            report.majorization_failures += 1;
        }
    }
    Ok(report)
}

/// Outcome of [`validate_closed_forms`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Largest deviation of each checked closed form from its dense oracle.
    pub qfi_half: f64,
    pub qfi_corrected: f64,
    pub variance_full: f64,
    pub variance_partial: f64,
    pub constraints: f64,
    pub lyapunov: f64,
    /// Largest deviation of the printed α-dependent QFI, expected to be large.
    pub qfi_as_printed: f64,
}

impl ValidationReport {
    pub const TOL: f64 = 1e-8;

    pub fn passed(&self) -> bool {
        [self.qfi_half, self.qfi_corrected, self.variance_full, self.variance_partial, self.constraints, self.lyapunov]
            .iter()
            .all(|&x| x < Self::TOL)
    }
}

/// Checks every closed form against dense oracles for `n ∈ {2, 3}` on a grid
/// of `r` and `α`.
pub fn validate_closed_forms() -> Result<ValidationReport> {
    let mut rep = ValidationReport {
        qfi_half: 0.0,
        qfi_corrected: 0.0,
        variance_full: 0.0,
        variance_partial: 0.0,
        constraints: 0.0,
        lyapunov: 0.0,
        qfi_as_printed: 0.0,
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    for n in [2, 3] {
        for r in [0.0, 0.25, 0.5, 0.8, 1.0] {
            let model = MixtureModel::ghz(n, r)?;
            let fam = model.family()?;
            let (rho, d) = density_derivative(&fam, 0.5, 1e-4)?;
            rep.qfi_half = rep.qfi_half.max(rel(qfi_half_closed(n, r), qfi_spectral(&rho, &d)?));

            let full = optimal_observable_matrix(&model, Measured::Full)?;
            let mfull = full.matrix();
            rep.lyapunov = rep.lyapunov.max(lyapunov_residual(&model, &mfull)?);
            for obs in [Some(&full), None] {
                let partial;
                let o = match obs {
                    Some(o) => o,
                    None => {
                        partial = optimal_observable_matrix(&model, Measured::Partial(n - 1))?;
                        &partial
                    }
                };
                let m = o.matrix();
                let c1 = (m.trace_product(&model.rho1()).re - 1.0).abs();
                let c2 = m.trace_product(&model.rho2()).re.abs();
                rep.constraints = rep.constraints.max(c1).max(c2);
            }
            for k in 1..10 {
                let a = k as f64 / 10.0;
                let st = State::Mixed(model.state(a)?);
                rep.variance_full = rep.variance_full.max(rel(variance_full(a, n, r), full.variance(&st)));
                for m in 1..n {
                    let p = optimal_observable_matrix(&model, Measured::Partial(m))?;
                    rep.variance_partial = rep.variance_partial.max(rel(variance_partial(a, m), p.variance(&st)));
                }
                let (rho, d) = density_derivative(&fam, a, 1e-4)?;
                let oracle = qfi_spectral(&rho, &d)?;
                rep.qfi_corrected = rep.qfi_corrected.max(rel(qfi_closed(a, n, r, QfiClosedForm::Corrected), oracle));
                rep.qfi_as_printed = rep.qfi_as_printed.max(rel(qfi_closed(a, n, r, QfiClosedForm::AsPrinted), oracle));
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{cfi_mixture_closed, qfi_spectral};
    use crate::random::{random_orthogonal_to, random_unit_vector};
    use rand::Rng;

    #[test]
    fn qfi_half_examples() {
        assert!((qfi_half_closed(2, 0.5) - 4.0 / 3.0).abs() < 1e-15);
        for n in 2..=8 {
            let expect = 4.0 - 8.0 / (pow2(n - 1) + 1.0);
            assert!((qfi_half_closed(n, 0.5) - expect).abs() < 1e-13);
        }
        let model = MixtureModel::ghz(8, 1.0).unwrap();
        let (rho, d) = density_derivative(&model.family().unwrap(), 0.5, 1e-4).unwrap();
        let s = qfi_spectral(&rho, &d).unwrap();
        assert!((s - qfi_half_closed(8, 1.0)).abs() < 1e-8 * s);
    }

    #[test]
    fn printed_qfi_form_is_wrong_and_corrected_form_matches() {
        let printed = qfi_closed(0.5, 2, 0.5, QfiClosedForm::AsPrinted);
        assert!(printed < 0.0);
        let fixed = qfi_closed(0.5, 2, 0.5, QfiClosedForm::Corrected);
        assert!((fixed - 4.0 / 3.0).abs() < 1e-14);
        for n in 2..=5 {
            for r in [0.1, 0.3, 0.5, 0.9] {
                assert!((qfi_closed(0.5, n, r, QfiClosedForm::Corrected) - qfi_half_closed(n, r)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_eigenvalues() {
        let l = optimal_eigenvalues_full(2, 0.5);
        for (a, b) in l.iter().zip([1.0, 1.0, -1.0, -1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        for n in 2..=6 {
            let l = optimal_eigenvalues_full(n, 0.5);
            assert!((l[2] + 2.0 / (pow2(n) - 2.0)).abs() < 1e-13);
        }
        for n in 2..=5 {
            for r in [0.0, 0.2, 0.5, 0.7, 1.0] {
                let l = optimal_eigenvalues_full(n, r);
                let tr2: f64 = l.iter().sum::<f64>() / pow2(n);
                let tr1 = r * l[0] + (1.0 - r) * l[1];
                assert!(tr2.abs() < 1e-12 && (tr1 - 1.0).abs() < 1e-12, "n={n} r={r}");
            }
        }
        let l = optimal_eigenvalues_full(3, 0.0);
        assert!((l[0] - 1.0 / (1.0 - 8.0)).abs() < 1e-12 && (l[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_eigenvalues() {
        assert_eq!(optimal_eigenvalues_partial(3, 1).unwrap(), vec![1.0, -1.0]);
        let l = optimal_eigenvalues_partial(5, 3).unwrap();
        assert_eq!(l[0], 1.0);
        assert!((l[1] + 1.0 / 7.0).abs() < 1e-15);
        for n in 2..=6 {
            for m in 1..n {
                let l = optimal_eigenvalues_partial(n, m).unwrap();
                let deg = pow2(n - m);
                let tr: f64 = l.iter().map(|x| x * deg).sum();
                assert!(tr.abs() < 1e-12);
            }
        }
        assert!(optimal_eigenvalues_partial(3, 3).is_err());
    }

    #[test]
    fn variance_examples() {
        assert!((variance_full(0.5, 2, 0.5) - 0.75).abs() < 1e-14);
        assert_eq!(variance_partial(1.0, 3), 0.0);
        assert_eq!(variance_partial(0.0, 1), 1.0);
        assert!((variance_partial(0.5, 1) - 0.75).abs() < 1e-15);
        for n in 2..=6 {
            for k in 0..=100 {
                let a = k as f64 / 100.0;
                assert!((variance_full(a, n, 0.5) - variance_partial(a, n - 1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variance_decreases_with_m() {
        for k in 0..100 {
            let a = k as f64 / 100.0;
            for m in 1..8 {
                assert!(variance_partial(a, m + 1) < variance_partial(a, m));
            }
        }
    }

    #[test]
    fn total_variance_forms_agree() {
        for m in 1..=5 {
            let t = total_variance_partial(m);
            assert!((t.via_fisher - t.integral).abs() < 1e-14);
            let closed = (pow2(m + 1) + 4.0) / (12.0 * (pow2(m) - 1.0));
            assert!((t.integral - closed).abs() < 1e-14);
            // Simpson quadrature of the quadratic integrand is exact.
            let q = (variance_partial(0.0, m) + 4.0 * variance_partial(0.5, m) + variance_partial(1.0, m)) / 6.0;
            assert!((q - t.integral).abs() < 1e-14);
        }
        assert!((total_variance_partial(1).integral - 2.0 / 3.0).abs() < 1e-15);
        assert!((total_variance_partial(2).integral - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dense_optimum_matches_closed_forms() {
        let model = MixtureModel::ghz(3, 0.25).unwrap();
        let full = optimal_observable_matrix(&model, Measured::Full).unwrap();
        assert!(full.projector_defect() < 1e-12);
        for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let st = State::Mixed(model.state(a).unwrap());
            assert!((full.expectation(&st) - a).abs() < 1e-12);
            assert!((full.variance(&st) - variance_full(a, 3, 0.25)).abs() < 1e-10);
        }
        let st = State::Mixed(model.state(0.5).unwrap());
        assert!((full.variance(&st) - 1.0 / qfi_half_closed(3, 0.25)).abs() < 1e-12);
        for m in 1..3 {
            let p = optimal_observable_matrix(&model, Measured::Partial(m)).unwrap();
            assert!(p.projector_defect() < 1e-12);
            for k in 1..10 {
                let a = k as f64 / 10.0;
                let st = State::Mixed(model.state(a).unwrap());
                assert!((p.expectation(&st) - a).abs() < 1e-12);
                let v = p.variance(&st);
                assert!((v - variance_partial(a, m)).abs() < 1e-10);
                let p1 = p.probabilities(&State::Mixed(model.rho1()));
                let p2 = p.probabilities(&State::Mixed(model.rho2()));
                assert!((v - 1.0 / cfi_mixture_closed(a, &p1, &p2).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lyapunov_solution_matches_full_optimum() {
        for n in 2..=4 {
            for r in [0.0, 0.3, 0.5, 1.0] {
                let model = MixtureModel::ghz(n, r).unwrap();
                let full = optimal_observable_matrix(&model, Measured::Full).unwrap().matrix();
                assert!(lyapunov_residual(&model, &full).unwrap() < 1e-12);
                assert!(lyapunov_solution(&model).unwrap().max_diff(&full) < 1e-10);
            }
        }
    }

    #[test]
    fn generic_vectors_work() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let v1 = random_unit_vector(&mut rng, 8);
        let v2 = random_orthogonal_to(&mut rng, &v1);
        let model = MixtureModel::new(3, 0.6, v1, v2).unwrap();
        let full = optimal_observable_matrix(&model, Measured::Full).unwrap();
        assert!(lyapunov_residual(&model, &full.matrix()).unwrap() < 1e-12);
        assert!(MixtureModel::new(3, 0.6, ghz(3, true), ghz(3, true)).is_err());
    }

    #[test]
    fn f_divergence_cases() {
        assert_eq!(f_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((f_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(f_divergence(&[1.0, 0.0], &[1.0, 0.0]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..50 {
            let mut p: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut q: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
            let sp: f64 = p.iter().sum();
            let sq: f64 = q.iter().sum();
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            let direct: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2) / (a + b)).sum();
            assert!((f_divergence(&p, &q).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn majorization_cases() {
        let p = [0.6, 0.4];
        assert!(check_majorization(&p, &p).unwrap());
        assert!(check_majorization(&[0.25; 4], &[0.7, 0.1, 0.1, 0.1]).unwrap());
        assert!(check_majorization(&[0.5, 0.5], &[0.6, 0.4]).unwrap());
        assert!(!check_majorization(&[0.6, 0.4], &[0.5, 0.5]).unwrap());
        assert!(check_majorization(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn optimality_oracle() {
        let model = MixtureModel::ghz(4, 0.3).unwrap();
        let r = projector_optimality_oracle(&model, 1, 0, 1).unwrap();
        assert!(r.passed() && r.best_random == f64::NEG_INFINITY);
        let r = projector_optimality_oracle(&model, 1, 200, 7).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.best_random <= r.optimal);
        // At α = 1/2 the CFI is twice the f-divergence.
        assert!((2.0 * r.optimal - cfi_half_partial(1)).abs() < 1e-12);
    }

    #[test]
    fn self_test_passes() {
        let rep = validate_closed_forms().unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.qfi_as_printed > 1e-2);
    }
}
