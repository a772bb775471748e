//! Classical and quantum Fisher information, the symmetric logarithmic
//! derivative and the Cramér–Rao chain
//! `Δ²M / |∂⟨M⟩|² ≥ 1/I_c ≥ 1/I_q`.
//!
//! All α-derivatives are central finite differences.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::circuits::CompiledCircuit;
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, inner, normalized, solve_lyapunov, DenseMatrix};
use crate::observables::{expectation_from, outcome_probabilities, rotated_diagonal, variance_from, ParamObservable};
use crate::states::{ground_state, mixture_state, state_fidelity, State};

/// Step for probabilities and expectations.
pub const PROB_STEP: f64 = 1e-4;
/// Step for statevector derivatives.
pub const VECTOR_STEP: f64 = 1e-5;
/// Default step for the fidelity route.
pub const FIDELITY_STEP: f64 = 1e-3;
/// Absolute slack for the bound chain (scaled by the magnitude when larger
/// than one).
pub const CHAIN_SLACK: f64 = 1e-6;

const CFI_PROB_FLOOR: f64 = 1e-12;
const CFI_DERIV_FLOOR: f64 = 1e-8;

/// One evaluation of a state family.
#[derive(Debug, Clone)]
pub struct Sample {
    pub state: State,
    /// Set for ground states with a gap below `1e-10`.
    pub degenerate: bool,
}

type Evaluator = dyn Fn(f64) -> Result<Sample> + Send + Sync;

/// A map `α ↦ ρ_α` on a closed interval.
#[derive(Clone)]
pub struct StateFamily {
    eval: Arc<Evaluator>,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateFamily[{}, {}]", self.lo, self.hi)
    }
}

impl StateFamily {
    pub fn new(lo: f64, hi: f64, eval: impl Fn(f64) -> Result<Sample> + Send + Sync + 'static) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
        }
        Ok(Self { eval: Arc::new(eval), lo, hi })
    }

    /// `α ↦ αρ₁ + (1−α)ρ₂` on `[0, 1]`.
    pub fn mixture(rho1: DenseMatrix, rho2: DenseMatrix) -> Result<Self> {
        if rho1.dim() != rho2.dim() {
            return Err(Error::DimensionMismatch { expected: rho1.dim(), found: rho2.dim() });
        }
        Self::new(0.0, 1.0, move |a| {
            Ok(Sample { state: State::Mixed(mixture_state(a, &rho1, &rho2)?), degenerate: false })
        })
    }

    /// Ground states of `h(α)`.
    pub fn ground_states(
        lo: f64,
        hi: f64,
        h: impl Fn(f64) -> Result<DenseMatrix> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(lo, hi, move |a| {
            let g = ground_state(&h(a)?)?;
            Ok(Sample { state: State::Pure(g.vector), degenerate: g.degenerate })
        })
    }

    pub fn pure(lo: f64, hi: f64, f: impl Fn(f64) -> Vec<C64> + Send + Sync + 'static) -> Result<Self> {
        Self::new(lo, hi, move |a| Ok(Sample { state: State::Pure(f(a)), degenerate: false }))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.lo - 1e-12 && alpha <= self.hi + 1e-12
    }

    pub fn sample(&self, alpha: f64) -> Result<Sample> {
        if !self.contains(alpha) {
            return Err(Error::OutOfRange { alpha, lo: self.lo, hi: self.hi });
        }
        (self.eval)(alpha.clamp(self.lo, self.hi))
    }

    pub fn state(&self, alpha: f64) -> Result<State> {
        Ok(self.sample(alpha)?.state)
    }

    fn check_interior(&self, alpha: f64, h: f64) -> Result<()> {
        if alpha - h < self.lo - 1e-12 || alpha + h > self.hi + 1e-12 {
            return Err(Error::OutOfRange { alpha, lo: self.lo + h, hi: self.hi - h });
        }
        Ok(())
    }
}

/// `Σ (∂p_i)² / p_i` with the near-zero rules: outcomes with `p < 1e-12` are
/// dropped when `|∂p| < 1e-8` and are an error otherwise.
pub fn cfi_from(p: &[f64], dp: &[f64]) -> Result<f64> {
    if p.len() != dp.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: dp.len() });
    }
    let mut total = 0.0;
    for (i, (&pi, &di)) in p.iter().zip(dp).enumerate() {
        if pi < CFI_PROB_FLOOR {
            if di.abs() < CFI_DERIV_FLOOR {
                continue;
            }
            return Err(Error::CfiDivergence { outcome: i, prob: pi, deriv: di });
        }
        total += di * di / pi;
    }
    Ok(total)
}

fn central<F: Fn(f64) -> Result<Vec<f64>>>(f: F, alpha: f64, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = f(alpha)?;
    let plus = f(alpha + h)?;
    let minus = f(alpha - h)?;
    let dp = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    Ok((p, dp))
}

/// Classical Fisher information of the measurement `{Λ_i}` on the family.
pub fn cfi(family: &StateFamily, projectors: &[DenseMatrix], alpha: f64, step: f64) -> Result<f64> {
    family.check_interior(alpha, step)?;
    let probs = |a: f64| -> Result<Vec<f64>> {
        let s = family.state(a)?;
        Ok(projectors.iter().map(|p| s.expectation(p).re).collect())
    };
    let (p, dp) = central(probs, alpha, step)?;
    cfi_from(&p, &dp)
}

/// `Σ (p_i⁽¹⁾ − p_i⁽²⁾)² / (αp_i⁽¹⁾ + (1−α)p_i⁽²⁾)` for the linear mixture.
pub fn cfi_mixture_closed(alpha: f64, p1: &[f64], p2: &[f64]) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch { expected: p1.len(), found: p2.len() });
    }
    let mut total = 0.0;
    for (i, (&a, &b)) in p1.iter().zip(p2).enumerate() {
        let num = (a - b) * (a - b);
        let den = alpha * a + (1.0 - alpha) * b;
        if den == 0.0 {
            if num == 0.0 {
                continue;
            }
            return Err(Error::ZeroDenominator(i));
        }
        total += num / den;
    }
    Ok(total)
}

/// Result of the fidelity route, with a half-step consistency check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityQfi {
    pub value: f64,
    pub half_step: f64,
    /// False when the two steps disagree by more than 1% relative.
    pub consistent: bool,
}

/// `8(1 − F(ρ_α, ρ_{α+dα})) / dα²`.
pub fn qfi_fidelity(family: &StateFamily, alpha: f64, dalpha: f64) -> Result<FidelityQfi> {
    let (lo, hi) = family.range();
    if !family.contains(alpha) || !family.contains(alpha + dalpha) {
        return Err(Error::OutOfRange { alpha, lo, hi });
    }
    let base = family.state(alpha)?;
    let eval = |h: f64| -> Result<f64> {
        let f = state_fidelity(&base, &family.state(alpha + h)?)?;
        Ok(8.0 * (1.0 - f) / (h * h))
    };
    let value = eval(dalpha)?;
    let half_step = eval(dalpha / 2.0)?;
    let scale = value.abs().max(half_step.abs());
    let consistent = scale < 1e-12 || (value - half_step).abs() <= 1e-2 * scale;
    Ok(FidelityQfi { value, half_step, consistent })
}

/// `2 Σ |⟨i|∂ρ|j⟩|² / (λ_i + λ_j)` over pairs with `λ_i + λ_j > 1e-12`.
pub fn qfi_spectral(rho: &DenseMatrix, drho: &DenseMatrix) -> Result<f64> {
    if rho.dim() != drho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: drho.dim() });
    }
    let eig = herm_eig(rho)?;
    let v = &eig.vectors;
    let dt = v.adjoint().matmul(drho).matmul(v);
    let d = rho.dim();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            let s = eig.values[i] + eig.values[j];
            if s > 1e-12 {
                total += dt[(i, j)].norm_sqr() / s;
            }
        }
    }
    Ok(2.0 * total)
}

/// `4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²)`.
pub fn qfi_pure(psi: &[C64], dpsi: &[C64]) -> Result<f64> {
    if psi.len() != dpsi.len() {
        return Err(Error::DimensionMismatch { expected: psi.len(), found: dpsi.len() });
    }
    let dd = inner(dpsi, dpsi).re;
    let od = inner(psi, dpsi).norm_sqr();
    Ok((4.0 * (dd - od)).max(0.0))
}

/// Symmetric logarithmic derivative: `½(ρL + Lρ) = ∂ρ`.
pub fn sld(rho: &DenseMatrix, drho: &DenseMatrix) -> Result<DenseMatrix> {
    solve_lyapunov(rho, &drho.scale_real(2.0))
}

/// Central difference of a statevector family after renormalizing both ends
/// and aligning the phase of `ψ(α+h)` to `ψ(α−h)`.
pub fn vector_derivative(family: &StateFamily, alpha: f64, h: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    family.check_interior(alpha, h)?;
    let as_pure = |s: State| -> Result<Vec<C64>> {
        match s {
            State::Pure(v) => Ok(normalized(&v)),
            State::Mixed(_) => Err(Error::InvalidArgument("family is not pure".into())),
        }
    };
    let psi = as_pure(family.state(alpha)?)?;
    let minus = as_pure(family.state(alpha - h)?)?;
    let mut plus = as_pure(family.state(alpha + h)?)?;
    let ov = inner(&minus, &plus);
    if ov.norm() > 0.0 {
        let ph = ov.conj() / ov.norm();
        plus.iter_mut().for_each(|a| *a *= ph);
    }
    // Align the midpoint to the same gauge.
    let mut psi = psi;
    let mid: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| (a + b) * 0.5).collect();
    let ov = inner(&mid, &psi);
    if ov.norm() > 0.0 {
        let ph = ov.conj() / ov.norm();
        psi.iter_mut().for_each(|a| *a *= ph);
    }
    let d = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    Ok((psi, d))
}

/// Central difference of `ρ_α`.
pub fn density_derivative(family: &StateFamily, alpha: f64, h: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    family.check_interior(alpha, h)?;
    let rho = family.state(alpha)?.to_density();
    let plus = family.state(alpha + h)?.to_density();
    let minus = family.state(alpha - h)?.to_density();
    Ok((rho, (&plus - &minus).scale_real(0.5 / h)))
}

/// QFI of the family at `α`: the pure-state formula for vector families,
/// the spectral formula otherwise.
pub fn qfi(family: &StateFamily, alpha: f64) -> Result<f64> {
    match family.state(alpha)? {
        State::Pure(_) => {
            let (psi, d) = vector_derivative(family, alpha, VECTOR_STEP)?;
            qfi_pure(&psi, &d)
        }
        State::Mixed(_) => {
            let (rho, d) = density_derivative(family, alpha, PROB_STEP)?;
            qfi_spectral(&rho, &d)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// `|∂⟨M⟩| < 1e-10`; the adjusted variance is undefined.
    FlatExpectation,
    /// A zero-probability outcome has a nonzero derivative.
    CfiDivergence { outcome: usize },
    /// `adjusted < 1/I_c` beyond the slack.
    AdjustedBelowCfi(f64),
    /// `1/I_c < 1/I_q` beyond the slack.
    CfiBelowQfi(f64),
    /// Finite differences would leave the family's range.
    Boundary,
    /// The family's ground state is degenerate here.
    Degenerate,
}

impl Diagnostic {
    pub fn tag(&self) -> &'static str {
        match self {
            Diagnostic::FlatExpectation => "flat",
            Diagnostic::CfiDivergence { .. } => "cfi_divergence",
            Diagnostic::AdjustedBelowCfi(_) => "chain_adjusted",
            Diagnostic::CfiBelowQfi(_) => "chain_cfi",
            Diagnostic::Boundary => "boundary",
            Diagnostic::Degenerate => "degenerate",
        }
    }
}

/// Per-α entry of the bound chain.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherReport {
    pub alpha: f64,
    pub expectation: f64,
    pub variance: f64,
    pub derivative: f64,
    pub adjusted_variance: Option<f64>,
    pub inv_cfi: Option<f64>,
    pub inv_qfi: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

impl FisherReport {
    pub fn chain_holds(&self) -> bool {
        !self
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::AdjustedBelowCfi(_) | Diagnostic::CfiBelowQfi(_)))
    }
}

fn slack(x: f64) -> f64 {
    CHAIN_SLACK * x.abs().max(1.0)
}

/// Outcome probabilities of a bound observable on any state.
pub struct Readout {
    circuit: CompiledCircuit,
    unitary: Option<DenseMatrix>,
    m: usize,
}

impl Readout {
    pub fn new(obs: &ParamObservable, theta: &[f64]) -> Result<Self> {
        Ok(Self { circuit: obs.circuit().compile(theta)?, unitary: None, m: obs.m() })
    }

    pub fn probabilities(&mut self, state: &State) -> Result<Vec<f64>> {
        let diag: Vec<f64> = match state {
            State::Pure(psi) => {
                let mut v = psi.clone();
                self.circuit.apply(&mut v)?;
                v.iter().map(|a| a.norm_sqr()).collect()
            }
            State::Mixed(rho) => {
                if self.unitary.is_none() {
                    let d = self.circuit.dim();
                    let mut u = DenseMatrix::zeros(d);
                    for j in 0..d {
                        let mut col = crate::linalg::basis_vector(d, j);
                        self.circuit.apply(&mut col)?;
                        u.set_column(j, &col);
                    }
                    self.unitary = Some(u);
                }
                let u = self.unitary.as_ref().expect("set above");
                if u.dim() != rho.dim() {
                    return Err(Error::DimensionMismatch { expected: u.dim(), found: rho.dim() });
                }
                rotated_diagonal(u, rho)
            }
        };
        Ok(outcome_probabilities(&diag, self.m))
    }
}

/// Evaluates the chain at each `α`. Points too close to the range ends get a
/// [`Diagnostic::Boundary`] report with only the expectation and variance.
pub fn bound_chain(
    obs: &ParamObservable,
    theta: &[f64],
    family: &StateFamily,
    alphas: &[f64],
) -> Result<Vec<FisherReport>> {
    let mut readout = Readout::new(obs, theta)?;
    let lambdas = obs.lambdas();
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let sample = family.sample(alpha)?;
        let p = readout.probabilities(&sample.state)?;
        let mut report = FisherReport {
            alpha,
            expectation: expectation_from(&p, lambdas),
            variance: variance_from(&p, lambdas),
            derivative: f64::NAN,
            adjusted_variance: None,
            inv_cfi: None,
            inv_qfi: None,
            diagnostics: Vec::new(),
        };
        if sample.degenerate {
            report.diagnostics.push(Diagnostic::Degenerate);
        }
        if family.check_interior(alpha, PROB_STEP).is_err() {
            report.diagnostics.push(Diagnostic::Boundary);
            out.push(report);
            continue;
        }
        let pp = readout.probabilities(&family.state(alpha + PROB_STEP)?)?;
        let pm = readout.probabilities(&family.state(alpha - PROB_STEP)?)?;
        let mut dp: Vec<f64> = pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * PROB_STEP)).collect();
        // Probabilities sum to one, so their derivatives sum to zero; removing
        // the round-off drift keeps nearly flat readouts consistent.
        let drift = dp.iter().sum::<f64>() / dp.len() as f64;
        dp.iter_mut().for_each(|d| *d -= drift);
        let deriv = expectation_from(&dp, lambdas);
        report.derivative = deriv;
        if deriv.abs() < 1e-10 {
            report.diagnostics.push(Diagnostic::FlatExpectation);
        } else {
            report.adjusted_variance = Some(report.variance / (deriv * deriv));
        }
        match cfi_from(&p, &dp) {
            Ok(ic) => report.inv_cfi = Some(1.0 / ic),
            Err(Error::CfiDivergence { outcome, .. }) => {
                report.diagnostics.push(Diagnostic::CfiDivergence { outcome })
            }
            Err(e) => return Err(e),
        }
        report.inv_qfi = Some(1.0 / qfi(family, alpha)?);

        if let (Some(adj), Some(ic)) = (report.adjusted_variance, report.inv_cfi) {
            if adj < ic - slack(ic) {
                report.diagnostics.push(Diagnostic::AdjustedBelowCfi(ic - adj));
            }
        }
        if let (Some(ic), Some(iq)) = (report.inv_cfi, report.inv_qfi) {
            if ic < iq - slack(iq) {
                report.diagnostics.push(Diagnostic::CfiBelowQfi(iq - ic));
            }
        }
        out.push(report);
    }
    Ok(out)
}
