//! The regression objective `w_ls·Σ(α_j − ⟨M⟩_j)² + w_var·ΣΔ²_j` and its
//! minimization over eigenvalues and circuit angles.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::fisher::StateFamily;
use crate::linalg::{herm_eig, DenseMatrix};
use crate::observables::{expectation_from, outcome_probabilities, variance_from, ParamObservable};
use crate::optim::{bfgs, BfgsOptions};
use crate::states::{LabeledState, State};

#[derive(Debug, Clone)]
pub struct TrainSet {
    items: Vec<LabeledState>,
}

impl TrainSet {
    pub fn new(items: Vec<LabeledState>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::InvalidArgument("a training set needs at least two items".into()));
        }
        let d = items[0].state.dim();
        if let Some(bad) = items.iter().find(|it| it.state.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.state.dim() });
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[LabeledState] {
        &self.items
    }

    pub fn labels(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.label).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].state.dim()
    }

    /// Midpoint of the label range.
    pub fn label_midpoint(&self) -> f64 {
        let (lo, hi) = self
            .items
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), it| (a.min(it.label), b.max(it.label)));
        0.5 * (lo + hi)
    }
}

/// `count` equidistant labels on `[lo, hi]`, endpoints included.
pub fn make_trainset(family: &StateFamily, count: usize, lo: f64, hi: f64) -> Result<TrainSet> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!("need at least two training points, got {count}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty label range [{lo}, {hi}]")));
    }
    let items = equidistant(lo, hi, count)
        .into_iter()
        .map(|a| Ok(LabeledState::new(family.state(a)?, a)))
        .collect::<Result<Vec<_>>>()?;
    TrainSet::new(items)
}

/// `count ≥ 2` equidistant points on `[lo, hi]` with exact endpoints.
pub fn equidistant(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| if k + 1 == count { hi } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub w_ls: f64,
    pub w_var: f64,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_step: f64,
    pub conv_tol: f64,
    /// Half-width of the uniform jitter around the label midpoint used to
    /// initialize `λ`.
    pub lambda_jitter: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { w_ls: 1.0, w_var: 1e-4, seed: 0, restarts: 5, max_iters: 500, grad_step: 1e-5, conv_tol: 1e-7, lambda_jitter: 1e-2 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} must be positive")));
        if !(self.w_ls > 0.0) {
            return bad("w_ls");
        }
        if !(self.w_var >= 0.0) {
            return Err(Error::InvalidArgument("w_var must be nonnegative".into()));
        }
        if self.restarts == 0 {
            return bad("restarts");
        }
        if self.max_iters == 0 {
            return bad("max_iters");
        }
        if !(self.grad_step > 0.0) {
            return bad("grad_step");
        }
        if !(self.conv_tol > 0.0) {
            return bad("conv_tol");
        }
        if !(self.lambda_jitter >= 0.0) {
            return Err(Error::InvalidArgument("lambda_jitter must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub lambdas: Vec<f64>,
    pub theta: Vec<f64>,
    pub loss: f64,
    /// Loss after every accepted step of the winning restart.
    pub loss_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Final loss of every restart, in order.
    pub restart_losses: Vec<f64>,
}

/// Training states reduced to a list of vectors to push through the circuit
/// plus per-item mixing weights over them.
#[derive(Debug, Clone)]
struct Prepared {
    vectors: Vec<Vec<C64>>,
    weights: Vec<Vec<(usize, f64)>>,
}

const WEIGHT_FLOOR: f64 = 1e-15;
const COMMUTE_TOL: f64 = 1e-10;

impl Prepared {
    fn new(set: &TrainSet) -> Result<Self> {
        let items = set.items();
        if items.iter().all(|it| matches!(it.state, State::Pure(_))) {
            let vectors = items
                .iter()
                .map(|it| match &it.state {
                    State::Pure(v) => v.clone(),
                    State::Mixed(_) => unreachable!(),
                })
                .collect();
            let weights = (0..items.len()).map(|j| vec![(j, 1.0)]).collect();
            return Ok(Self { vectors, weights });
        }
        let rhos: Vec<DenseMatrix> = items.iter().map(|it| it.state.to_density()).collect();
        if let Some(shared) = Self::shared_basis(&rhos)? {
            return Ok(shared);
        }
        let mut vectors = Vec::new();
        let mut weights = Vec::new();
        for rho in &rhos {
            let eig = herm_eig(rho)?;
            let mut w = Vec::new();
            for (k, &p) in eig.values.iter().enumerate() {
                if p > WEIGHT_FLOOR {
                    w.push((vectors.len(), p));
                    vectors.push(eig.vector(k));
                }
            }
            weights.push(w);
        }
        Ok(Self { vectors, weights })
    }

    /// A common eigenbasis, if every state is diagonal in the eigenbasis of a
    /// generic combination of them.
    fn shared_basis(rhos: &[DenseMatrix]) -> Result<Option<Self>> {
        let d = rhos[0].dim();
        let mut mix = DenseMatrix::zeros(d);
        for (j, rho) in rhos.iter().enumerate() {
            // Incommensurate coefficients break accidental degeneracies.
            let c = 1.0 + (j as f64 * 0.754_877_666).fract();
            mix = &mix + &rho.scale_real(c);
        }
        let eig = herm_eig(&mix)?;
        let v = &eig.vectors;
        let vd = v.adjoint();
        let mut weights = Vec::with_capacity(rhos.len());
        let mut used = vec![false; d];
        for rho in rhos {
            let rot = vd.matmul(rho).matmul(v);
            let diag: Vec<f64> = rot.diagonal().iter().map(|z| z.re).collect();
            let off = &rot - &DenseMatrix::diag_real(&diag);
            if off.max_abs() > COMMUTE_TOL {
                return Ok(None);
            }
            let w: Vec<(usize, f64)> = diag
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > WEIGHT_FLOOR)
                .map(|(k, &p)| (k, p))
                .collect();
            w.iter().for_each(|&(k, _)| used[k] = true);
            weights.push(w);
        }
        let vectors = (0..d).map(|k| if used[k] { eig.vector(k) } else { Vec::new() }).collect();
        Ok(Some(Self { vectors, weights }))
    }
}

/// A training problem with states pre-processed for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Problem {
    circuit: Circuit,
    m: usize,
    labels: Vec<f64>,
    prepared: Prepared,
    w_ls: f64,
    w_var: f64,
}

impl Problem {
    pub fn new(circuit: &Circuit, m: usize, set: &TrainSet, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if set.dim() != circuit.dim() {
            return Err(Error::DimensionMismatch { expected: circuit.dim(), found: set.dim() });
        }
        if m == 0 || m > circuit.n() {
            return Err(Error::InvalidArgument(format!("m must be in 1..={}, got {m}", circuit.n())));
        }
        Ok(Self {
            circuit: circuit.clone(),
            m,
            labels: set.labels(),
            prepared: Prepared::new(set)?,
            w_ls: config.w_ls,
            w_var: config.w_var,
        })
    }

    pub fn outcomes(&self) -> usize {
        1 << self.m
    }

    pub fn param_count(&self) -> usize {
        self.circuit.param_count()
    }

    /// Outcome distribution of every training state.
    pub fn probabilities(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let compiled = self.circuit.compile(theta)?;
        let mut diags: Vec<Vec<f64>> = Vec::with_capacity(self.prepared.vectors.len());
        for v in &self.prepared.vectors {
            if v.is_empty() {
                diags.push(Vec::new());
                continue;
            }
            let mut psi = v.clone();
            compiled.apply(&mut psi)?;
            diags.push(psi.iter().map(|a| a.norm_sqr()).collect());
        }
        let d = self.circuit.dim();
        Ok(self
            .prepared
            .weights
            .iter()
            .map(|w| {
                let mut diag = vec![0.0; d];
                for &(k, p) in w {
                    diag.iter_mut().zip(&diags[k]).for_each(|(a, b)| *a += p * b);
                }
                outcome_probabilities(&diag, self.m)
            })
            .collect())
    }

    pub fn loss_from(&self, probs: &[Vec<f64>], lambdas: &[f64]) -> Result<f64> {
        if lambdas.len() != self.outcomes() {
            return Err(Error::DimensionMismatch { expected: self.outcomes(), found: lambdas.len() });
        }
        let mut ls = 0.0;
        let mut var = 0.0;
        for (p, &a) in probs.iter().zip(&self.labels) {
            ls += (a - expectation_from(p, lambdas)).powi(2);
            var += variance_from(p, lambdas);
        }
        let total = self.w_ls * ls + self.w_var * var;
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::NonFiniteLoss)
        }
    }

    pub fn loss(&self, lambdas: &[f64], theta: &[f64]) -> Result<f64> {
        self.loss_from(&self.probabilities(theta)?, lambdas)
    }

    /// Central differences over the concatenation `(λ, θ)`.
    pub fn gradient(&self, lambdas: &[f64], theta: &[f64], step: f64) -> Result<Vec<f64>> {
        let probs = self.probabilities(theta)?;
        let mut g = Vec::with_capacity(lambdas.len() + theta.len());
        let mut lam = lambdas.to_vec();
        for i in 0..lam.len() {
            let x = lam[i];
            lam[i] = x + step;
            let fp = self.loss_from(&probs, &lam)?;
            lam[i] = x - step;
            let fm = self.loss_from(&probs, &lam)?;
            lam[i] = x;
            g.push((fp - fm) / (2.0 * step));
        }
        let mut th = theta.to_vec();
        for i in 0..th.len() {
            let x = th[i];
            th[i] = x + step;
            let fp = self.loss(lambdas, &th)?;
            th[i] = x - step;
            let fm = self.loss(lambdas, &th)?;
            th[i] = x;
            g.push((fp - fm) / (2.0 * step));
        }
        Ok(g)
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.outcomes())
    }
}

/// Objective value for the observable `obs` at angles `theta`.
pub fn loss(obs: &ParamObservable, theta: &[f64], set: &TrainSet, config: &TrainConfig) -> Result<f64> {
    Problem::new(obs.circuit(), obs.m(), set, config)?.loss(obs.lambdas(), theta)
}

/// Finite-difference gradient over `(λ, θ)`.
pub fn gradient(obs: &ParamObservable, theta: &[f64], set: &TrainSet, config: &TrainConfig) -> Result<Vec<f64>> {
    Problem::new(obs.circuit(), obs.m(), set, config)?.gradient(obs.lambdas(), theta, config.grad_step)
}

/// Best of `config.restarts` BFGS runs from seeded random starts.
pub fn train(circuit: &Circuit, m: usize, set: &TrainSet, config: &TrainConfig) -> Result<TrainResult> {
    let problem = Problem::new(circuit, m, set, config)?;
    let opts = BfgsOptions { max_iters: config.max_iters, conv_tol: config.conv_tol, ..Default::default() };
    let mid = set.label_midpoint();
    let mut best: Option<TrainResult> = None;
    let mut restart_losses = Vec::with_capacity(config.restarts);
    for k in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        let mut x0: Vec<f64> = (0..problem.outcomes()).map(|_| mid + config.lambda_jitter * rng.random_range(-1.0..1.0)).collect();
        x0.extend((0..problem.param_count()).map(|_| rng.random_range(0.0..TAU)));
        let run = bfgs(
            |x| {
                let (l, t) = problem.split(x);
                problem.loss(l, t)
            },
            |x| {
                let (l, t) = problem.split(x);
                problem.gradient(l, t, config.grad_step)
            },
            x0,
            &opts,
        )?;
        restart_losses.push(run.value);
        if best.as_ref().is_none_or(|b| run.value < b.loss) {
            let (l, t) = problem.split(&run.x);
            best = Some(TrainResult {
                lambdas: l.to_vec(),
                theta: t.to_vec(),
                loss: run.value,
                loss_history: run.history,
                converged: run.converged,
                iterations: run.iterations,
                restart_losses: Vec::new(),
            });
        }
    }
    let mut best = best.expect("at least one restart");
    best.restart_losses = restart_losses;
    Ok(best)
}

impl TrainResult {
    pub fn observable(&self, circuit: &Circuit, m: usize) -> Result<ParamObservable> {
        ParamObservable::new(circuit.clone(), m, self.lambdas.clone())
    }
}
