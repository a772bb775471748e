//! Quasi-Newton minimization: BFGS inverse-Hessian updates with Armijo
//! backtracking.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Stop once the gradient max-norm drops below this.
    pub conv_tol: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iters: 500, conv_tol: 1e-7, armijo: 1e-4, max_backtracks: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective after initialization and after every accepted step.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Gradient max-norm fell below `conv_tol`.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` from `x0`. `grad` must return a vector of the same length.
pub fn bfgs(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    mut grad: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    x0: Vec<f64>,
    opts: &BfgsOptions,
) -> Result<BfgsResult> {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let mut g = grad(&x)?;
    if g.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.len() });
    }
    // Row-major inverse Hessian approximation.
    let mut h = identity(n);
    let mut fresh = true;
    let mut history = vec![fx];
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if max_norm(&g) < opts.conv_tol {
            break;
        }
        let mut d = mat_vec(&h, &g, n);
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ft = f(&trial)?;
            if ft.is_finite() && ft <= fx + opts.armijo * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                break;
            }
            // Retry once along steepest descent before giving up.
            h = identity(n);
            fresh = true;
            continue;
        };

        let g_new = grad(&x_new)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            update_inverse(&mut h, &s, &y, sy, n);
            fresh = false;
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        iterations += 1;
    }

    let converged = max_norm(&g) < opts.conv_tol;
    Ok(BfgsResult { x, value: fx, history, iterations, converged })
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&h[i * n..(i + 1) * n], v)).collect()
}

/// `H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ`, `ρ = 1/(yᵀs)`.
fn update_inverse(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    let coef = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
