//! Seeded random matrices and states for oracles and property tests.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{inner, normalized, DenseMatrix, ZERO};

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / 2f64.sqrt()
}

/// Haar-distributed unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    normalized(&v)
}

/// Real unit vector with Gaussian components.
pub fn random_real_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    normalized(&v)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DenseMatrix {
    let g = DenseMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Strictly positive Hermitian matrix `G·G† + 0.1·𝟙`.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DenseMatrix {
    let g = DenseMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    &g.matmul(&g.adjoint()) + &DenseMatrix::identity(dim).scale_real(0.1)
}

/// Full-rank density matrix drawn from the Hilbert–Schmidt ensemble.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DenseMatrix {
    let g = DenseMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    let w = g.matmul(&g.adjoint());
    let t = w.trace().re;
    w.scale_real(1.0 / t)
}

/// Orthonormalizes the columns of `m` (modified Gram–Schmidt).
pub fn orthonormalize_columns(m: &DenseMatrix) -> DenseMatrix {
    let d = m.dim();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = m.column(j);
        for q in &cols {
            let proj = inner(q, &v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= proj * y;
            }
        }
        cols.push(normalized(&v));
    }
    let mut out = DenseMatrix::zeros(d);
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Haar-random unitary: Gram–Schmidt on a complex Ginibre matrix. Modified
/// Gram–Schmidt already yields a positive diagonal in the implied `R`, so no
/// further phase correction is needed.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DenseMatrix {
    let g = DenseMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    orthonormalize_columns(&g)
}

/// Random unit vector orthogonal to `v`.
pub fn random_orthogonal_to<R: Rng + ?Sized>(rng: &mut R, v: &[C64]) -> Vec<C64> {
    let mut w = random_unit_vector(rng, v.len());
    let proj = inner(v, &w);
    for (x, y) in w.iter_mut().zip(v) {
        *x -= proj * y;
    }
    if w.iter().all(|x| *x == ZERO) {
        return w;
    }
    normalized(&w)
}
