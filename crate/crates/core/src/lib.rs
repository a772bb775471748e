//! Rank-constrained readout observables for regression on labeled quantum
//! states: dense simulation, Fisher-information bounds, closed-form optimal
//! observables for convex mixtures, and variational training.

pub mod circuits;
pub mod error;
pub mod experiment;
pub mod fisher;
pub mod hamiltonians;
pub mod linalg;
pub mod mixture;
pub mod observables;
pub mod optim;
pub mod random;
pub mod states;
pub mod training;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, EigenSystem};
