use thiserror::Error;

/// Errors raised by the simulation, analysis and training routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not strictly positive (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("function undefined at eigenvalue {0:e}")]
    FunctionUndefined(f64),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("vectors are not orthogonal (overlap {0:e})")]
    NotOrthogonal(f64),

    #[error("parameter vector has length {found}, circuit expects {expected}")]
    ParamLength { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alpha {alpha} outside admissible range [{lo}, {hi}]")]
    OutOfRange { alpha: f64, lo: f64, hi: f64 },

    #[error("classical Fisher information diverges: outcome {outcome} has p = {prob:e} but dp = {deriv:e}")]
    CfiDivergence { outcome: usize, prob: f64, deriv: f64 },

    #[error("zero denominator with nonzero numerator at outcome {0}")]
    ZeroDenominator(usize),

    #[error("loss evaluated to a non-finite value")]
    NonFiniteLoss,

    #[error("circuit text parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
