//! Finite-dimensional quantum and classical state kernel.
//!
//! Everything in here is an immutable value: operations return new states
//! and never touch their inputs.

mod channel;
mod cq;
mod density;
mod distribution;
pub mod fixture;
mod povm;
mod random;

pub use channel::KrausChannel;
pub use cq::{Branch, CQState, CqBuilder, Register, Symbol, BOT};
pub use density::{DensityOperator, StateLimits};
pub use distribution::ClassicalDistribution;
pub use povm::{measure_povm, Povm};
pub use random::{
    derive_seed, random_channel, random_cq_state, random_density, random_density_with,
    random_distribution, random_hermitian, random_povm, seeded_rng,
};

use crate::linalg::EigError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("not Hermitian: max |M - M†| = {defect:e} exceeds {tolerance:e}")]
    NotHermitian { defect: f64, tolerance: f64 },
    #[error(
        "not positive semidefinite: smallest eigenvalue {min_eigenvalue:e} below -{tolerance:e}"
    )]
    NotPSD { min_eigenvalue: f64, tolerance: f64 },
    #[error("bad trace: expected {expected}, found {found} (defect {defect:e})")]
    BadTrace {
        expected: f64,
        found: f64,
        defect: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("total dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("partial trace must keep at least one factor")]
    EmptyKeep,
    #[error("factor index {index} out of range for {factors} factors")]
    BadFactor { index: usize, factors: usize },
    #[error("duplicate classical assignment {0:?}")]
    DuplicateAssignment(Vec<Symbol>),
    #[error("register `{register}` symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange {
        register: String,
        symbol: Symbol,
        size: u64,
    },
    #[error("register mismatch: {0}")]
    RegisterMismatch(String),
    #[error("invalid distribution: {0}")]
    BadDistribution(String),
    #[error("invalid POVM: {0}")]
    BadPovm(String),
    #[error("channel is not trace preserving: max |Σ K†K - I| = {defect:e}")]
    NotTracePreserving { defect: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("fixture parse error at line {line}: {message}")]
    Fixture { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Eig(#[from] EigError),
}

pub type Result<T> = std::result::Result<T, StateError>;

/// Product of factor dimensions, checked against `cap`.
pub(crate) fn total_dim(dims: &[usize], cap: usize) -> Result<usize> {
    let mut total: usize = 1;
    for &d in dims {
        total = total.checked_mul(d).ok_or(StateError::DimensionCap {
            dim: usize::MAX,
            cap,
        })?;
    }
    if total > cap {
        return Err(StateError::DimensionCap { dim: total, cap });
    }
    Ok(total)
}
