//! Distances, optimal discrimination, couplings, guessing probability and
//! entropy bounds. Logarithms are base 2 throughout.

mod check;
mod coupling;
mod distance;
mod entropy;
mod guess;

pub use check::{run_property_checks, PropertyReport};
pub use coupling::{couple_measurements, maximal_coupling, Coupling};
pub use distance::{
    cq_trace_distance, distinguishing_advantage, guessing_probability, helstrom_povm,
    helstrom_value, optimal_cq_povm, povm_guess_probability, product_trace_distance,
    total_variation, total_variation_min_form, trace_distance,
};
pub use entropy::{
    alt_secrecy_relation, binary_entropy, conditional_entropy, entropy_bounds, key_size,
    relative_entropy, relative_entropy_cq, secrecy_distance, side_marginal, uniform_key_distance,
    uniform_key_state, von_neumann_entropy,
};
pub use guess::pguess_exact;

use crate::linalg::EigError;
use crate::qstate::StateError;
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("alphabet mismatch: {0} vs {1} outcomes")]
    AlphabetMismatch(usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("register mismatch: {0}")]
    RegisterMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    State(#[from] StateError),
}

impl From<EigError> for MetricsError {
    fn from(e: EigError) -> Self {
        MetricsError::State(StateError::Eig(e))
    }
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Outcome of checking `left ≤ right`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub slack: f64,
    pub holds: bool,
    /// False when a precondition of the bound fails; `holds` is then vacuous.
    pub applicable: bool,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, left: f64, right: f64) -> Self {
        let slack = right - left;
        Self {
            name: name.into(),
            left,
            right,
            slack,
            holds: slack >= -tolerance::BOUND,
            applicable: true,
        }
    }

    pub fn not_applicable(name: impl Into<String>, left: f64, right: f64) -> Self {
        Self {
            holds: true,
            applicable: false,
            ..Self::new(name, left, right)
        }
    }
}
