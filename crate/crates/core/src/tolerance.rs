//! Numeric policy. Every tolerance used by checks and tests lives here.

/// Max |M − M†| accepted for a Hermitian operator.
pub const HERMITIAN: f64 = 1e-10;

/// Most negative eigenvalue accepted as "positive semidefinite".
pub const PSD: f64 = 1e-9;

/// Allowed |tr ρ − trace_mass|.
pub const TRACE: f64 = 1e-10;

/// Allowed normalisation defect of a classical distribution.
pub const DISTRIBUTION: f64 = 1e-12;

/// POVM completeness Σ Γ = I and channel trace preservation Σ K†K = I.
pub const COMPLETENESS: f64 = 1e-10;

/// Eigenvalues below this are treated as exactly zero in entropy sums.
pub const ENTROPY_ZERO: f64 = 1e-12;

/// Slack accepted on inequality checks (`holds` iff slack ≥ −BOUND).
pub const BOUND: f64 = 1e-9;

/// Equalities that should hold up to accumulated rounding in spectral work.
pub const SPECTRAL_EQ: f64 = 1e-9;

/// Equalities between purely classical sums.
pub const CLASSICAL_EQ: f64 = 1e-12;

/// Jacobi stopping criterion on the off-diagonal Frobenius norm, relative to max(1, ‖M‖_F).
pub const JACOBI_OFFDIAG_TARGET: f64 = 1e-12;

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Default cap on the total Hilbert-space dimension of any single operator.
pub const DEFAULT_MAX_DIMENSION: usize = 16384;

/// Branches with weight at or below this are dropped from cq states.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-18;
