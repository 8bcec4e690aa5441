//! Concrete constructions: one-time pad, Wegman–Carter authentication,
//! a toy BB84 key distribution protocol, and their compositions.

mod auth;
pub mod gf2;
mod locking;
mod otp;
pub mod qkd;
mod resources;
mod scenarios;

pub use auth::{
    auth_tag, auth_verify, build_auth_systems, optimal_substitution, parallel_auth_systems,
    parallel_substitution_family, substitution_family, verify_asu2, Asu2Report, AuthReal,
    AuthSimulator, AuthenticChannel, HashFamily,
};
pub use gf2::{BitMatrix, Bits, Gf2b};
pub use locking::{locking_demo, locking_state, mutual_information, LockingReport};
pub use otp::{
    attach_otp, build_otp_systems, otp_advantage, otp_decrypt, otp_encrypt, OtpRecv, OtpSend,
    OtpSimulator,
};
pub use qkd::{
    build_qkd_systems, depolarize, honest_noise, intercept_resend, parallel_qkd_systems,
    standard_family, LeakConverter, QkdParams, QkdReal, QkdSimulator,
};
pub use resources::{KeyResource, SecureChannel};
pub use scenarios::{
    leaked_key_scenario, parallel_qkd_scenario, qkd_otp_scenario, swap_attack, LeakedKeyReport,
    ParallelQkdReport, QkdOtpReport,
};

use crate::acframework::AcError;
use crate::metrics::MetricsError;
use crate::qstate::StateError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("message of {blocks} blocks exceeds the family limit of {max}")]
    LengthOverflow { blocks: usize, max: usize },
    #[error("key budget exhausted: need {need} bits, round produces {have}")]
    KeyBudgetExhausted { need: usize, have: usize },
    #[error(transparent)]
    Framework(AcError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    State(#[from] StateError),
}

impl From<AcError> for ProtocolError {
    fn from(e: AcError) -> Self {
        match e {
            AcError::Metrics(m) => ProtocolError::Metrics(m),
            AcError::State(s) => ProtocolError::State(s),
            other => ProtocolError::Framework(other),
        }
    }
}

impl From<ProtocolError> for AcError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Framework(a) => a,
            ProtocolError::Metrics(m) => AcError::Metrics(m),
            ProtocolError::State(s) => AcError::State(s),
            other => AcError::Protocol(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, ProtocolError>;
