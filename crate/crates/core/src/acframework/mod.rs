//! Abstract-cryptography composition: resources, converters attached at
//! interfaces, serial and parallel composition, distinguishing advantage over
//! attack families, and epsilon bookkeeping.
//!
//! Register names follow `<I>.<name>` where `<I>` is the interface (A, B or E)
//! that sees the register. Parallel components are namespaced with `1:`, `2:`.

mod advantage;
mod attack;
mod converters;
mod ledger;
mod system;

pub use advantage::{advantage_over_family, security_check, AdvantageReport, SecurityReport};
pub use attack::{AttackFamily, AttackStrategy, ParamFamily, QuantumAttack, TamperRule};
pub use converters::{DiscardFilter, IdealFilter, IdentityConverter, Serial};
pub use ledger::{EpsilonLedger, EpsilonSource, LedgerEntry};
pub use system::{
    interface_of, switch_combine, Converter, ConverterKind, JointEvaluator, Phase, Resource,
    SystemGraph, SystemState,
};

use std::fmt;

use crate::metrics::MetricsError;
use crate::qstate::StateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interface {
    A,
    B,
    E,
}

impl Interface {
    pub fn prefix(self) -> &'static str {
        match self {
            Interface::A => "A.",
            Interface::B => "B.",
            Interface::E => "E.",
        }
    }
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Interface::A => "A",
            Interface::B => "B",
            Interface::E => "E",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AcError {
    #[error("arity mismatch at interface {iface}: converter expects {expected} ports, system has {found}")]
    ArityMismatch {
        iface: Interface,
        expected: usize,
        found: usize,
    },
    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),
    #[error("invalid attack: {0}")]
    InvalidAttack(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    State(#[from] StateError),
}

pub type Result<T> = std::result::Result<T, AcError>;
