//! Ideal resources shared by several constructions.

use std::any::Any;

use crate::acframework::{AttackStrategy, Phase, Resource, Result};
use crate::qstate::{CQState, Register, BOT};

/// Shared secret key of `len` bits with a switch at E that prevents the key
/// from being generated; both parties then get ⊥.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyResource {
    pub len: usize,
}

impl KeyResource {
    pub fn new(len: usize) -> Self {
        Self { len }
    }

    pub fn registers(&self) -> Vec<Register> {
        vec![
            Register::with_bot("A.key", 1 << self.len),
            Register::with_bot("B.key", 1 << self.len),
        ]
    }

    pub fn state(&self, pressed: bool) -> Result<CQState> {
        let entries = if pressed {
            vec![(vec![BOT, BOT], 1.0)]
        } else {
            let n = 1u64 << self.len;
            (0..n).map(|k| (vec![k, k], 1.0 / n as f64)).collect()
        };
        Ok(CQState::classical(self.registers(), entries)?)
    }
}

impl Resource for KeyResource {
    fn name(&self) -> String {
        format!("key[{}]", self.len)
    }

    fn schedule(&self) -> Vec<Phase> {
        vec![Phase::Output]
    }

    fn evaluate(&self, attack: &AttackStrategy) -> Result<CQState> {
        self.state(attack.switch == Some(true))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Channel from A to B that leaks only the message length to E. The message
/// is the distinguisher input `A.msg`; pressing the switch blocks delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecureChannel {
    pub len: usize,
}

impl SecureChannel {
    pub fn new(len: usize) -> Self {
        Self { len }
    }
}

impl Resource for SecureChannel {
    fn name(&self) -> String {
        format!("secure[{}]", self.len)
    }

    fn schedule(&self) -> Vec<Phase> {
        vec![Phase::Output]
    }

    fn evaluate(&self, attack: &AttackStrategy) -> Result<CQState> {
        let x = attack.input("A.msg").unwrap_or(0) & crate::protocols::gf2::mask(self.len);
        let out = if attack.switch == Some(true) { BOT } else { x };
        let regs = vec![
            Register::with_bot("B.msg", 1 << self.len),
            Register::new("E.len", self.len as u64 + 1),
        ];
        Ok(CQState::classical(
            regs,
            vec![(vec![out, self.len as u64], 1.0)],
        )?)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
