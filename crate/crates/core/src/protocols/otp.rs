//! One-time pad over a shared key and an authentic channel.
//!
//! The sender converter reads `A.key` and the message input `A.msg` and puts
//! the ciphertext on the authentic channel, where E reads it as `E.ct`
//! together with its length `E.len`. The receiver converter decrypts with
//! `B.key`. Attach the sender before the receiver.

use std::any::Any;
use std::sync::Arc;

use crate::acframework::{
    AttackStrategy, Converter, ConverterKind, Interface, Result as AcResult, SystemGraph,
    SystemState,
};
use crate::qstate::{CQState, Register, Symbol, BOT};

use super::gf2::{mask, Bits};
use super::resources::{KeyResource, SecureChannel};
use super::{ProtocolError, Result};

pub fn otp_encrypt(x: Bits, k: Bits) -> Result<Bits> {
    if x.len != k.len {
        return Err(ProtocolError::LengthMismatch {
            expected: k.len,
            found: x.len,
        });
    }
    Ok(Bits {
        word: x.word ^ k.word,
        len: x.len,
    })
}

pub fn otp_decrypt(y: Bits, k: Bits) -> Result<Bits> {
    otp_encrypt(y, k)
}

fn ct_register(len: usize) -> Register {
    Register::with_bot("E.ct", 1 << len)
}

fn len_register(len: usize) -> Register {
    Register::new("E.len", len as u64 + 1)
}

/// Sender side: consumes `A.key`, emits `E.ct` and `E.len`.
#[derive(Debug, Clone, Copy)]
pub struct OtpSend {
    pub len: usize,
}

impl Converter for OtpSend {
    fn name(&self) -> String {
        "otp_send".into()
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Protocol
    }

    fn transform(&self, state: SystemState, attack: &AttackStrategy) -> AcResult<SystemState> {
        let s = state.materialize()?;
        let x = attack.input("A.msg").unwrap_or(0) & mask(self.len);
        let ki = s.register_index("A.key")?;
        let mut regs: Vec<Register> = s.registers().to_vec();
        regs[ki] = ct_register(self.len);
        regs.push(len_register(self.len));
        let len = self.len as Symbol;
        let out = s.map_assignments(regs, |a| {
            let mut v = a.to_vec();
            v[ki] = if a[ki] == BOT { BOT } else { a[ki] ^ x };
            v.push(len);
            v
        })?;
        Ok(SystemState::Single(out.canonical()))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Receiver side: consumes `B.key`, emits `B.msg` = `E.ct` ⊕ key.
#[derive(Debug, Clone, Copy)]
pub struct OtpRecv {
    pub len: usize,
}

impl Converter for OtpRecv {
    fn name(&self) -> String {
        "otp_recv".into()
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Protocol
    }

    fn transform(&self, state: SystemState, _attack: &AttackStrategy) -> AcResult<SystemState> {
        let s = state.materialize()?;
        let ki = s.register_index("B.key")?;
        let ci = s.register_index("E.ct")?;
        let mut regs: Vec<Register> = s.registers().to_vec();
        regs[ki] = Register::with_bot("B.msg", 1 << self.len);
        let out = s.map_assignments(regs, |a| {
            let mut v = a.to_vec();
            v[ki] = if a[ki] == BOT || a[ci] == BOT {
                BOT
            } else {
                a[ki] ^ a[ci]
            };
            v
        })?;
        Ok(SystemState::Single(out.canonical()))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Simulator on the secure channel: forwards the switch and emits a uniform
/// string of the leaked length, or ⊥ when it blocked delivery.
#[derive(Debug, Clone, Copy)]
pub struct OtpSimulator {
    pub len: usize,
}

impl Converter for OtpSimulator {
    fn name(&self) -> String {
        "sigma_otp".into()
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Simulator
    }

    fn transform(&self, state: SystemState, attack: &AttackStrategy) -> AcResult<SystemState> {
        let s = state.materialize()?;
        let entries: Vec<(Vec<Symbol>, f64)> = if attack.switch == Some(true) {
            vec![(vec![BOT], 1.0)]
        } else {
            let n = 1u64 << self.len;
            (0..n).map(|y| (vec![y], 1.0 / n as f64)).collect()
        };
        let ct = CQState::classical(vec![ct_register(self.len)], entries)?;
        Ok(SystemState::Single(s.tensor(&ct)?.canonical()))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Attaches the OTP sender at A and receiver at B of a key-producing system.
pub fn attach_otp(key_system: &SystemGraph, len: usize) -> AcResult<SystemGraph> {
    key_system
        .attach(OtpSend { len }, Interface::A)?
        .attach(OtpRecv { len }, Interface::B)
}

/// Real OTP over a perfect key, and the secure channel with its simulator.
pub fn build_otp_systems(len: usize) -> Result<(SystemGraph, SystemGraph)> {
    if !(1..=16).contains(&len) {
        return Err(ProtocolError::InvalidParams(format!(
            "message length {len} outside 1..=16"
        )));
    }
    let real = attach_otp(&SystemGraph::leaf(KeyResource::new(len)), len)?;
    let ideal = SystemGraph::leaf(SecureChannel::new(len))
        .attach_converter(Arc::new(OtpSimulator { len }), Interface::E)?;
    Ok((real, ideal))
}

/// Worst distance between the real and ideal systems over every message of
/// `len` bits, with the switch pressed and released.
pub fn otp_advantage(len: usize) -> Result<f64> {
    let (real, ideal) = build_otp_systems(len)?;
    let mut worst = 0.0f64;
    for x in 0..1u64 << len {
        for sw in [false, true] {
            let a = AttackStrategy::identity()
                .with_input("A.msg", x)
                .with_switch(sw);
            worst = worst.max(real.evaluate(&a)?.distance(&ideal.evaluate(&a)?)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encrypt_examples() {
        let x = Bits::parse("0110").unwrap();
        assert_eq!(otp_encrypt(x, Bits::parse("0000").unwrap()).unwrap(), x);
        assert_eq!(otp_encrypt(x, x).unwrap().to_string(), "0000");
        assert!(otp_encrypt(x, Bits::parse("01").unwrap()).is_err());
    }

    #[test]
    fn round_trip_exhaustive() {
        for len in 0..=8 {
            for x in 0..1u64 << len {
                for k in 0..1u64 << len {
                    let (x, k) = (Bits::new(x, len).unwrap(), Bits::new(k, len).unwrap());
                    assert_eq!(otp_decrypt(otp_encrypt(x, k).unwrap(), k).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn ciphertext_uniform_and_message_delivered() {
        let (real, _) = build_otp_systems(3).unwrap();
        let s = real
            .evaluate_cq(&AttackStrategy::identity().with_input("A.msg", 5))
            .unwrap();
        assert_eq!(s.register_names(), ["B.msg", "E.ct", "E.len"]);
        let ct = s.marginal("E.ct").unwrap();
        assert_eq!(ct.len(), 8);
        assert!(ct.values().all(|&p| (p - 0.125).abs() < 1e-15));
        assert_eq!(s.marginal("B.msg").unwrap().get(&5), Some(&1.0));
    }

    #[test]
    fn switch_blocks_both_sides() {
        let (real, ideal) = build_otp_systems(2).unwrap();
        let a = AttackStrategy::identity()
            .with_switch(true)
            .with_input("A.msg", 1);
        let r = real.evaluate_cq(&a).unwrap();
        assert_eq!(r, ideal.evaluate_cq(&a).unwrap());
        assert_eq!(r.marginal("B.msg").unwrap().get(&BOT), Some(&1.0));
    }
}
