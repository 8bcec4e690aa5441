//! Wegman–Carter authentication with affine / polynomial hashing over GF(2^b).
//!
//! The real system fuses the shared hashing key, the insecure channel and
//! both protocol converters: A sends (x, h_k(x)), E may substitute the pair,
//! B outputs x′ if the tag verifies and ⊥ otherwise. E's registers are the
//! observed pair (`E.x`, `E.y`) and the injected pair `E.inj`.

use std::any::Any;
use std::sync::Arc;

use rayon::prelude::*;

use crate::acframework::{
    switch_combine, AttackFamily, AttackStrategy, Converter, ConverterKind, Interface, Phase,
    Resource, Result as AcResult, SystemGraph, SystemState, TamperRule,
};
use crate::qstate::{CQState, CqBuilder, Register, Symbol, BOT};

use super::gf2::{mask, Bits, Gf2b};
use super::{ProtocolError, Result};

/// Work limit for exhaustive checks (pairs × keys).
const EXHAUSTIVE_CAP: u64 = 1 << 28;

/// h_{a,c}(x₁…x_L) = Σ_i x_i·a^i + c over GF(2^b). Keys are indexed a·2^b + c.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashFamily {
    field: Gf2b,
    blocks: usize,
}

impl HashFamily {
    pub fn new(bits: u32, blocks: usize) -> Result<Self> {
        let field = Gf2b::new(bits)?;
        if blocks == 0 || blocks * bits as usize > 32 {
            return Err(ProtocolError::InvalidParams(format!(
                "{blocks} blocks of {bits} bits"
            )));
        }
        Ok(Self { field, blocks })
    }

    pub fn affine(bits: u32) -> Result<Self> {
        Self::new(bits, 1)
    }

    pub fn block_bits(&self) -> u32 {
        self.field.bits()
    }

    pub fn max_blocks(&self) -> usize {
        self.blocks
    }

    pub fn message_bits(&self) -> usize {
        self.blocks * self.field.bits() as usize
    }

    pub fn message_space(&self) -> u64 {
        1 << self.message_bits()
    }

    pub fn tag_space(&self) -> u64 {
        self.field.size()
    }

    pub fn key_space(&self) -> u64 {
        self.field.size() * self.field.size()
    }

    /// Claimed ASU₂ parameter: L·2^{−b}.
    pub fn epsilon(&self) -> f64 {
        self.blocks as f64 / self.tag_space() as f64
    }

    pub fn eval(&self, key: u64, x: u64) -> u64 {
        let b = self.field.bits() as usize;
        let (a, c) = (key >> b, key & mask(b));
        let coeffs: Vec<u64> = (0..self.blocks).map(|i| x >> (i * b) & mask(b)).collect();
        self.field.eval_no_constant(&coeffs, a) ^ c
    }

    fn check_message(&self, x: Bits) -> Result<()> {
        let b = self.field.bits() as usize;
        let blocks = x.len.div_ceil(b);
        if blocks > self.blocks {
            return Err(ProtocolError::LengthOverflow {
                blocks,
                max: self.blocks,
            });
        }
        Ok(())
    }
}

/// x ↦ (x, h_k(x)).
pub fn auth_tag(fam: &HashFamily, key: u64, x: Bits) -> Result<(Bits, u64)> {
    fam.check_message(x)?;
    Ok((x, fam.eval(key, x.word)))
}

/// x′ if y′ = h_k(x′), otherwise None (⊥).
pub fn auth_verify(fam: &HashFamily, key: u64, x: Bits, y: u64) -> Result<Option<Bits>> {
    fam.check_message(x)?;
    Ok((fam.eval(key, x.word) == y).then_some(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Asu2Report {
    /// max over x ≠ x′, y, y′ of Pr_k[h(x) = y ∧ h(x′) = y′].
    pub max_joint: f64,
    /// ε·2^{−b}.
    pub joint_bound: f64,
    /// max |Pr_k[h(x) = y] − 2^{−b}|.
    pub uniformity_defect: f64,
    pub holds: bool,
}

/// Exhaustive check of the ε-ASU₂ property over all messages, tags and keys.
pub fn verify_asu2(fam: &HashFamily) -> Result<Asu2Report> {
    let (nx, nt, nk) = (fam.message_space(), fam.tag_space(), fam.key_space());
    if nx * nx * nk > EXHAUSTIVE_CAP {
        return Err(ProtocolError::InvalidParams(
            "family too large for exhaustive check".into(),
        ));
    }
    let tags: Vec<Vec<u64>> = (0..nx)
        .map(|x| (0..nk).map(|k| fam.eval(k, x)).collect())
        .collect();
    let mut defect = 0.0f64;
    for t in &tags {
        let mut hist = vec![0u64; nt as usize];
        for &y in t {
            hist[y as usize] += 1;
        }
        for &c in &hist {
            defect = defect.max((c as f64 / nk as f64 - 1.0 / nt as f64).abs());
        }
    }
    let max_count = (0..nx)
        .into_par_iter()
        .map(|x| {
            let mut best = 0u64;
            let mut hist = vec![0u64; (nt * nt) as usize];
            for x2 in (0..nx).filter(|&x2| x2 != x) {
                hist.iter_mut().for_each(|h| *h = 0);
                for k in 0..nk as usize {
                    let i = (tags[x as usize][k] * nt + tags[x2 as usize][k]) as usize;
                    hist[i] += 1;
                    best = best.max(hist[i]);
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    let max_joint = max_count as f64 / nk as f64;
    let joint_bound = fam.epsilon() / nt as f64;
    Ok(Asu2Report {
        max_joint,
        joint_bound,
        uniformity_defect: defect,
        holds: max_joint <= joint_bound + 1e-15 && defect <= 1e-15,
    })
}

fn auth_registers(fam: &HashFamily) -> Vec<Register> {
    vec![
        Register::with_bot("B.msg", fam.message_space()),
        Register::new("E.inj", fam.message_space() * fam.tag_space()),
        Register::new("E.x", fam.message_space()),
        Register::new("E.y", fam.tag_space()),
    ]
}

fn substitutions<'a>(rule: Option<&'a TamperRule>, x: u64, y: u64) -> Vec<((u64, u64), f64)> {
    match rule {
        Some(r) => r.apply(x, y).to_vec(),
        None => vec![((x, y), 1.0)],
    }
}

fn check_rule(fam: &HashFamily, attack: &AttackStrategy) -> AcResult<()> {
    if let Some(r) = &attack.tamper {
        if r.msgs() != fam.message_space() || r.tags() != fam.tag_space() {
            return Err(ProtocolError::InvalidParams(format!(
                "tamper rule over {}x{} pairs, channel carries {}x{}",
                r.msgs(),
                r.tags(),
                fam.message_space(),
                fam.tag_space()
            ))
            .into());
        }
    }
    Ok(())
}

/// Real authentication system: key, insecure channel and both protocols.
#[derive(Debug, Clone, Copy)]
pub struct AuthReal {
    pub fam: HashFamily,
}

impl Resource for AuthReal {
    fn name(&self) -> String {
        "auth_real".into()
    }

    fn schedule(&self) -> Vec<Phase> {
        vec![Phase::InsecureClassical, Phase::Output]
    }

    fn evaluate(&self, attack: &AttackStrategy) -> AcResult<CQState> {
        check_rule(&self.fam, attack)?;
        let fam = &self.fam;
        let x = attack.input("A.msg").unwrap_or(0) & (fam.message_space() - 1);
        let nk = fam.key_space();
        let nt = fam.tag_space();
        let mut b = CqBuilder::new(auth_registers(fam));
        for k in 0..nk {
            let y = fam.eval(k, x);
            for ((x2, y2), p) in substitutions(attack.tamper.as_deref(), x, y) {
                let out = if fam.eval(k, x2) == y2 { x2 } else { BOT };
                b.add_scalar(vec![out, x2 * nt + y2, x, y], p / nk as f64)?;
            }
        }
        Ok(b.finish()?)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Authentic channel: E reads x, the switch blocks delivery.
#[derive(Debug, Clone, Copy)]
pub struct AuthenticChannel {
    pub msg_space: u64,
}

impl Resource for AuthenticChannel {
    fn name(&self) -> String {
        "authentic".into()
    }

    fn schedule(&self) -> Vec<Phase> {
        vec![Phase::AuthenticClassical, Phase::Output]
    }

    fn evaluate(&self, attack: &AttackStrategy) -> AcResult<CQState> {
        let x = attack.input("A.msg").unwrap_or(0) & (self.msg_space - 1);
        let out = if attack.switch == Some(true) { BOT } else { x };
        let regs = vec![
            Register::with_bot("B.msg", self.msg_space),
            Register::new("E.x", self.msg_space),
        ];
        Ok(CQState::classical(regs, vec![(vec![out, x], 1.0)])?)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Simulator on the authentic channel: tags the leaked message with its own
/// key, lets the attack substitute, and presses the switch iff the pair was
/// modified.
#[derive(Debug, Clone, Copy)]
pub struct AuthSimulator {
    pub fam: HashFamily,
}

impl Converter for AuthSimulator {
    fn name(&self) -> String {
        "sigma_auth".into()
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Simulator
    }

    fn transform_only(&self) -> bool {
        false
    }

    fn outer_to_inner(&self, attack: &AttackStrategy) -> AttackStrategy {
        let mut a = AttackStrategy::identity();
        a.inputs = attack.inputs.clone();
        a
    }

    fn evaluate_through(
        &self,
        inner: &SystemGraph,
        attack: &AttackStrategy,
    ) -> AcResult<SystemState> {
        check_rule(&self.fam, attack)?;
        let fam = &self.fam;
        let base = self.outer_to_inner(attack);
        let leak = inner.evaluate_cq(&base.clone().with_switch(false))?;
        let xs = leak.marginal("E.x")?;
        let nk = fam.key_space();
        let nt = fam.tag_space();
        let regs = vec![
            Register::new("E.inj", fam.message_space() * nt),
            Register::new("E.y", nt),
            Register::new("sw", 2),
        ];
        let mut view = CqBuilder::new(regs);
        for (&x, &px) in &xs {
            for k in 0..nk {
                let y = fam.eval(k, x);
                for ((x2, y2), p) in substitutions(attack.tamper.as_deref(), x, y) {
                    let sw = Symbol::from((x2, y2) != (x, y));
                    view.add_scalar(vec![x2 * nt + y2, y, sw], px * p / nk as f64)?;
                }
            }
        }
        let view = view.finish()?;
        let out = switch_combine(&view, "sw", |pressed| {
            inner.evaluate_cq(&base.clone().with_switch(pressed))
        })?;
        Ok(SystemState::Single(out.canonical()))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn build_auth_systems(fam: HashFamily) -> AcResult<(SystemGraph, SystemGraph)> {
    let real = SystemGraph::leaf(AuthReal { fam });
    let ideal = SystemGraph::leaf(AuthenticChannel {
        msg_space: fam.message_space(),
    })
    .attach_converter(Arc::new(AuthSimulator { fam }), Interface::E)?;
    Ok((real, ideal))
}

/// For each observed tag y, the substitution (x′, y′) with x′ ≠ x that is
/// most likely to verify, found by enumerating keys.
pub fn optimal_substitution(fam: &HashFamily, x: u64) -> Result<TamperRule> {
    let (nx, nt, nk) = (fam.message_space(), fam.tag_space(), fam.key_space());
    let mut best: Vec<(u64, (u64, u64))> = vec![(0, (x, 0)); nt as usize];
    for x2 in (0..nx).filter(|&x2| x2 != x) {
        let mut hist = vec![0u64; (nt * nt) as usize];
        for k in 0..nk {
            hist[(fam.eval(k, x) * nt + fam.eval(k, x2)) as usize] += 1;
        }
        for y in 0..nt {
            for y2 in 0..nt {
                let c = hist[(y * nt + y2) as usize];
                if c > best[y as usize].0 {
                    best[y as usize] = (c, (x2, y2));
                }
            }
        }
    }
    Ok(TamperRule::deterministic(nx, nt, |xo, yo| {
        if xo == x {
            best[yo as usize].1
        } else {
            (xo, yo)
        }
    })?)
}

/// Substitution-attack family for input message `x`: identity, every
/// constant substitution (x′, y′), the per-tag optimal substitution, and the
/// uniformly random substitution.
pub fn substitution_family(fam: &HashFamily, x: u64) -> Result<AttackFamily> {
    let (nx, nt) = (fam.message_space(), fam.tag_space());
    let base = AttackStrategy::identity().with_input("A.msg", x);
    let mut f = AttackFamily::with_base(
        format!("substitution[b={},x={x}]", fam.block_bits()),
        base.clone(),
    );
    for x2 in 0..nx {
        for y2 in 0..nt {
            let rule = TamperRule::deterministic(nx, nt, |_, _| (x2, y2))?;
            let mut a = base.clone().with_tamper(rule);
            a.id = format!("const({x2},{y2})");
            f.add(a);
        }
    }
    let mut opt = base.clone().with_tamper(optimal_substitution(fam, x)?);
    opt.id = "optimal".into();
    f.add(opt);
    let uniform: Vec<((u64, u64), f64)> = (0..nx)
        .flat_map(|a| (0..nt).map(move |b| ((a, b), 1.0 / (nx * nt) as f64)))
        .collect();
    let rule = TamperRule::new(nx, nt, vec![uniform; (nx * nt) as usize])?;
    let mut rnd = base.with_tamper(rule);
    rnd.id = "random".into();
    f.add(rnd);
    Ok(f)
}

/// Product family for `copies` parallel instances: each copy faces no
/// tampering, the per-tag optimal substitution or a uniformly random one.
pub fn parallel_substitution_family(
    fam: &HashFamily,
    x: u64,
    copies: usize,
) -> Result<AttackFamily> {
    let single = substitution_family(fam, x)?;
    let mut per = AttackFamily::with_base("per-copy", single.members()[0].clone());
    for a in single
        .members()
        .iter()
        .filter(|a| a.id == "optimal" || a.id == "random")
    {
        per.add(a.clone());
    }
    let fams = vec![&per; copies];
    Ok(AttackFamily::product(format!("substitution^{copies}"), &fams).with_input("A.msg", x))
}

/// ℓ independent instances in parallel, real and ideal.
pub fn parallel_auth_systems(
    fam: HashFamily,
    copies: usize,
) -> AcResult<(SystemGraph, SystemGraph)> {
    let (r, i) = build_auth_systems(fam)?;
    let parts = |g: &SystemGraph| SystemGraph::Parallel {
        parts: vec![g.clone(); copies],
        joint: None,
    };
    Ok((parts(&r), parts(&i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acframework::advantage_over_family;

    #[test]
    fn tags_verify() {
        let fam = HashFamily::affine(3).unwrap();
        for k in 0..fam.key_space() {
            for x in 0..8 {
                let m = Bits::new(x, 3).unwrap();
                let (m, y) = auth_tag(&fam, k, m).unwrap();
                assert_eq!(auth_verify(&fam, k, m, y).unwrap(), Some(m));
            }
        }
        assert!(auth_tag(&fam, 0, Bits::new(0, 4).unwrap()).is_err());
    }

    #[test]
    fn affine_families_are_strongly_universal() {
        for b in 1..=4 {
            let r = verify_asu2(&HashFamily::affine(b).unwrap()).unwrap();
            assert!(r.holds, "b={b}: {r:?}");
            assert!((r.max_joint - 1.0 / (1u64 << (2 * b)) as f64).abs() < 1e-15);
        }
        let r = verify_asu2(&HashFamily::new(2, 2).unwrap()).unwrap();
        assert!(r.holds);
        assert!((r.joint_bound - 2.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn identity_attack_has_no_advantage() {
        let fam = HashFamily::affine(3).unwrap();
        let (real, ideal) = build_auth_systems(fam).unwrap();
        let a = AttackStrategy::identity().with_input("A.msg", 5);
        assert_eq!(
            real.evaluate(&a)
                .unwrap()
                .distance(&ideal.evaluate(&a).unwrap())
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn optimal_substitution_beats_every_function_at_b2() {
        // all functions tags -> (msg, tag) for a fixed x, at b = 2
        let fam = HashFamily::affine(2).unwrap();
        let (real, ideal) = build_auth_systems(fam).unwrap();
        let (nx, nt) = (fam.message_space(), fam.tag_space());
        let x = 1;
        let pairs = nx * nt;
        let mut brute = 0.0f64;
        for code in 0..pairs.pow(nt as u32) {
            let choice: Vec<(u64, u64)> = (0..nt)
                .map(|y| {
                    let c = code / pairs.pow(y as u32) % pairs;
                    (c / nt, c % nt)
                })
                .collect();
            let rule = TamperRule::deterministic(nx, nt, |xo, yo| {
                if xo == x {
                    choice[yo as usize]
                } else {
                    (xo, yo)
                }
            })
            .unwrap();
            let a = AttackStrategy::identity()
                .with_input("A.msg", x)
                .with_tamper(rule);
            let d = real
                .evaluate(&a)
                .unwrap()
                .distance(&ideal.evaluate(&a).unwrap())
                .unwrap();
            brute = brute.max(d);
        }
        let fam_report =
            advantage_over_family(&real, &ideal, &substitution_family(&fam, x).unwrap()).unwrap();
        assert!(
            (fam_report.value - brute).abs() < 1e-12,
            "{} vs {brute}",
            fam_report.value
        );
        assert!(brute <= fam.epsilon() + 1e-12);
    }
}
