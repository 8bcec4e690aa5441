//! Key expansion: QKD rounds whose syndrome is authenticated with key bits
//! kept from the previous round.
//!
//! Eve's per-round transcript is summarised by its class: transcripts whose
//! joint (input keys, output keys) weight vectors are proportional are merged.
//! The real/ideal distance is positively homogeneous in these vectors, so the
//! summary leaves it unchanged.

use std::any::Any;
use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::acframework::{
    advantage_over_family, AcError, AdvantageReport, AttackFamily, AttackStrategy, Converter,
    ConverterKind, EpsilonLedger, EpsilonSource, Interface, Phase, Resource, Result as AcResult,
    SystemGraph, SystemState, TamperRule,
};
use crate::metrics::BoundReport;
use crate::qstate::{CQState, Register, Symbol, BOT};

use super::super::gf2::mask;
use super::super::{verify_asu2, HashFamily, KeyResource, ProtocolError, Result};
use super::engine::{decode_table, raw_records, RawRecord};
use super::params::QkdParams;
use super::security::qkd_security_eval;
use super::systems::simulate_from_real;

const SKIPPED: u64 = 2;

/// Real system: `rounds` QKD rounds, the first authenticated with a shared
/// initial key of `key_bits` bits, each later one with the low `key_bits`
/// bits of the previous round's key. Outputs the last round's key.
#[derive(Debug, Clone)]
pub struct KeyExpansionReal {
    pub params: QkdParams,
    pub auth: HashFamily,
    pub rounds: usize,
    /// Merge transcripts into classes (exact for the real/ideal distance).
    pub merge: bool,
}

impl KeyExpansionReal {
    pub fn new(params: QkdParams, auth: HashFamily, rounds: usize) -> Result<Self> {
        let need = key_bits(&auth);
        if params.out_len < need {
            return Err(ProtocolError::KeyBudgetExhausted {
                need,
                have: params.out_len,
            });
        }
        if params.h_rows > auth.message_bits() {
            return Err(ProtocolError::InvalidParams(format!(
                "syndrome of {} bits exceeds the hash message length {}",
                params.h_rows,
                auth.message_bits()
            )));
        }
        Ok(Self {
            params,
            auth,
            rounds,
            merge: true,
        })
    }

    fn pairs(&self) -> usize {
        let k = (1usize << self.params.out_len) + 1;
        k * k
    }

    fn pair_index(&self, ka: Symbol, kb: Symbol) -> usize {
        let k = (1u64 << self.params.out_len) + 1;
        let f = |s: Symbol| if s == BOT { k - 1 } else { s };
        (f(ka) * k + f(kb)) as usize
    }

    fn pair(&self, i: usize) -> (Symbol, Symbol) {
        let k = (1usize << self.params.out_len) + 1;
        let f = |s: usize| if s == k - 1 { BOT } else { s as Symbol };
        (f(i / k), f(i % k))
    }

    /// Outcomes of one round for input keys (ka, kb): (transcript, K_A, K_B, weight).
    fn round(
        &self,
        records: &[RawRecord],
        decode: &[u64],
        tamper: Option<&TamperRule>,
        ka: Symbol,
        kb: Symbol,
    ) -> Vec<(Vec<u64>, Symbol, Symbol, f64)> {
        if ka == BOT || kb == BOT {
            return vec![(vec![SKIPPED], BOT, BOT, 1.0)];
        }
        let p = &self.params;
        let kmask = mask(key_bits(&self.auth));
        let mut out = Vec::new();
        for r in records {
            let head = vec![r.theta, r.sample, r.xs, r.ys];
            if r.aborted {
                let mut t = head;
                t.push(1);
                out.push((t, BOT, BOT, r.weight));
                continue;
            }
            let syn = p.h().mul_vec(r.xr);
            let tag = self.auth.eval(ka & kmask, syn);
            let honest = [((syn, tag), 1.0)];
            let subs = tamper.map_or(&honest[..], |t| t.apply(syn, tag));
            for &((s2, g2), q) in subs {
                let accept = self.auth.eval(kb & kmask, s2) == g2;
                let mut t = head.clone();
                t.extend([0, syn, tag, s2, g2, u64::from(accept)]);
                let (a, b) = if accept {
                    let xhat = decode[((s2 as usize) << p.m()) | r.yr as usize];
                    (p.pa().mul_vec(r.xr), p.pa().mul_vec(xhat))
                } else {
                    (BOT, BOT)
                };
                out.push((t, a, b, r.weight * q));
            }
        }
        out
    }

    /// Per-round labels (transcript ids or classes) with their weight
    /// matrices over (input pair, output pair).
    fn round_table(&self, attack: &AttackStrategy, inputs: &[usize]) -> AcResult<Vec<Vec<f64>>> {
        if attack.is_crossing() || !attack.parts.is_empty() {
            return Err(AcError::InvalidAttack(
                "per-round strategies must be simple".into(),
            ));
        }
        if let Some(t) = &attack.tamper {
            if t.msgs() != 1 << self.params.h_rows || t.tags() != self.auth.tag_space() {
                return Err(AcError::InvalidAttack(
                    "tamper rule does not match syndrome and tag spaces".into(),
                ));
            }
        }
        let records = raw_records(&self.params, &attack.quantum)?;
        let decode = decode_table(&self.params);
        let np = self.pairs();
        let mut table: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
        for &i in inputs {
            let (ka, kb) = self.pair(i);
            for (t, a, b, w) in self.round(&records, &decode, attack.tamper.as_deref(), ka, kb) {
                let row = table.entry(t).or_insert_with(|| vec![0.0; np * np]);
                row[i * np + self.pair_index(a, b)] += w;
            }
        }
        if !self.merge {
            return Ok(table.into_values().collect());
        }
        let mut classes: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
        for v in table.into_values() {
            let s: f64 = v.iter().sum();
            let key = v.iter().map(|x| (x / s * 1e12).round() as i64).collect();
            let c = classes.entry(key).or_insert_with(|| vec![0.0; v.len()]);
            for (acc, x) in c.iter_mut().zip(&v) {
                *acc += x;
            }
        }
        Ok(classes.into_values().collect())
    }

    fn run(&self, attack: &AttackStrategy) -> AcResult<CQState> {
        let np = self.pairs();
        let init = 1u64 << key_bits(&self.auth);
        // view labels per round → weight over the current key pair
        let mut cur: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
        let mut start = vec![0.0; np];
        for k in 0..init {
            start[self.pair_index(k, k)] = 1.0 / init as f64;
        }
        cur.insert(Vec::new(), start);
        let mut sizes = Vec::with_capacity(self.rounds);
        for r in 0..self.rounds {
            let live: Vec<usize> = (0..np)
                .filter(|&i| cur.values().any(|v| v[i] > 0.0))
                .collect();
            let table = self.round_table(&attack.part(r), &live)?;
            sizes.push(table.len() as u64);
            let mut next = BTreeMap::new();
            for (view, v) in &cur {
                for (c, m) in table.iter().enumerate() {
                    let mut out = vec![0.0; np];
                    for &i in &live {
                        if v[i] == 0.0 {
                            continue;
                        }
                        for (j, o) in out.iter_mut().enumerate() {
                            *o += v[i] * m[i * np + j];
                        }
                    }
                    if out.iter().any(|&x| x > 0.0) {
                        let mut key = view.clone();
                        key.push(c as u64);
                        next.insert(key, out);
                    }
                }
            }
            cur = next;
        }
        let out_size = 1u64 << self.params.out_len;
        let mut regs = vec![
            Register::with_bot("A.key", out_size),
            Register::with_bot("B.key", out_size),
            Register::new("E.abort", 2),
        ];
        regs.extend(
            sizes
                .iter()
                .enumerate()
                .map(|(r, &s)| Register::new(format!("{}:E.view", r + 1), s)),
        );
        let mut entries = Vec::new();
        for (view, v) in cur {
            for (j, &w) in v.iter().enumerate() {
                if w > 0.0 {
                    let (a, b) = self.pair(j);
                    let mut asg = vec![a, b, u64::from(a == BOT)];
                    asg.extend(&view);
                    entries.push((asg, w));
                }
            }
        }
        Ok(CQState::classical(regs, entries)?.canonical())
    }
}

fn key_bits(auth: &HashFamily) -> usize {
    auth.key_space().trailing_zeros() as usize
}

impl Resource for KeyExpansionReal {
    fn name(&self) -> String {
        format!("key-expansion[{}]", self.rounds)
    }

    fn schedule(&self) -> Vec<Phase> {
        vec![
            Phase::QuantumTransmission,
            Phase::InsecureClassical,
            Phase::Output,
        ]
    }

    fn evaluate(&self, attack: &AttackStrategy) -> AcResult<CQState> {
        self.run(attack)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Simulator for the whole expansion: runs it internally and presses the
/// key resource's switch iff the last round aborts.
#[derive(Debug, Clone)]
pub struct KeyExpansionSimulator {
    pub real: KeyExpansionReal,
}

impl Converter for KeyExpansionSimulator {
    fn name(&self) -> String {
        "sigma_expansion".into()
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Simulator
    }

    fn transform_only(&self) -> bool {
        false
    }

    fn evaluate_through(
        &self,
        inner: &SystemGraph,
        attack: &AttackStrategy,
    ) -> AcResult<SystemState> {
        let real = self.real.run(attack)?;
        simulate_from_real(&real, inner, attack)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn build_expansion_systems(real: &KeyExpansionReal) -> AcResult<(SystemGraph, SystemGraph)> {
    let ideal = SystemGraph::leaf(KeyResource::new(real.params.out_len)).attach_converter(
        Arc::new(KeyExpansionSimulator { real: real.clone() }),
        Interface::E,
    )?;
    Ok((SystemGraph::leaf(real.clone()), ideal))
}

/// Per-round strategies: each quantum strategy of `quantum` combined with no
/// tampering, a flipped syndrome bit and a flipped tag bit.
pub fn expansion_round_family(
    quantum: &AttackFamily,
    p: &QkdParams,
    auth: &HashFamily,
) -> Result<AttackFamily> {
    let (msgs, tags) = (1u64 << p.h_rows, auth.tag_space());
    let rules = [
        (
            "flip-syndrome",
            TamperRule::deterministic(msgs, tags, |x, y| (x ^ 1, y))?,
        ),
        (
            "flip-tag",
            TamperRule::deterministic(msgs, tags, |x, y| (x, y ^ 1))?,
        ),
    ];
    let mut fam = AttackFamily::new(format!("{}+tamper", quantum.name));
    for a in quantum.expand() {
        if a.id != "identity" {
            fam.add(a.clone());
        }
        for (name, rule) in &rules {
            let mut t = a.clone().with_tamper(rule.clone());
            t.id = format!("{}+{name}", a.id);
            fam.add(t);
        }
    }
    Ok(fam)
}

#[derive(Debug, Clone)]
pub struct KeyExpansionReport {
    pub rounds: usize,
    pub eps_auth: f64,
    pub eps_qkd: f64,
    pub ledger: EpsilonLedger,
    /// |ledger total − rounds·(ε_auth + ε_qkd)| against 0.
    pub ledger_exact: BoundReport,
    /// Composed advantage over the product of per-round families, when measured.
    pub measured: Option<AdvantageReport>,
    /// Measured advantage against the ledger total.
    pub report: Option<BoundReport>,
}

/// Largest number of rounds for which the composed advantage is measured.
pub const MAX_MEASURED_ROUNDS: usize = 2;

/// Builds the ledger and, for at most two rounds, measures the composed
/// real/ideal advantage. ε_auth is the hash family's verified ε; ε_qkd is the
/// single-round ε_cor + ε_sec over `quantum`.
pub fn key_expansion(
    rounds: usize,
    auth: &HashFamily,
    p: &QkdParams,
    quantum: &AttackFamily,
) -> Result<KeyExpansionReport> {
    let real = KeyExpansionReal::new(p.clone(), auth.clone(), rounds)?;
    let asu2 = verify_asu2(auth)?;
    if !asu2.holds {
        return Err(ProtocolError::InvalidParams(
            "hash family is not ε-ASU₂".into(),
        ));
    }
    let eps_auth = auth.epsilon();
    let eps_qkd = qkd_security_eval(p, quantum)?.thm1.right;
    let mut ledger = EpsilonLedger::new();
    for r in 1..=rounds {
        ledger = ledger
            .with(format!("{r}:auth"), eps_auth, EpsilonSource::Measured)
            .with(format!("{r}:qkd"), eps_qkd, EpsilonSource::Measured);
    }
    let ledger_exact = BoundReport::new(
        "ledger_total",
        (ledger.total() - rounds as f64 * (eps_auth + eps_qkd)).abs(),
        0.0,
    );
    let (measured, report) = if (1..=MAX_MEASURED_ROUNDS).contains(&rounds) {
        let round_fam = expansion_round_family(quantum, p, auth)?;
        let fams: Vec<&AttackFamily> = vec![&round_fam; rounds];
        let fam = AttackFamily::product(format!("{}^{rounds}", round_fam.name), &fams);
        let (r, i) = build_expansion_systems(&real)?;
        let adv = advantage_over_family(&r, &i, &fam)?;
        let rep = ledger.check("composed_le_ledger", adv.value);
        (Some(adv), Some(rep))
    } else {
        (None, None)
    };
    Ok(KeyExpansionReport {
        rounds,
        eps_auth,
        eps_qkd,
        ledger,
        ledger_exact,
        measured,
        report,
    })
}

/// Advantage of every member, evaluated directly on the real state.
pub fn expansion_advantages(
    real: &KeyExpansionReal,
    fam: &AttackFamily,
) -> Result<Vec<(String, f64)>> {
    let (r, i) = build_expansion_systems(real)?;
    fam.expand()
        .par_iter()
        .map(|a| Ok((a.id.clone(), r.evaluate(a)?.distance(&i.evaluate(a)?)?)))
        .collect()
}
