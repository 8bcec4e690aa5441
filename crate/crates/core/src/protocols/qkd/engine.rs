//! Exact branch enumeration of toy BB84 runs.
//!
//! Alice prepares x_i in basis θ_i; Eve's per-position channel maps the qubit
//! to (qubit, environment); Bob measures in θ_i. The unnormalised operator
//! left with Eve for one position is
//!   M(x, θ_A, θ_B, y)[e, e′] = Σ_j ⟨y, e| K_j |x⟩⟨x| K_j† |y, e′⟩,
//! whose trace is Pr[y | x, θ_A, θ_B]. Positions in the sample have x, y and θ
//! announced, so their environment factor is a fixed function of the
//! transcript and is traced into the branch weight. Environments of the
//! raw-key positions are kept, as classical labels when every operator is
//! diagonal and as quantum factors otherwise.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::acframework::QuantumAttack;
use crate::linalg::{CMatrix, C64};
use crate::qstate::{CQState, CqBuilder, KrausChannel, Register, StateError, Symbol, BOT};

use super::super::gf2::mask;
use super::super::{ProtocolError, Result};
use super::params::QkdParams;

const MAX_ENV_DIM: usize = 4;
const WORK_CAP: f64 = 4.3e9;

fn qubit(bit: usize, basis: usize) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (z, o) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    match (basis, bit) {
        (0, 0) => [o, z],
        (0, _) => [z, o],
        (_, 0) => [C64::new(h, 0.0), C64::new(h, 0.0)],
        (_, _) => [C64::new(h, 0.0), C64::new(-h, 0.0)],
    }
}

/// Per-position table of Eve's operators, indexed by (x, θ_A, θ_B, y).
#[derive(Debug, Clone)]
pub(crate) struct SiteModel {
    pub env_dim: usize,
    ops: Vec<CMatrix>,
    probs: Vec<f64>,
    pub classical: bool,
}

fn idx(x: usize, ta: usize, tb: usize, y: usize) -> usize {
    ((x * 2 + ta) * 2 + tb) * 2 + y
}

impl SiteModel {
    pub fn new(ch: Option<&KrausChannel>) -> Result<Self> {
        let env_dim = match ch {
            None => 1,
            Some(c) => match c.out_dims() {
                [2] if c.in_dim() == 2 => 1,
                [2, e] if c.in_dim() == 2 && *e <= MAX_ENV_DIM => *e,
                d => {
                    return Err(ProtocolError::InvalidParams(format!(
                        "per-position channel must map a qubit to qubit ⊗ env (env ≤ {MAX_ENV_DIM}), got {}→{d:?}",
                        c.in_dim()
                    )))
                }
            },
        };
        let mut ops = Vec::with_capacity(16);
        let mut probs = Vec::with_capacity(16);
        for x in 0..2 {
            for ta in 0..2 {
                for tb in 0..2 {
                    for y in 0..2 {
                        let psi = qubit(x, ta);
                        let phi = qubit(y, tb);
                        let mut m = CMatrix::zeros(env_dim, env_dim);
                        match ch {
                            None => {
                                let amp = phi[0].conj() * psi[0] + phi[1].conj() * psi[1];
                                m[(0, 0)] = C64::new(amp.norm_sqr(), 0.0);
                            }
                            Some(c) => {
                                for k in c.kraus_ops() {
                                    let w: Vec<C64> = (0..env_dim)
                                        .map(|e| {
                                            (0..2)
                                                .map(|q| {
                                                    let r = q * env_dim + e;
                                                    phi[q].conj()
                                                        * (k[(r, 0)] * psi[0] + k[(r, 1)] * psi[1])
                                                })
                                                .sum()
                                        })
                                        .collect();
                                    for a in 0..env_dim {
                                        for b in 0..env_dim {
                                            m[(a, b)] += w[a] * w[b].conj();
                                        }
                                    }
                                }
                            }
                        }
                        probs.push(m.trace().re.max(0.0));
                        ops.push(m);
                    }
                }
            }
        }
        let classical = ops.iter().all(|m| {
            (0..env_dim).all(|a| (0..env_dim).all(|b| a == b || m[(a, b)].norm() <= 1e-15))
        });
        Ok(Self {
            env_dim,
            ops,
            probs,
            classical,
        })
    }

    fn prob(&self, x: usize, ta: usize, tb: usize, y: usize) -> f64 {
        self.probs[idx(x, ta, tb, y)]
    }

    fn op(&self, x: usize, ta: usize, tb: usize, y: usize) -> &CMatrix {
        &self.ops[idx(x, ta, tb, y)]
    }

    fn possible_outcomes(&self) -> usize {
        let any = |y: usize| (0..8usize).any(|j| self.probs[j * 2 + y] > 0.0);
        usize::from(any(0)) + usize::from(any(1))
    }
}

/// One BB84 instance in a (possibly joint) run.
pub(crate) struct InstanceSpec<'a> {
    pub params: &'a QkdParams,
    pub prefix: String,
    /// Channel per Bob position.
    pub sites: Vec<SiteModel>,
}

struct Subset {
    mask: u64,
    sample: Vec<usize>,
    rest: Vec<usize>,
}

struct Plan<'a> {
    p: &'a QkdParams,
    offset: usize,
    subsets: Vec<Subset>,
    decode: Vec<u64>,
    env_radix: usize,
}

fn subsets(n: usize, t: usize) -> Vec<Subset> {
    (0..1u64 << n)
        .filter(|s| s.count_ones() as usize == t)
        .map(|s| Subset {
            mask: s,
            sample: (0..n).filter(|i| s >> i & 1 == 1).collect(),
            rest: (0..n).filter(|i| s >> i & 1 == 0).collect(),
        })
        .collect()
}

/// decode[s · 2^m + y] = the x with H x = s nearest to y (smallest x on ties).
pub(crate) fn decode_table(p: &QkdParams) -> Vec<u64> {
    let m = p.m();
    let ns = 1usize << p.h_rows;
    let mut by_syn: Vec<Vec<u64>> = vec![Vec::new(); ns];
    for x in 0..1u64 << m {
        by_syn[p.h().mul_vec(x) as usize].push(x);
    }
    let mut table = vec![0u64; ns << m];
    for (s, cands) in by_syn.iter().enumerate() {
        for y in 0..1u64 << m {
            table[(s << m) | y as usize] = cands
                .iter()
                .copied()
                .min_by_key(|&x| ((x ^ y).count_ones(), x))
                .unwrap_or(0);
        }
    }
    table
}

fn pack(word: u64, positions: &[usize]) -> u64 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &i)| acc | (word >> i & 1) << j)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EnvMode {
    None,
    Classical,
    Quantum,
}

/// Registers of one instance, in canonical order.
pub(crate) fn instance_registers(
    p: &QkdParams,
    prefix: &str,
    env_size: Option<u64>,
) -> Vec<Register> {
    let mut r = vec![
        Register::with_bot(format!("{prefix}A.key"), 1 << p.out_len),
        Register::with_bot(format!("{prefix}B.key"), 1 << p.out_len),
        Register::new(format!("{prefix}E.abort"), 2),
        Register::new(format!("{prefix}E.bases"), 1 << p.n),
    ];
    if let Some(s) = env_size {
        r.push(Register::new(format!("{prefix}E.env"), s));
    }
    r.extend([
        Register::new(format!("{prefix}E.sample"), 1 << p.n),
        Register::with_bot(format!("{prefix}E.syn"), 1 << p.h_rows),
        Register::new(format!("{prefix}E.xs"), 1 << p.t),
        Register::new(format!("{prefix}E.ys"), 1 << p.t),
    ]);
    r
}

/// Per-instance outcome for one sampling choice.
struct Record {
    head: [Symbol; 4],
    tail: [Symbol; 4],
    weight: f64,
    kept: Vec<usize>,
}

enum Acc {
    Classical(BTreeMap<Vec<Symbol>, f64>),
    Quantum(BTreeMap<Vec<Symbol>, (Vec<usize>, CMatrix)>),
}

/// Exact joint run of one or more instances. `route[b]` is the global
/// preparation position whose qubit reaches global Bob position `b`.
pub(crate) fn run_instances(specs: &[InstanceSpec<'_>], route: &[usize]) -> Result<CQState> {
    let total: usize = specs.iter().map(|s| s.params.n).sum();
    let sites: Vec<&SiteModel> = specs.iter().flat_map(|s| s.sites.iter()).collect();
    if sites.len() != total || route.len() != total {
        return Err(ProtocolError::InvalidParams(
            "one channel and one route entry per position".into(),
        ));
    }
    let crossing = route.iter().enumerate().any(|(b, &a)| a != b);
    let mode = if sites.iter().all(|s| s.env_dim == 1) {
        EnvMode::None
    } else if crossing {
        return Err(ProtocolError::InvalidParams(
            "crossing strategies must use environment-free channels".into(),
        ));
    } else if sites.iter().all(|s| s.classical) {
        EnvMode::Classical
    } else {
        EnvMode::Quantum
    };

    let mut plans = Vec::with_capacity(specs.len());
    let mut offset = 0;
    for s in specs {
        let radix = s.sites.iter().map(|m| m.env_dim).max().unwrap_or(1);
        plans.push(Plan {
            p: s.params,
            offset,
            subsets: subsets(s.params.n, s.params.t),
            decode: decode_table(s.params),
            env_radix: radix,
        });
        offset += s.params.n;
    }
    let work: f64 = 4f64.powi(total as i32)
        * sites
            .iter()
            .map(|s| s.possible_outcomes() as f64)
            .product::<f64>()
        * plans
            .iter()
            .map(|p| p.subsets.len() as f64)
            .product::<f64>();
    if work > WORK_CAP {
        return Err(ProtocolError::State(StateError::DimensionCap {
            dim: work as usize,
            cap: WORK_CAP as usize,
        }));
    }

    let mut registers = Vec::new();
    for (s, plan) in specs.iter().zip(&plans) {
        let env = (mode == EnvMode::Classical && plan.env_radix > 1)
            .then(|| (plan.env_radix as u64).pow(plan.p.m() as u32));
        registers.extend(instance_registers(s.params, &s.prefix, env));
    }
    let prior = 0.25f64.powi(total as i32);

    let chunks: Vec<Acc> = (0..1u64 << total)
        .into_par_iter()
        .map(|theta| {
            let mut acc = match mode {
                EnvMode::Quantum => Acc::Quantum(BTreeMap::new()),
                _ => Acc::Classical(BTreeMap::new()),
            };
            for x in 0..1u64 << total {
                let mut ys = Vec::new();
                outcomes(&sites, route, theta, x, 0, 0, prior, &mut ys);
                for (y, w) in ys {
                    emit(&plans, &sites, route, mode, theta, x, y, w, &mut acc);
                }
            }
            acc
        })
        .collect();

    match mode {
        EnvMode::Quantum => {
            let mut b = CqBuilder::new(registers);
            for c in chunks {
                if let Acc::Quantum(map) = c {
                    for (a, (dims, m)) in map {
                        b.add(a, &dims, &m, 1.0)?;
                    }
                }
            }
            Ok(b.finish()?)
        }
        _ => {
            let mut merged: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
            for c in chunks {
                if let Acc::Classical(map) = c {
                    for (a, w) in map {
                        *merged.entry(a).or_insert(0.0) += w;
                    }
                }
            }
            Ok(CQState::classical(registers, merged.into_iter().collect())?)
        }
    }
}

/// Depth-first enumeration of Bob's outcomes with nonzero probability.
#[allow(clippy::too_many_arguments)]
fn outcomes(
    sites: &[&SiteModel],
    route: &[usize],
    theta: u64,
    x: u64,
    b: usize,
    y: u64,
    w: f64,
    out: &mut Vec<(u64, f64)>,
) {
    if b == sites.len() {
        out.push((y, w));
        return;
    }
    let a = route[b];
    let (xa, ta, tb) = (
        (x >> a & 1) as usize,
        (theta >> a & 1) as usize,
        (theta >> b & 1) as usize,
    );
    for yb in 0..2 {
        let p = sites[b].prob(xa, ta, tb, yb);
        if p > 0.0 {
            outcomes(
                sites,
                route,
                theta,
                x,
                b + 1,
                y | (yb as u64) << b,
                w * p,
                out,
            );
        }
    }
}

fn records(plan: &Plan<'_>, theta: u64, x: u64, y: u64) -> Vec<Record> {
    let p = plan.p;
    let n = p.n;
    let (th, xk, yk) = (
        theta >> plan.offset & mask(n),
        x >> plan.offset & mask(n),
        y >> plan.offset & mask(n),
    );
    let w = 1.0 / plan.subsets.len() as f64;
    plan.subsets
        .iter()
        .map(|s| {
            let errors = ((xk ^ yk) & s.mask).count_ones() as usize;
            let xs = pack(xk, &s.sample);
            let ys = pack(yk, &s.sample);
            let (ka, kb, abort, syn) = if p.aborts(errors) {
                (BOT, BOT, 1, BOT)
            } else {
                let xr = pack(xk, &s.rest);
                let yr = pack(yk, &s.rest);
                let syn = p.h().mul_vec(xr);
                let xhat = plan.decode[((syn as usize) << p.m()) | yr as usize];
                (p.pa().mul_vec(xr), p.pa().mul_vec(xhat), 0, syn)
            };
            Record {
                head: [ka, kb, abort, th],
                tail: [s.mask, syn, xs, ys],
                weight: w,
                kept: s.rest.iter().map(|&i| i + plan.offset).collect(),
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn emit(
    plans: &[Plan<'_>],
    sites: &[&SiteModel],
    route: &[usize],
    mode: EnvMode,
    theta: u64,
    x: u64,
    y: u64,
    w: f64,
    acc: &mut Acc,
) {
    let per: Vec<Vec<Record>> = plans.iter().map(|pl| records(pl, theta, x, y)).collect();
    let mut idx = vec![0usize; per.len()];
    let site_key = |b: usize| {
        let a = route[b];
        (
            (x >> a & 1) as usize,
            (theta >> a & 1) as usize,
            (theta >> b & 1) as usize,
            (y >> b & 1) as usize,
        )
    };
    loop {
        let chosen: Vec<&Record> = idx.iter().enumerate().map(|(k, &i)| &per[k][i]).collect();
        let weight = w * chosen.iter().map(|r| r.weight).product::<f64>();
        match (mode, &mut *acc) {
            (EnvMode::None, Acc::Classical(map)) => {
                let mut a = Vec::with_capacity(8 * chosen.len());
                for r in &chosen {
                    a.extend_from_slice(&r.head);
                    a.extend_from_slice(&r.tail);
                }
                *map.entry(a).or_insert(0.0) += weight;
            }
            (EnvMode::Classical, Acc::Classical(map)) => {
                // label distributions per instance, combined as a product
                let mut combos: Vec<(Vec<Symbol>, f64)> = vec![(Vec::new(), weight)];
                for (k, r) in chosen.iter().enumerate() {
                    let radix = plans[k].env_radix;
                    let mut labels: Vec<(Symbol, f64)> = vec![(0, 1.0)];
                    for (j, &b) in r.kept.iter().enumerate() {
                        let (xa, ta, tb, yb) = site_key(b);
                        let site = sites[b];
                        let m = site.op(xa, ta, tb, yb);
                        let pr = site.prob(xa, ta, tb, yb);
                        let scale = (radix as u64).pow(j as u32);
                        labels = labels
                            .iter()
                            .flat_map(|&(l, q)| {
                                (0..site.env_dim).filter_map(move |e| {
                                    let d = m[(e, e)].re / pr;
                                    (d > 0.0).then_some((l + e as u64 * scale, q * d))
                                })
                            })
                            .collect();
                    }
                    combos = combos
                        .iter()
                        .flat_map(|(a, q)| {
                            labels.iter().map(move |&(l, d)| {
                                let mut v = a.clone();
                                v.extend_from_slice(&r.head);
                                if radix > 1 {
                                    v.push(l);
                                }
                                v.extend_from_slice(&r.tail);
                                (v, q * d)
                            })
                        })
                        .collect();
                }
                for (a, q) in combos {
                    *map.entry(a).or_insert(0.0) += q;
                }
            }
            (EnvMode::Quantum, Acc::Quantum(map)) => {
                let mut a = Vec::with_capacity(8 * chosen.len());
                let mut dims = Vec::new();
                let mut op = CMatrix::identity(1);
                for r in &chosen {
                    a.extend_from_slice(&r.head);
                    a.extend_from_slice(&r.tail);
                    for &b in &r.kept {
                        let (xa, ta, tb, yb) = site_key(b);
                        let site = sites[b];
                        if site.env_dim > 1 {
                            op = op.kron(
                                &site
                                    .op(xa, ta, tb, yb)
                                    .scale(1.0 / site.prob(xa, ta, tb, yb)),
                            );
                            dims.push(site.env_dim);
                        }
                    }
                }
                if dims.is_empty() {
                    dims.push(1);
                }
                match map.get_mut(&a) {
                    Some((_, m)) => m.add_scaled(&op, weight),
                    None => {
                        map.insert(a, (dims, op.scale(weight)));
                    }
                }
            }
            _ => unreachable!("accumulator matches mode"),
        }
        let mut k = per.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Single-instance run under a per-position attack.
pub(crate) fn run_single(p: &QkdParams, attack: &QuantumAttack) -> Result<CQState> {
    let sites = (0..p.n)
        .map(|i| SiteModel::new(attack.channel_at(i)))
        .collect::<Result<Vec<_>>>()?;
    let spec = InstanceSpec {
        params: p,
        prefix: String::new(),
        sites,
    };
    let route: Vec<usize> = (0..p.n).collect();
    run_instances(&[spec], &route)
}

/// One environment-free run of a single instance before the key maps are
/// applied: bases, sample choice and the sampled and raw bit strings.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RawRecord {
    pub theta: u64,
    pub sample: u64,
    pub xs: u64,
    pub ys: u64,
    pub xr: u64,
    pub yr: u64,
    pub aborted: bool,
    pub weight: f64,
}

/// Every run of one instance under an environment-free per-position attack.
pub(crate) fn raw_records(p: &QkdParams, attack: &QuantumAttack) -> Result<Vec<RawRecord>> {
    let sites = (0..p.n)
        .map(|i| SiteModel::new(attack.channel_at(i)))
        .collect::<Result<Vec<_>>>()?;
    if sites.iter().any(|s| s.env_dim > 1) {
        return Err(ProtocolError::InvalidParams(
            "raw records need environment-free channels".into(),
        ));
    }
    let site_refs: Vec<&SiteModel> = sites.iter().collect();
    let route: Vec<usize> = (0..p.n).collect();
    let subs = subsets(p.n, p.t);
    let prior = 0.25f64.powi(p.n as i32) / subs.len() as f64;
    let mut out = Vec::new();
    for theta in 0..1u64 << p.n {
        for x in 0..1u64 << p.n {
            let mut ys = Vec::new();
            outcomes(&site_refs, &route, theta, x, 0, 0, prior, &mut ys);
            for (y, w) in ys {
                for s in &subs {
                    out.push(RawRecord {
                        theta,
                        sample: s.mask,
                        xs: pack(x, &s.sample),
                        ys: pack(y, &s.sample),
                        xr: pack(x, &s.rest),
                        yr: pack(y, &s.rest),
                        aborted: p.aborts(((x ^ y) & s.mask).count_ones() as usize),
                        weight: w,
                    });
                }
            }
        }
    }
    Ok(out)
}
