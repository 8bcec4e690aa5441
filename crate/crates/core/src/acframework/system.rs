use std::any::Any;
use std::sync::Arc;

use crate::metrics::{cq_trace_distance, product_trace_distance};
use crate::qstate::{CQState, Register};

use super::attack::AttackStrategy;
use super::{AcError, Interface, Result};

/// Rounds of interaction a resource exposes to the adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    QuantumTransmission,
    AuthenticClassical,
    InsecureClassical,
    Output,
}

/// Interface that sees a register, read off its name (`1:E.env` → E).
pub fn interface_of(name: &str) -> Option<Interface> {
    let local = name.rsplit(':').next().unwrap_or(name);
    match local.split_once('.') {
        Some(("A", _)) => Some(Interface::A),
        Some(("B", _)) => Some(Interface::B),
        Some(("E", _)) => Some(Interface::E),
        _ => None,
    }
}

/// Outcome of running a system: a single cq state or a lazy tensor product
/// of independent components.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemState {
    Single(CQState),
    Product(Vec<SystemState>),
}

impl SystemState {
    pub fn factors(&self) -> Vec<&CQState> {
        match self {
            SystemState::Single(s) => vec![s],
            SystemState::Product(v) => v.iter().flat_map(|s| s.factors()).collect(),
        }
    }

    /// The full state with registers in canonical order.
    pub fn materialize(&self) -> Result<CQState> {
        let mut it = self.factors().into_iter();
        let first = it.next().cloned().unwrap_or_else(|| {
            CQState::classical(Vec::new(), vec![(Vec::new(), 1.0)]).expect("trivial state")
        });
        let mut acc = first;
        for f in it {
            acc = acc.tensor(f)?;
        }
        Ok(acc.canonical())
    }

    pub fn prefixed(&self, prefix: &str) -> Self {
        match self {
            SystemState::Single(s) => SystemState::Single(s.prefixed(prefix)),
            SystemState::Product(v) => {
                SystemState::Product(v.iter().map(|s| s.prefixed(prefix)).collect())
            }
        }
    }

    /// Applies `f` to every factor, keeping the product structure.
    pub fn map_factors(&self, f: &impl Fn(&CQState) -> Result<CQState>) -> Result<Self> {
        Ok(match self {
            SystemState::Single(s) => SystemState::Single(f(s)?.canonical()),
            SystemState::Product(v) => {
                SystemState::Product(v.iter().map(|s| s.map_factors(f)).collect::<Result<_>>()?)
            }
        })
    }

    pub fn trace_mass(&self) -> f64 {
        self.factors().iter().map(|s| s.trace_mass()).product()
    }

    /// Trace distance; products with matching factor registers stay lazy.
    pub fn distance(&self, other: &SystemState) -> Result<f64> {
        let (fa, fb) = (self.factors(), other.factors());
        let matching = fa.len() > 1
            && fa.len() == fb.len()
            && fa.iter().zip(&fb).all(|(a, b)| same_names(a, b));
        if matching {
            let ca: Vec<CQState> = fa.iter().map(|s| s.canonical()).collect();
            let cb: Vec<CQState> = fb.iter().map(|s| s.canonical()).collect();
            let ra: Vec<&CQState> = ca.iter().collect();
            let rb: Vec<&CQState> = cb.iter().collect();
            return Ok(product_trace_distance(&ra, &rb)?);
        }
        Ok(cq_trace_distance(
            &self.materialize()?,
            &other.materialize()?,
        )?)
    }
}

fn same_names(a: &CQState, b: &CQState) -> bool {
    let mut x = a.register_names();
    let mut y = b.register_names();
    x.sort_unstable();
    y.sort_unstable();
    x == y
}

pub trait Resource: Send + Sync + Any {
    fn name(&self) -> String;

    fn ports(&self, _iface: Interface) -> usize {
        1
    }

    fn schedule(&self) -> Vec<Phase>;

    /// Joint state of all interface outputs under `attack`.
    fn evaluate(&self, attack: &AttackStrategy) -> Result<CQState>;

    fn as_any(&self) -> &dyn Any;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConverterKind {
    Protocol,
    Filter,
    Simulator,
}

/// A system with an inner and an outer interface, attached to a resource.
///
/// The default behaviour translates the outer strategy to an inner one,
/// evaluates the inner system and post-processes its output.
pub trait Converter: Send + Sync + Any {
    fn name(&self) -> String;

    fn kind(&self) -> ConverterKind;

    fn inner_ports(&self) -> usize {
        1
    }

    fn outer_ports(&self) -> usize {
        self.inner_ports()
    }

    fn outer_to_inner(&self, attack: &AttackStrategy) -> AttackStrategy {
        attack.clone()
    }

    fn transform(&self, state: SystemState, _attack: &AttackStrategy) -> Result<SystemState> {
        Ok(state)
    }

    /// False when `evaluate_through` is overridden and is not a plain
    /// `transform ∘ evaluate ∘ outer_to_inner`.
    fn transform_only(&self) -> bool {
        true
    }

    fn evaluate_through(
        &self,
        inner: &SystemGraph,
        attack: &AttackStrategy,
    ) -> Result<SystemState> {
        let state = inner.evaluate(&self.outer_to_inner(attack))?;
        self.transform(state, attack)
    }

    fn as_any(&self) -> &dyn Any;
}

/// Evaluates parallel components jointly, for strategies that act across them.
pub trait JointEvaluator: Send + Sync {
    fn evaluate_joint(&self, parts: &[SystemGraph], attack: &AttackStrategy)
        -> Result<SystemState>;
}

#[derive(Clone)]
pub enum SystemGraph {
    Leaf(Arc<dyn Resource>),
    Attach {
        iface: Interface,
        conv: Arc<dyn Converter>,
        inner: Arc<SystemGraph>,
    },
    Parallel {
        parts: Vec<SystemGraph>,
        joint: Option<Arc<dyn JointEvaluator>>,
    },
}

impl std::fmt::Debug for SystemGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe())
    }
}

impl SystemGraph {
    pub fn leaf(r: impl Resource + 'static) -> Self {
        SystemGraph::Leaf(Arc::new(r))
    }

    pub fn describe(&self) -> String {
        match self {
            SystemGraph::Leaf(r) => r.name(),
            SystemGraph::Attach { iface, conv, inner } => {
                format!("{}@{}({})", conv.name(), iface, inner.describe())
            }
            SystemGraph::Parallel { parts, .. } => {
                format!(
                    "[{}]",
                    parts
                        .iter()
                        .map(|p| p.describe())
                        .collect::<Vec<_>>()
                        .join(" || ")
                )
            }
        }
    }

    pub fn ports(&self, iface: Interface) -> usize {
        match self {
            SystemGraph::Leaf(r) => r.ports(iface),
            SystemGraph::Attach {
                iface: at,
                conv,
                inner,
            } => {
                if *at == iface {
                    conv.outer_ports()
                } else {
                    inner.ports(iface)
                }
            }
            SystemGraph::Parallel { parts, .. } => parts.iter().map(|p| p.ports(iface)).sum(),
        }
    }

    pub fn attach_converter(&self, conv: Arc<dyn Converter>, iface: Interface) -> Result<Self> {
        let found = self.ports(iface);
        if conv.inner_ports() != found {
            return Err(AcError::ArityMismatch {
                iface,
                expected: conv.inner_ports(),
                found,
            });
        }
        Ok(SystemGraph::Attach {
            iface,
            conv,
            inner: Arc::new(self.clone()),
        })
    }

    pub fn attach(&self, conv: impl Converter + 'static, iface: Interface) -> Result<Self> {
        self.attach_converter(Arc::new(conv), iface)
    }

    pub fn compose_parallel(&self, other: &SystemGraph) -> Self {
        SystemGraph::Parallel {
            parts: vec![self.clone(), other.clone()],
            joint: None,
        }
    }

    pub fn compose_parallel_joint(parts: Vec<SystemGraph>, joint: Arc<dyn JointEvaluator>) -> Self {
        SystemGraph::Parallel {
            parts,
            joint: Some(joint),
        }
    }

    /// Converters from the outside in, and the system underneath them.
    pub fn peel(&self) -> (Vec<(Interface, &Arc<dyn Converter>)>, &SystemGraph) {
        let mut convs = Vec::new();
        let mut cur = self;
        while let SystemGraph::Attach { iface, conv, inner } = cur {
            convs.push((*iface, conv));
            cur = inner;
        }
        (convs, cur)
    }

    pub fn evaluate(&self, attack: &AttackStrategy) -> Result<SystemState> {
        match self {
            SystemGraph::Leaf(r) => {
                check_schedule(&r.name(), &r.schedule(), attack)?;
                Ok(SystemState::Single(r.evaluate(attack)?.canonical()))
            }
            SystemGraph::Attach { conv, inner, .. } => conv.evaluate_through(inner, attack),
            SystemGraph::Parallel { parts, joint } => {
                if attack.is_crossing() {
                    return match joint {
                        Some(j) => j.evaluate_joint(parts, attack),
                        None => Err(AcError::ScheduleMismatch(
                            "crossing strategy on a parallel system without a joint evaluator"
                                .into(),
                        )),
                    };
                }
                if !attack.parts.is_empty() && attack.parts.len() != parts.len() {
                    return Err(AcError::InvalidAttack(format!(
                        "strategy has {} parts for {} components",
                        attack.parts.len(),
                        parts.len()
                    )));
                }
                let states = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        Ok(p.evaluate(&attack.part(i))?
                            .prefixed(&format!("{}:", i + 1)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SystemState::Product(states))
            }
        }
    }

    /// Evaluation materialised into one canonical cq state.
    pub fn evaluate_cq(&self, attack: &AttackStrategy) -> Result<CQState> {
        self.evaluate(attack)?.materialize()
    }
}

fn check_schedule(name: &str, schedule: &[Phase], attack: &AttackStrategy) -> Result<()> {
    if attack.is_crossing() {
        return Err(AcError::ScheduleMismatch(format!(
            "crossing strategy on single system {name}"
        )));
    }
    if !attack.quantum.is_identity() && !schedule.contains(&Phase::QuantumTransmission) {
        return Err(AcError::ScheduleMismatch(format!(
            "{name} has no quantum transmission to attack"
        )));
    }
    if attack.tamper.is_some() && !schedule.contains(&Phase::InsecureClassical) {
        return Err(AcError::ScheduleMismatch(format!(
            "{name} has no insecure classical round to tamper with"
        )));
    }
    Ok(())
}

/// Combines a simulator view with the inner resource output, branching on
/// the simulator's switch register: Σ_s view|_{switch=s} ⊗ inner(s = 1).
pub fn switch_combine(
    view: &CQState,
    switch: &str,
    inner: impl Fn(bool) -> Result<CQState>,
) -> Result<CQState> {
    let marg = view.marginal(switch)?;
    let mut parts = Vec::new();
    let mut regs: Option<Vec<Register>> = None;
    let idx = view.register_index(switch)?;
    for (&s, _) in marg.iter() {
        let slice = view.filter(|a| a[idx] == s).trace_out(&[switch])?;
        let joint = slice.tensor(&inner(s == 1)?)?.canonical();
        if let Some(r) = &regs {
            if r.as_slice() != joint.registers() {
                return Err(AcError::Protocol(
                    "inner outputs differ in registers across switch values".into(),
                ));
            }
        } else {
            regs = Some(joint.registers().to_vec());
        }
        parts.push(joint);
    }
    let regs = regs.ok_or_else(|| AcError::Protocol("empty simulator view".into()))?;
    let refs: Vec<(f64, &CQState)> = parts.iter().map(|p| (1.0, p)).collect();
    Ok(CQState::combine(regs, &refs)?)
}
