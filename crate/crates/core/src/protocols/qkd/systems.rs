use std::any::Any;
use std::sync::Arc;

use crate::acframework::{
    switch_combine, AcError, AttackStrategy, Converter, ConverterKind, Interface, JointEvaluator,
    Phase, Resource, Result as AcResult, SystemGraph, SystemState,
};
use crate::qstate::{CQState, Register, BOT};

use super::super::gf2::mask;
use super::super::resources::KeyResource;
use super::super::Result;
use super::engine::{run_instances, run_single, InstanceSpec, SiteModel};
use super::params::QkdParams;

/// The real QKD system: both protocol converters fused with the quantum
/// channel and the authentic classical channel.
#[derive(Debug, Clone)]
pub struct QkdReal {
    pub params: QkdParams,
}

impl Resource for QkdReal {
    fn name(&self) -> String {
        format!("qkd[n={},t={}]", self.params.n, self.params.t)
    }

    fn schedule(&self) -> Vec<Phase> {
        vec![
            Phase::QuantumTransmission,
            Phase::AuthenticClassical,
            Phase::Output,
        ]
    }

    fn evaluate(&self, attack: &AttackStrategy) -> AcResult<CQState> {
        Ok(run_single(&self.params, &attack.quantum)?)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Eve's view of instance `prefix` with a switch register set to its abort flag.
fn simulator_view(real: &CQState, prefix: &str) -> AcResult<CQState> {
    let (ka, kb, ab) = (
        format!("{prefix}A.key"),
        format!("{prefix}B.key"),
        format!("{prefix}E.abort"),
    );
    let view = real.trace_out(&[&ka, &kb])?;
    let i = view.register_index(&ab)?;
    Ok(view.with_derived_register(Register::new("sw", 2), |a| a[i])?)
}

/// Replaces the keys of instance `prefix` by the ideal key resource's output,
/// switched off exactly on the abort branches.
pub fn ideal_from_real(real: &CQState, prefix: &str, out_len: usize) -> AcResult<CQState> {
    let view = simulator_view(real, prefix)?;
    let key = KeyResource::new(out_len);
    let out = switch_combine(&view, "sw", |p| Ok(key.state(p)?.prefixed(prefix)))?;
    Ok(out.canonical())
}

/// Shows Eve the real transcript and presses the inner resource's switch
/// exactly on the abort branches.
pub(crate) fn simulate_from_real(
    real: &CQState,
    inner: &SystemGraph,
    attack: &AttackStrategy,
) -> AcResult<SystemState> {
    let view = simulator_view(real, "")?;
    let mut base = AttackStrategy::identity();
    base.inputs = attack.inputs.clone();
    let out = switch_combine(&view, "sw", |p| {
        inner.evaluate_cq(&base.clone().with_switch(p))
    })?;
    Ok(SystemState::Single(out.canonical()))
}

/// Simulator for QKD: runs the protocol internally against the attack, shows
/// Eve the transcript and presses the key resource's switch iff it aborts.
#[derive(Debug, Clone)]
pub struct QkdSimulator {
    pub params: QkdParams,
}

impl Converter for QkdSimulator {
    fn name(&self) -> String {
        "sigma_qkd".into()
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
        if attack.tamper.is_some() || attack.is_crossing() {
            return Err(AcError::ScheduleMismatch(
                "QKD simulator only accepts quantum-channel strategies".into(),
            ));
        }
        let real = run_single(&self.params, &attack.quantum)?;
        simulate_from_real(&real, inner, attack)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Real system and ideal key resource with simulator.
pub fn build_qkd_systems(p: &QkdParams) -> AcResult<(SystemGraph, SystemGraph)> {
    let real = SystemGraph::leaf(QkdReal { params: p.clone() });
    let ideal = SystemGraph::leaf(KeyResource::new(p.out_len))
        .attach_converter(Arc::new(QkdSimulator { params: p.clone() }), Interface::E)?;
    Ok((real, ideal))
}

/// Moves the first `split` key bits from A to E (`E.leak`); A keeps the rest.
#[derive(Debug, Clone, Copy)]
pub struct LeakConverter {
    pub split: usize,
    pub key_len: usize,
}

impl Converter for LeakConverter {
    fn name(&self) -> String {
        format!("leak[{}]", self.split)
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Protocol
    }

    fn transform(&self, state: SystemState, _attack: &AttackStrategy) -> AcResult<SystemState> {
        let s = state.materialize()?;
        let ki = s.register_index("A.key")?;
        let mut regs = s.registers().to_vec();
        regs[ki] = Register::with_bot("A.key", 1 << (self.key_len - self.split));
        regs.push(Register::with_bot("E.leak", 1 << self.split));
        let split = self.split;
        let out = s.map_assignments(regs, |a| {
            let mut v = a.to_vec();
            let k = a[ki];
            if k == BOT {
                v.push(BOT);
            } else {
                v[ki] = k >> split;
                v.push(k & mask(split));
            }
            v
        })?;
        Ok(SystemState::Single(out.canonical()))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Joint evaluation of parallel QKD instances (real, or key resource with
/// the QKD simulator) under strategies that route qubits across instances.
#[derive(Debug, Clone, Copy, Default)]
pub struct QkdJoint;

enum Side {
    Real(QkdParams),
    Ideal(QkdParams),
}

fn classify(g: &SystemGraph) -> AcResult<Side> {
    let (convs, base) = g.peel();
    let SystemGraph::Leaf(r) = base else {
        return Err(AcError::ScheduleMismatch(
            "joint evaluation needs QKD components".into(),
        ));
    };
    match convs.as_slice() {
        [] => r
            .as_any()
            .downcast_ref::<QkdReal>()
            .map(|q| Side::Real(q.params.clone()))
            .ok_or_else(|| AcError::ScheduleMismatch(format!("{} is not a QKD system", r.name()))),
        [(Interface::E, c)] if r.as_any().is::<KeyResource>() => c
            .as_any()
            .downcast_ref::<QkdSimulator>()
            .map(|s| Side::Ideal(s.params.clone()))
            .ok_or_else(|| {
                AcError::ScheduleMismatch(format!("unsupported converter {}", c.name()))
            }),
        _ => Err(AcError::ScheduleMismatch(format!(
            "joint evaluation unsupported for {}",
            g.describe()
        ))),
    }
}

impl JointEvaluator for QkdJoint {
    fn evaluate_joint(
        &self,
        parts: &[SystemGraph],
        attack: &AttackStrategy,
    ) -> AcResult<SystemState> {
        let sides = parts.iter().map(classify).collect::<AcResult<Vec<_>>>()?;
        if sides.len() != 2 {
            return Err(AcError::ScheduleMismatch(
                "crossing strategies need exactly two instances".into(),
            ));
        }
        let params: Vec<&QkdParams> = sides
            .iter()
            .map(|s| match s {
                Side::Real(p) | Side::Ideal(p) => p,
            })
            .collect();
        let mut specs = Vec::with_capacity(2);
        for (k, p) in params.iter().enumerate() {
            let part = attack.part(k);
            let sites = (0..p.n)
                .map(|i| SiteModel::new(part.quantum.channel_at(i)))
                .collect::<Result<Vec<_>>>()?;
            specs.push(InstanceSpec {
                params: p,
                prefix: format!("{}:", k + 1),
                sites,
            });
        }
        let n1 = params[0].n;
        let mut route: Vec<usize> = (0..n1 + params[1].n).collect();
        for &(i, j) in &attack.crossing {
            if i >= n1 || j >= params[1].n {
                return Err(AcError::InvalidAttack(format!(
                    "swap ({i}, {j}) out of range"
                )));
            }
            route.swap(i, n1 + j);
        }
        let mut state = run_instances(&specs, &route)?;
        for (k, s) in sides.iter().enumerate() {
            if let Side::Ideal(p) = s {
                state = ideal_from_real(&state, &format!("{}:", k + 1), p.out_len)?;
            }
        }
        Ok(SystemState::Single(state.canonical()))
    }
}

/// Two instances in parallel with crossing strategies enabled.
pub fn parallel_qkd_systems(
    p1: &QkdParams,
    p2: &QkdParams,
) -> AcResult<(SystemGraph, SystemGraph)> {
    let (r1, i1) = build_qkd_systems(p1)?;
    let (r2, i2) = build_qkd_systems(p2)?;
    let joint: Arc<dyn JointEvaluator> = Arc::new(QkdJoint);
    Ok((
        SystemGraph::compose_parallel_joint(vec![r1, r2], joint.clone()),
        SystemGraph::compose_parallel_joint(vec![i1, i2], joint),
    ))
}
