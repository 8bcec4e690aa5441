use std::any::Any;
use std::sync::Arc;

use crate::qstate::CQState;

use super::attack::AttackStrategy;
use super::system::{interface_of, Converter, ConverterKind, SystemGraph, SystemState};
use super::{Interface, Result};

/// Passes everything through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityConverter {
    pub ports: usize,
}

impl Converter for IdentityConverter {
    fn name(&self) -> String {
        "id".into()
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Protocol
    }

    fn inner_ports(&self) -> usize {
        self.ports.max(1)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// `outer ∘ inner` as one converter attached at `iface`.
#[derive(Clone)]
pub struct Serial {
    pub outer: Arc<dyn Converter>,
    pub inner: Arc<dyn Converter>,
    pub iface: Interface,
}

impl Serial {
    pub fn new(outer: Arc<dyn Converter>, inner: Arc<dyn Converter>, iface: Interface) -> Self {
        Self {
            outer,
            inner,
            iface,
        }
    }
}

impl Converter for Serial {
    fn name(&self) -> String {
        format!("{}.{}", self.outer.name(), self.inner.name())
    }

    fn kind(&self) -> ConverterKind {
        self.outer.kind()
    }

    fn inner_ports(&self) -> usize {
        self.inner.inner_ports()
    }

    fn outer_ports(&self) -> usize {
        self.outer.outer_ports()
    }

    fn outer_to_inner(&self, attack: &AttackStrategy) -> AttackStrategy {
        self.inner
            .outer_to_inner(&self.outer.outer_to_inner(attack))
    }

    fn transform(&self, state: SystemState, attack: &AttackStrategy) -> Result<SystemState> {
        let mid = self.outer.outer_to_inner(attack);
        let state = self.inner.transform(state, &mid)?;
        self.outer.transform(state, attack)
    }

    fn transform_only(&self) -> bool {
        self.outer.transform_only() && self.inner.transform_only()
    }

    fn evaluate_through(
        &self,
        inner: &SystemGraph,
        attack: &AttackStrategy,
    ) -> Result<SystemState> {
        if self.transform_only() {
            let state = inner.evaluate(&self.outer_to_inner(attack))?;
            return self.transform(state, attack);
        }
        let nested = SystemGraph::Attach {
            iface: self.iface,
            conv: self.inner.clone(),
            inner: Arc::new(inner.clone()),
        };
        self.outer.evaluate_through(&nested, attack)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

fn drop_eve(s: &CQState) -> Result<CQState> {
    let names: Vec<String> = s
        .register_names()
        .into_iter()
        .filter(|n| interface_of(n) == Some(Interface::E))
        .map(String::from)
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(s.trace_out(&refs)?.discard_quantum())
}

/// Honest-behaviour filter for a real resource: replaces the adversary by a
/// fixed strategy (keeping the distinguisher's inputs) and hides E's output.
#[derive(Debug, Clone)]
pub struct DiscardFilter {
    pub label: String,
    pub honest: AttackStrategy,
    pub ports: usize,
}

impl DiscardFilter {
    pub fn new(label: impl Into<String>, honest: AttackStrategy) -> Self {
        Self {
            label: label.into(),
            honest,
            ports: 1,
        }
    }
}

impl Converter for DiscardFilter {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Filter
    }

    fn inner_ports(&self) -> usize {
        self.ports
    }

    fn outer_to_inner(&self, attack: &AttackStrategy) -> AttackStrategy {
        let mut h = self.honest.clone();
        for (k, v) in &attack.inputs {
            h.inputs.entry(k.clone()).or_insert(*v);
        }
        h
    }

    fn transform(&self, state: SystemState, _attack: &AttackStrategy) -> Result<SystemState> {
        state.map_factors(&drop_eve)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Filter for an ideal resource with a switch: presses it with probability
/// `delta` and hides E's output.
#[derive(Debug, Clone)]
pub struct IdealFilter {
    pub delta: f64,
    pub ports: usize,
}

impl IdealFilter {
    pub fn new(delta: f64) -> Self {
        Self { delta, ports: 1 }
    }
}

impl Converter for IdealFilter {
    fn name(&self) -> String {
        format!("ideal_filter({})", self.delta)
    }

    fn kind(&self) -> ConverterKind {
        ConverterKind::Filter
    }

    fn inner_ports(&self) -> usize {
        self.ports
    }

    fn transform_only(&self) -> bool {
        false
    }

    fn evaluate_through(
        &self,
        inner: &SystemGraph,
        attack: &AttackStrategy,
    ) -> Result<SystemState> {
        let mut base = AttackStrategy::identity();
        base.inputs = attack.inputs.clone();
        let on = drop_eve(&inner.evaluate_cq(&base.clone().with_switch(true))?)?;
        let off = drop_eve(&inner.evaluate_cq(&base.with_switch(false))?)?;
        let mut parts = Vec::new();
        if self.delta > 0.0 {
            parts.push((self.delta, &on));
        }
        if self.delta < 1.0 {
            parts.push((1.0 - self.delta, &off));
        }
        Ok(SystemState::Single(CQState::combine(
            off.registers().to_vec(),
            &parts,
        )?))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
