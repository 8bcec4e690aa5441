use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::qstate::KrausChannel;

use super::{AcError, Result};

/// What Eve does to the qubits of one quantum transmission.
#[derive(Clone, Debug, Default)]
pub enum QuantumAttack {
    #[default]
    Identity,
    /// The same channel on every position.
    Iid(Arc<KrausChannel>),
    /// One channel per position; missing positions are left alone.
    PerPosition(Vec<Option<Arc<KrausChannel>>>),
}

impl QuantumAttack {
    pub fn channel_at(&self, pos: usize) -> Option<&KrausChannel> {
        match self {
            QuantumAttack::Identity => None,
            QuantumAttack::Iid(c) => Some(c),
            QuantumAttack::PerPosition(v) => v.get(pos).and_then(|c| c.as_deref()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            QuantumAttack::Identity => true,
            QuantumAttack::Iid(_) => false,
            QuantumAttack::PerPosition(v) => v.iter().all(Option::is_none),
        }
    }
}

/// Substitution on an insecure classical channel carrying (message, tag)
/// pairs. `table[x * tags + y]` lists the replacement pairs with their
/// probabilities.
#[derive(Clone, PartialEq)]
pub struct TamperRule {
    msgs: u64,
    tags: u64,
    table: Vec<Vec<((u64, u64), f64)>>,
}

impl fmt::Debug for TamperRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TamperRule({}x{})", self.msgs, self.tags)
    }
}

impl TamperRule {
    /// Validated rule; every entry must be a distribution over in-range pairs.
    pub fn new(msgs: u64, tags: u64, table: Vec<Vec<((u64, u64), f64)>>) -> Result<Self> {
        if table.len() as u64 != msgs * tags {
            return Err(AcError::InvalidAttack(format!(
                "tamper table has {} entries, expected {}",
                table.len(),
                msgs * tags
            )));
        }
        for (i, row) in table.iter().enumerate() {
            let total: f64 = row.iter().map(|(_, p)| p).sum();
            let in_range = row
                .iter()
                .all(|&((x, y), p)| x < msgs && y < tags && p >= 0.0);
            if !in_range || (total - 1.0).abs() > 1e-12 {
                return Err(AcError::InvalidAttack(format!(
                    "tamper entry {i} is not a distribution"
                )));
            }
        }
        Ok(Self { msgs, tags, table })
    }

    pub fn deterministic(msgs: u64, tags: u64, f: impl Fn(u64, u64) -> (u64, u64)) -> Result<Self> {
        let mut table = Vec::with_capacity((msgs * tags) as usize);
        for x in 0..msgs {
            for y in 0..tags {
                table.push(vec![(f(x, y), 1.0)]);
            }
        }
        Self::new(msgs, tags, table)
    }

    pub fn identity(msgs: u64, tags: u64) -> Self {
        Self::deterministic(msgs, tags, |x, y| (x, y)).expect("identity is total")
    }

    pub fn msgs(&self) -> u64 {
        self.msgs
    }

    pub fn tags(&self) -> u64 {
        self.tags
    }

    pub fn apply(&self, x: u64, y: u64) -> &[((u64, u64), f64)] {
        &self.table[(x * self.tags + y) as usize]
    }
}

/// One adversarial strategy against a fixed interaction schedule.
#[derive(Clone, Debug)]
pub struct AttackStrategy {
    pub id: String,
    pub quantum: QuantumAttack,
    /// Swapped (instance-1 position, instance-2 position) pairs; only
    /// meaningful for parallel systems with a joint evaluator.
    pub crossing: Vec<(usize, usize)>,
    pub tamper: Option<Arc<TamperRule>>,
    pub passive_read: bool,
    /// Switch input on ideal resources (`Some(true)` presses it).
    pub switch: Option<bool>,
    /// Inputs chosen by the distinguisher at honest interfaces, by name.
    pub inputs: BTreeMap<String, u64>,
    /// Per-component strategies for composed systems (parallel parts or rounds).
    pub parts: Vec<AttackStrategy>,
}

impl Default for AttackStrategy {
    fn default() -> Self {
        Self::identity()
    }
}

impl AttackStrategy {
    pub fn identity() -> Self {
        Self {
            id: "identity".into(),
            quantum: QuantumAttack::Identity,
            crossing: Vec::new(),
            tamper: None,
            passive_read: true,
            switch: None,
            inputs: BTreeMap::new(),
            parts: Vec::new(),
        }
    }

    pub fn named(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Self::identity()
        }
    }

    pub fn with_channel(mut self, ch: KrausChannel) -> Self {
        self.quantum = QuantumAttack::Iid(Arc::new(ch));
        self
    }

    pub fn with_tamper(mut self, rule: TamperRule) -> Self {
        self.tamper = Some(Arc::new(rule));
        self
    }

    pub fn with_switch(mut self, pressed: bool) -> Self {
        self.switch = Some(pressed);
        self
    }

    pub fn with_input(mut self, name: impl Into<String>, value: u64) -> Self {
        self.inputs.insert(name.into(), value);
        self
    }

    pub fn with_parts(mut self, parts: Vec<AttackStrategy>) -> Self {
        self.parts = parts;
        self
    }

    pub fn with_crossing(mut self, swaps: Vec<(usize, usize)>) -> Self {
        self.crossing = swaps;
        self
    }

    pub fn input(&self, name: &str) -> Option<u64> {
        self.inputs.get(name).copied()
    }

    /// Strategy for component `i` of a composed system: the explicit part if
    /// given, otherwise this strategy without its parts, renamed. Inputs of
    /// the composite are inherited unless the part overrides them.
    pub fn part(&self, i: usize) -> AttackStrategy {
        let mut p = match self.parts.get(i) {
            Some(p) => p.clone(),
            None => AttackStrategy {
                parts: Vec::new(),
                crossing: Vec::new(),
                ..self.clone()
            },
        };
        for (k, v) in &self.inputs {
            p.inputs.entry(k.clone()).or_insert(*v);
        }
        p
    }

    /// Product strategy with one part per component.
    pub fn product(parts: Vec<AttackStrategy>) -> Self {
        let id = parts
            .iter()
            .map(|p| p.id.as_str())
            .collect::<Vec<_>>()
            .join("|");
        Self::named(id).with_parts(parts)
    }

    pub fn is_crossing(&self) -> bool {
        !self.crossing.is_empty()
    }
}

type Builder = Arc<dyn Fn(f64) -> AttackStrategy + Send + Sync>;

/// A one-parameter family searched by grid plus golden-section refinement.
#[derive(Clone)]
pub struct ParamFamily {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub grid: usize,
    pub refine: bool,
    pub build: Builder,
}

impl fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ParamFamily({} on [{}, {}], {} points)",
            self.name, self.lo, self.hi, self.grid
        )
    }
}

impl ParamFamily {
    pub fn new(
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        build: impl Fn(f64) -> AttackStrategy + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            lo,
            hi,
            grid: 64,
            refine: true,
            build: Arc::new(build),
        }
    }

    pub fn with_grid(mut self, points: usize, refine: bool) -> Self {
        self.grid = points.max(1);
        self.refine = refine;
        self
    }

    pub fn point(&self, i: usize) -> f64 {
        if self.grid == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.grid - 1) as f64
        }
    }
}

/// Named set of strategies. The identity strategy is always a member.
#[derive(Clone, Debug)]
pub struct AttackFamily {
    pub name: String,
    members: Vec<AttackStrategy>,
    params: Vec<ParamFamily>,
}

impl AttackFamily {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            members: vec![AttackStrategy::identity()],
            params: Vec::new(),
        }
    }

    /// Family whose identity member is `base` (e.g. carrying fixed inputs).
    pub fn with_base(name: impl Into<String>, base: AttackStrategy) -> Self {
        Self {
            name: name.into(),
            members: vec![base],
            params: Vec::new(),
        }
    }

    pub fn add(&mut self, a: AttackStrategy) -> &mut Self {
        self.members.push(a);
        self
    }

    pub fn with(mut self, a: AttackStrategy) -> Self {
        self.members.push(a);
        self
    }

    pub fn with_param(mut self, p: ParamFamily) -> Self {
        self.params.push(p);
        self
    }

    /// Adds the grid points of `p` as plain members (no refinement).
    pub fn with_grid(mut self, p: &ParamFamily) -> Self {
        for i in 0..p.grid {
            self.members.push((p.build)(p.point(i)));
        }
        self
    }

    /// Sets an honest-party input on every member and parameter point.
    pub fn with_input(mut self, key: &str, value: u64) -> Self {
        for m in &mut self.members {
            m.inputs.insert(key.to_string(), value);
        }
        for p in &mut self.params {
            let build = p.build.clone();
            let key = key.to_string();
            p.build = Arc::new(move |x| build(x).with_input(key.clone(), value));
        }
        self
    }

    pub fn members(&self) -> &[AttackStrategy] {
        &self.members
    }

    pub fn params(&self) -> &[ParamFamily] {
        &self.params
    }

    /// All discrete strategies, with parameter families expanded to their grids.
    pub fn expand(&self) -> Vec<AttackStrategy> {
        let mut out = self.members.clone();
        for p in &self.params {
            out.extend((0..p.grid).map(|i| (p.build)(p.point(i))));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.members.len() + self.params.iter().map(|p| p.grid).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product of the expanded families (one part per component).
    pub fn product(name: impl Into<String>, families: &[&AttackFamily]) -> Self {
        let mut combos: Vec<Vec<AttackStrategy>> = vec![Vec::new()];
        for f in families {
            let ex = f.expand();
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    ex.iter().map(move |a| {
                        let mut c = c.clone();
                        c.push(a.clone());
                        c
                    })
                })
                .collect();
        }
        let mut members: Vec<AttackStrategy> =
            combos.into_iter().map(AttackStrategy::product).collect();
        if !members
            .iter()
            .any(|m| m.parts.iter().all(|p| p.id == "identity"))
        {
            members.insert(0, AttackStrategy::identity());
        }
        Self {
            name: name.into(),
            members,
            params: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_contains_identity() {
        let f = AttackFamily::new("f");
        assert_eq!(f.members()[0].id, "identity");
        let p = ParamFamily::new("ir", 0.0, 1.0, |x| AttackStrategy::named(format!("p={x}")))
            .with_grid(17, false);
        let f = f.with_grid(&p);
        assert_eq!(f.len(), 18);
        assert_eq!(f.members()[17].id, "p=1");
    }

    #[test]
    fn product_family_pairs() {
        let a = AttackFamily::new("a").with(AttackStrategy::named("x"));
        let prod = AttackFamily::product("ab", &[&a, &a]);
        assert_eq!(prod.len(), 4);
        assert_eq!(prod.members()[3].id, "x|x");
        assert_eq!(prod.members()[0].part(1).id, "identity");
    }

    #[test]
    fn tamper_rules_validated() {
        assert!(TamperRule::new(2, 2, vec![vec![((0, 0), 0.5)]; 4]).is_err());
        let flip = TamperRule::deterministic(2, 2, |x, y| (x ^ 1, y)).unwrap();
        assert_eq!(flip.apply(1, 0), &[((0, 0), 1.0)]);
        assert!(TamperRule::deterministic(2, 2, |x, y| (x + 2, y)).is_err());
    }

    #[test]
    fn parts_inherit_inputs() {
        let a = AttackStrategy::product(vec![AttackStrategy::named("p")]).with_input("A.msg", 3);
        assert_eq!(a.part(0).input("A.msg"), Some(3));
        assert_eq!(a.part(1).id, "p");
    }
}
