use std::collections::{BTreeMap, HashMap, HashSet};

use crate::linalg::CMatrix;
use crate::tolerance;

use super::{DensityOperator, Result, StateError};

/// Classical register value. `BOT` is the error symbol ⊥.
pub type Symbol = u64;

pub const BOT: Symbol = u64::MAX;

/// A named classical register over `0..size`, optionally extended by ⊥.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Register {
    pub name: String,
    pub size: u64,
    pub allows_bot: bool,
}

impl Register {
    pub fn new(name: impl Into<String>, size: u64) -> Self {
        Self {
            name: name.into(),
            size,
            allows_bot: false,
        }
    }

    pub fn with_bot(name: impl Into<String>, size: u64) -> Self {
        Self {
            name: name.into(),
            size,
            allows_bot: true,
        }
    }

    /// Dimension when embedded as a basis factor (⊥ takes index `size`).
    pub fn dim(&self) -> u64 {
        self.size + u64::from(self.allows_bot)
    }

    pub fn contains(&self, s: Symbol) -> bool {
        s < self.size || (self.allows_bot && s == BOT)
    }

    pub(crate) fn embed(&self, s: Symbol) -> usize {
        if s == BOT {
            self.size as usize
        } else {
            s as usize
        }
    }
}

/// One classical branch: assignment, probability weight and a unit-trace
/// quantum operator on the remaining factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub assignment: Vec<Symbol>,
    pub weight: f64,
    pub op: DensityOperator,
}

impl Branch {
    /// weight · op as a bare matrix.
    pub fn weighted_matrix(&self) -> CMatrix {
        self.op.matrix().scale(self.weight)
    }
}

/// Classical-quantum state Σ_c p_c |c⟩⟨c| ⊗ ρ_c stored branch-wise.
///
/// Branch operators may have different factorisations; only branches
/// sharing an assignment are ever compared. Branches are kept sorted by
/// assignment so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct CQState {
    registers: Vec<Register>,
    branches: Vec<Branch>,
}

impl CQState {
    /// Validated construction from explicit branches.
    pub fn make(
        registers: Vec<Register>,
        branches: Vec<(Vec<Symbol>, f64, DensityOperator)>,
    ) -> Result<Self> {
        check_register_names(&registers)?;
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(branches.len());
        for (assignment, weight, op) in branches {
            if assignment.len() != registers.len() {
                return Err(StateError::RegisterMismatch(format!(
                    "assignment has {} symbols for {} registers",
                    assignment.len(),
                    registers.len()
                )));
            }
            for (r, &s) in registers.iter().zip(&assignment) {
                if !r.contains(s) {
                    return Err(StateError::SymbolOutOfRange {
                        register: r.name.clone(),
                        symbol: s,
                        size: r.size,
                    });
                }
            }
            if !seen.insert(assignment.clone()) {
                return Err(StateError::DuplicateAssignment(assignment));
            }
            if !(weight >= 0.0) {
                return Err(StateError::BadDistribution(format!(
                    "branch weight {weight}"
                )));
            }
            op.validate()?;
            let mass = op.trace_mass();
            if mass <= 0.0 || weight * mass <= tolerance::NEGLIGIBLE_WEIGHT {
                continue;
            }
            out.push(Branch {
                assignment,
                weight: weight * mass,
                op: op.normalized()?,
            });
        }
        out.sort_by(|a, b| a.assignment.cmp(&b.assignment));
        Ok(Self {
            registers,
            branches: out,
        })
    }

    /// A purely classical state.
    pub fn classical(registers: Vec<Register>, entries: Vec<(Vec<Symbol>, f64)>) -> Result<Self> {
        Self::make(
            registers,
            entries
                .into_iter()
                .map(|(a, w)| (a, w, DensityOperator::scalar(1.0)))
                .collect(),
        )
    }

    /// Single-branch state with no classical registers.
    pub fn from_quantum(op: DensityOperator) -> Self {
        let w = op.trace();
        Self {
            registers: Vec::new(),
            branches: vec![Branch {
                assignment: Vec::new(),
                weight: w,
                op: op.normalized().unwrap_or(op),
            }],
        }
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn trace_mass(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    pub fn register_index(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| StateError::RegisterMismatch(format!("no register named `{name}`")))
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        Ok(&self.registers[self.register_index(name)?])
    }

    pub fn register_names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }

    /// Branch lookup by assignment.
    pub fn get(&self, assignment: &[Symbol]) -> Option<&Branch> {
        self.branches
            .binary_search_by(|b| b.assignment.as_slice().cmp(assignment))
            .ok()
            .map(|i| &self.branches[i])
    }

    /// Common branch factorisation, if all branches agree.
    pub fn uniform_quantum_dims(&self) -> Option<Vec<usize>> {
        let first = self.branches.first()?.op.dims().to_vec();
        self.branches
            .iter()
            .all(|b| b.op.dims() == first.as_slice())
            .then_some(first)
    }

    /// Total probability of branches satisfying `pred`.
    pub fn probability(&self, pred: impl Fn(&[Symbol]) -> bool) -> f64 {
        self.branches
            .iter()
            .filter(|b| pred(&b.assignment))
            .map(|b| b.weight)
            .sum()
    }

    /// Keeps only branches satisfying `pred` (result is subnormalised).
    pub fn filter(&self, pred: impl Fn(&[Symbol]) -> bool) -> Self {
        Self {
            registers: self.registers.clone(),
            branches: self
                .branches
                .iter()
                .filter(|b| pred(&b.assignment))
                .cloned()
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            registers: self.registers.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| Branch {
                    weight: b.weight * s,
                    ..b.clone()
                })
                .filter(|b| b.weight > tolerance::NEGLIGIBLE_WEIGHT)
                .collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let m = self.trace_mass();
        if !(m > 0.0) {
            return Err(StateError::BadTrace {
                expected: 1.0,
                found: m,
                defect: 1.0,
            });
        }
        Ok(self.scaled(1.0 / m))
    }

    /// Relabels assignments (and registers); branches that collide are merged
    /// by summing their weighted operators.
    pub fn map_assignments(
        &self,
        registers: Vec<Register>,
        f: impl Fn(&[Symbol]) -> Vec<Symbol>,
    ) -> Result<Self> {
        let mut builder = CqBuilder::new(registers);
        for b in &self.branches {
            builder.add_branch(f(&b.assignment), b)?;
        }
        builder.finish()
    }

    /// Traces out the named classical registers.
    pub fn trace_out(&self, names: &[&str]) -> Result<Self> {
        let drop: Vec<usize> = names
            .iter()
            .map(|n| self.register_index(n))
            .collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.registers.len())
            .filter(|i| !drop.contains(i))
            .collect();
        self.select_registers(&keep)
    }

    /// Keeps the registers at `keep` in that order, tracing out the rest.
    pub fn select_registers(&self, keep: &[usize]) -> Result<Self> {
        let regs = keep.iter().map(|&i| self.registers[i].clone()).collect();
        self.map_assignments(regs, |a| keep.iter().map(|&i| a[i]).collect())
    }

    /// Reorders registers by name. Every register must be named exactly once.
    pub fn reorder(&self, names: &[&str]) -> Result<Self> {
        if names.len() != self.registers.len() {
            return Err(StateError::RegisterMismatch(format!(
                "reorder lists {} registers, state has {}",
                names.len(),
                self.registers.len()
            )));
        }
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.register_index(n))
            .collect::<Result<_>>()?;
        if idx.iter().enumerate().all(|(i, &j)| i == j) {
            return Ok(self.clone());
        }
        // a permutation never merges branches, so only a re-sort is needed
        let registers = idx.iter().map(|&i| self.registers[i].clone()).collect();
        let mut branches: Vec<Branch> = self
            .branches
            .iter()
            .map(|b| Branch {
                assignment: idx.iter().map(|&i| b.assignment[i]).collect(),
                weight: b.weight,
                op: b.op.clone(),
            })
            .collect();
        branches.sort_by(|a, b| a.assignment.cmp(&b.assignment));
        Ok(Self {
            registers,
            branches,
        })
    }

    /// Reorders registers alphabetically by name.
    pub fn canonical(&self) -> Self {
        let mut names: Vec<&str> = self.register_names();
        names.sort_unstable();
        self.reorder(&names).expect("names come from the state")
    }

    /// Σ_i s_i · state_i for states over the same registers.
    pub fn combine(registers: Vec<Register>, parts: &[(f64, &CQState)]) -> Result<Self> {
        let mut builder = CqBuilder::new(registers);
        for (s, st) in parts {
            if st.registers != builder.registers {
                return Err(StateError::RegisterMismatch(format!(
                    "cannot combine {:?} into {:?}",
                    st.register_names(),
                    builder
                        .registers
                        .iter()
                        .map(|r| r.name.as_str())
                        .collect::<Vec<_>>()
                )));
            }
            for b in &st.branches {
                builder.add(
                    b.assignment.clone(),
                    b.op.dims(),
                    b.op.matrix(),
                    b.weight * s,
                )?;
            }
        }
        builder.finish()
    }

    /// Traces out the quantum part of every branch.
    pub fn discard_quantum(&self) -> Self {
        Self {
            registers: self.registers.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| Branch {
                    assignment: b.assignment.clone(),
                    weight: b.weight,
                    op: DensityOperator::scalar(1.0),
                })
                .collect(),
        }
    }

    /// Adds a register whose value is a function of the existing assignment.
    pub fn with_derived_register(
        &self,
        register: Register,
        f: impl Fn(&[Symbol]) -> Symbol,
    ) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.push(register);
        self.map_assignments(regs, |a| {
            let mut v = a.to_vec();
            v.push(f(a));
            v
        })
    }

    /// Prefixes every register name (used to namespace parallel systems).
    pub fn prefixed(&self, prefix: &str) -> Self {
        Self {
            registers: self
                .registers
                .iter()
                .map(|r| Register {
                    name: format!("{prefix}{}", r.name),
                    ..r.clone()
                })
                .collect(),
            branches: self.branches.clone(),
        }
    }

    /// Tensor product; register names must be disjoint.
    pub fn tensor(&self, other: &CQState) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        check_register_names(&regs)?;
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                let mut asg = a.assignment.clone();
                asg.extend_from_slice(&b.assignment);
                branches.push(Branch {
                    assignment: asg,
                    weight: a.weight * b.weight,
                    op: a.op.tensor(&b.op)?,
                });
            }
        }
        // lexicographic order of concatenations is preserved
        Ok(Self {
            registers: regs,
            branches,
        })
    }

    /// Distribution over full assignments (quantum parts traced out).
    pub fn classical_entries(&self) -> Vec<(Vec<Symbol>, f64)> {
        self.branches
            .iter()
            .map(|b| (b.assignment.clone(), b.weight))
            .collect()
    }

    /// Marginal distribution of one register, keyed by symbol.
    pub fn marginal(&self, name: &str) -> Result<BTreeMap<Symbol, f64>> {
        let i = self.register_index(name)?;
        let mut m = BTreeMap::new();
        for b in &self.branches {
            *m.entry(b.assignment[i]).or_insert(0.0) += b.weight;
        }
        Ok(m)
    }

    /// Embeds every register as an orthonormal basis factor, followed by the
    /// (common) quantum factors.
    pub fn flatten(&self) -> Result<DensityOperator> {
        let qdims = match self.uniform_quantum_dims() {
            Some(d) => d,
            None if self.branches.is_empty() => vec![1],
            None => {
                return Err(StateError::InvalidArgument(
                    "flatten requires all branches to share quantum dimensions".into(),
                ))
            }
        };
        let mut dims: Vec<usize> = self.registers.iter().map(|r| r.dim() as usize).collect();
        dims.extend_from_slice(&qdims);
        let total = super::total_dim(&dims, tolerance::DEFAULT_MAX_DIMENSION)?;
        let qd: usize = qdims.iter().product();
        let mut m = CMatrix::zeros(total, total);
        for b in &self.branches {
            let mut idx = 0usize;
            for (r, &s) in self.registers.iter().zip(&b.assignment) {
                idx = idx * r.dim() as usize + r.embed(s);
            }
            let base = idx * qd;
            let op = b.op.matrix();
            for i in 0..qd {
                for j in 0..qd {
                    m[(base + i, base + j)] += op[(i, j)] * b.weight;
                }
            }
        }
        Ok(DensityOperator::from_parts(m, dims, self.trace_mass()))
    }
}

fn check_register_names(regs: &[Register]) -> Result<()> {
    let mut names = HashSet::new();
    for r in regs {
        if !names.insert(r.name.as_str()) {
            return Err(StateError::RegisterMismatch(format!(
                "register `{}` appears twice",
                r.name
            )));
        }
    }
    Ok(())
}

/// Accumulates unnormalised branch operators keyed by assignment.
#[derive(Debug)]
pub struct CqBuilder {
    registers: Vec<Register>,
    blocks: HashMap<Vec<Symbol>, (Vec<usize>, CMatrix)>,
}

impl CqBuilder {
    pub fn new(registers: Vec<Register>) -> Self {
        Self {
            registers,
            blocks: HashMap::new(),
        }
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    /// Adds `matrix` (unnormalised, factorisation `dims`) to the block at `assignment`.
    pub fn add(
        &mut self,
        assignment: Vec<Symbol>,
        dims: &[usize],
        matrix: &CMatrix,
        scale: f64,
    ) -> Result<()> {
        if assignment.len() != self.registers.len() {
            return Err(StateError::RegisterMismatch(format!(
                "assignment has {} symbols for {} registers",
                assignment.len(),
                self.registers.len()
            )));
        }
        match self.blocks.get_mut(&assignment) {
            Some((d, m)) => {
                if d.as_slice() != dims {
                    return Err(StateError::DimMismatch {
                        expected: d.iter().product(),
                        found: dims.iter().product(),
                    });
                }
                m.add_scaled(matrix, scale);
            }
            None => {
                self.blocks
                    .insert(assignment, (dims.to_vec(), matrix.scale(scale)));
            }
        }
        Ok(())
    }

    pub fn add_scalar(&mut self, assignment: Vec<Symbol>, weight: f64) -> Result<()> {
        self.add(assignment, &[1], &CMatrix::from_real(1, 1, &[1.0]), weight)
    }

    pub fn add_branch(&mut self, assignment: Vec<Symbol>, b: &Branch) -> Result<()> {
        self.add(assignment, b.op.dims(), b.op.matrix(), b.weight)
    }

    pub fn add_state(
        &mut self,
        assignment: Vec<Symbol>,
        op: &DensityOperator,
        weight: f64,
    ) -> Result<()> {
        self.add(assignment, op.dims(), op.matrix(), weight)
    }

    pub fn finish(self) -> Result<CQState> {
        for (a, _) in self.blocks.iter() {
            for (r, &s) in self.registers.iter().zip(a) {
                if !r.contains(s) {
                    return Err(StateError::SymbolOutOfRange {
                        register: r.name.clone(),
                        symbol: s,
                        size: r.size,
                    });
                }
            }
        }
        let mut branches: Vec<Branch> = self
            .blocks
            .into_iter()
            .filter_map(|(assignment, (dims, m))| {
                let tr = m.trace().re;
                (tr > tolerance::NEGLIGIBLE_WEIGHT).then(|| Branch {
                    assignment,
                    weight: tr,
                    op: DensityOperator::from_parts(m.scale(1.0 / tr).hermitian_part(), dims, 1.0),
                })
            })
            .collect();
        branches.sort_by(|a, b| a.assignment.cmp(&b.assignment));
        Ok(CQState {
            registers: self.registers,
            branches,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_reg() -> Register {
        Register::new("K", 2)
    }

    #[test]
    fn single_branch_flattens_to_product() {
        let e = DensityOperator::basis(&[2], 1).unwrap();
        let c = CQState::make(vec![key_reg()], vec![(vec![0], 1.0, e.clone())]).unwrap();
        let flat = c.flatten().unwrap();
        let expected = DensityOperator::basis(&[2], 0).unwrap().tensor(&e).unwrap();
        assert!(flat.matrix().max_abs_diff(expected.matrix()) < 1e-15);
    }

    #[test]
    fn uniform_key_flattens_to_tau_tensor_rho() {
        let e = DensityOperator::pure(
            &[
                crate::linalg::C64::new(0.6, 0.0),
                crate::linalg::C64::new(0.0, 0.8),
            ],
            &[2],
        )
        .unwrap();
        let c = CQState::make(
            vec![key_reg()],
            vec![(vec![0], 0.5, e.clone()), (vec![1], 0.5, e.clone())],
        )
        .unwrap();
        let expected = DensityOperator::maximally_mixed(2).tensor(&e).unwrap();
        assert!(
            c.flatten()
                .unwrap()
                .matrix()
                .max_abs_diff(expected.matrix())
                < 1e-15
        );
    }

    #[test]
    fn flatten_trace_is_weighted_sum() {
        let c = CQState::make(
            vec![key_reg()],
            vec![
                (vec![0], 0.2, DensityOperator::maximally_mixed(2)),
                (
                    vec![1],
                    0.3,
                    DensityOperator::maximally_mixed(2).scaled(0.5),
                ),
            ],
        )
        .unwrap();
        assert!((c.flatten().unwrap().trace() - (0.2 + 0.15)).abs() < 1e-15);
        assert!((c.trace_mass() - 0.35).abs() < 1e-15);
    }

    #[test]
    fn duplicate_assignment_rejected() {
        let e = DensityOperator::maximally_mixed(2);
        let err = CQState::make(
            vec![key_reg()],
            vec![(vec![0], 0.5, e.clone()), (vec![0], 0.5, e)],
        )
        .unwrap_err();
        assert_eq!(err, StateError::DuplicateAssignment(vec![0]));
    }

    #[test]
    fn bot_symbol_embeds_last() {
        let c =
            CQState::classical(vec![Register::with_bot("A", 2)], vec![(vec![BOT], 1.0)]).unwrap();
        let flat = c.flatten().unwrap();
        assert_eq!(flat.dims(), &[3, 1]);
        assert_eq!(flat.matrix()[(2, 2)].re, 1.0);
        assert!(CQState::classical(vec![key_reg()], vec![(vec![BOT], 1.0)]).is_err());
    }

    #[test]
    fn builder_merges_and_trace_out() {
        let regs = vec![Register::new("A", 2), Register::new("B", 2)];
        let c = CQState::classical(
            regs,
            vec![(vec![0, 0], 0.25), (vec![0, 1], 0.25), (vec![1, 1], 0.5)],
        )
        .unwrap();
        let a = c.trace_out(&["B"]).unwrap();
        assert_eq!(a.classical_entries(), vec![(vec![0], 0.5), (vec![1], 0.5)]);
        let m = c.marginal("B").unwrap();
        assert_eq!(m[&1], 0.75);
    }

    #[test]
    fn tensor_keeps_sorted_order() {
        let a = CQState::classical(
            vec![Register::new("X", 2)],
            vec![(vec![0], 0.5), (vec![1], 0.5)],
        )
        .unwrap();
        let b = CQState::classical(
            vec![Register::new("Y", 3)],
            vec![(vec![0], 0.5), (vec![2], 0.5)],
        )
        .unwrap();
        let t = a.tensor(&b).unwrap();
        assert!(t
            .branches()
            .windows(2)
            .all(|w| w[0].assignment < w[1].assignment));
        assert!(t.get(&[1, 2]).is_some());
        assert!(a.tensor(&a).is_err());
    }
}
