//! Information locking: m key bits encoded in a secret basis.

use std::collections::BTreeMap;

use crate::linalg::{CMatrix, C64};
use crate::qstate::{CQState, CqBuilder, DensityOperator, Povm, Register, Symbol};

use super::{ProtocolError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LockingReport {
    pub m: usize,
    /// I(K₁K₂; Y) for the computational-basis measurement.
    pub pre_reveal_full: f64,
    /// I(K₂; Y) for the computational-basis measurement.
    pub pre_reveal: f64,
    /// I(K₂; Y′) for the measurement in basis K₁ once K₁ is known.
    pub post_reveal: f64,
    pub gap: f64,
    pub total_mass: f64,
}

fn basis_vector(m: usize, k2: u64, hadamard: bool) -> Vec<C64> {
    let d = 1usize << m;
    if !hadamard {
        return (0..d)
            .map(|z| C64::new(f64::from(u8::from(z as u64 == k2)), 0.0))
            .collect();
    }
    let a = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|z| {
            let sign = if (z as u64 & k2).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            C64::new(sign * a, 0.0)
        })
        .collect()
}

fn basis_povm(m: usize, hadamard: bool) -> Result<Povm> {
    let d = 1u64 << m;
    let elems = (0..d)
        .map(|y| CMatrix::outer(&basis_vector(m, y, hadamard)))
        .collect();
    Ok(Povm::new(elems)?)
}

/// ρ_{K₁K₂E}: uniform K₁ ∈ {0,1}, K₂ ∈ {0,1}^m, E holding K₂ in basis K₁.
pub fn locking_state(m: usize) -> Result<CQState> {
    if !(1..=3).contains(&m) {
        return Err(ProtocolError::InvalidParams(format!(
            "m = {m} outside 1..=3"
        )));
    }
    let d = 1u64 << m;
    let regs = vec![Register::new("A.k1", 2), Register::new("A.k2", d)];
    let mut b = CqBuilder::new(regs);
    let w = 1.0 / (2 * d) as f64;
    for k1 in 0..2 {
        for k2 in 0..d {
            let op = DensityOperator::pure(&basis_vector(m, k2, k1 == 1), &[d as usize])?;
            b.add_state(vec![k1, k2], &op, w)?;
        }
    }
    Ok(b.finish()?)
}

fn entropy(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

/// I(A; B) of the classical registers `a` and `b` of a classical state.
pub fn mutual_information(c: &CQState, a: &[&str], b: &[&str]) -> Result<f64> {
    let ia = a
        .iter()
        .map(|n| c.register_index(n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let ib = b
        .iter()
        .map(|n| c.register_index(n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut pa: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
    let mut pb: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
    let mut pab: BTreeMap<(Vec<Symbol>, Vec<Symbol>), f64> = BTreeMap::new();
    let total = c.trace_mass();
    for (asg, w) in c.classical_entries() {
        let va: Vec<Symbol> = ia.iter().map(|&i| asg[i]).collect();
        let vb: Vec<Symbol> = ib.iter().map(|&i| asg[i]).collect();
        *pa.entry(va.clone()).or_default() += w / total;
        *pb.entry(vb.clone()).or_default() += w / total;
        *pab.entry((va, vb)).or_default() += w / total;
    }
    Ok(entropy(pa.into_values()) + entropy(pb.into_values()) - entropy(pab.into_values()))
}

pub fn locking_demo(m: usize) -> Result<LockingReport> {
    let rho = locking_state(m)?;
    let pre = basis_povm(m, false)?.measure_cq(&rho, 0, "E.y")?;
    let k1 = rho.register_index("A.k1")?;
    let post_parts = [false, true]
        .iter()
        .map(|&h| {
            basis_povm(m, h)?
                .measure_cq(&rho.filter(|a| a[k1] == u64::from(h)), 0, "E.y")
                .map_err(Into::into)
        })
        .collect::<Result<Vec<_>>>()?;
    let post = CQState::combine(
        pre.registers().to_vec(),
        &[(1.0, &post_parts[0]), (1.0, &post_parts[1])],
    )?;
    let pre_reveal = mutual_information(&pre, &["A.k2"], &["E.y"])?;
    let post_reveal = mutual_information(&post, &["A.k2"], &["E.y"])?;
    Ok(LockingReport {
        m,
        pre_reveal_full: mutual_information(&pre, &["A.k1", "A.k2"], &["E.y"])?,
        pre_reveal,
        post_reveal,
        gap: post_reveal - pre_reveal,
        total_mass: pre.trace_mass(),
    })
}
