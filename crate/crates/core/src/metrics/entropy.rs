use std::collections::BTreeMap;

use crate::linalg::{hermitian_eig, hermitian_eigenvalues, CMatrix};
use crate::qstate::{Branch, CQState, CqBuilder, DensityOperator, Symbol};
use crate::tolerance;

use super::distance::{check_registers, cq_trace_distance};
use super::{BoundReport, MetricsError, Result};

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -xlogx(p) - xlogx(1.0 - p)
}

fn xlogx(x: f64) -> f64 {
    if x <= tolerance::ENTROPY_ZERO {
        0.0
    } else {
        x * x.log2()
    }
}

fn spectrum_entropy(values: &[f64]) -> f64 {
    -values.iter().map(|&l| xlogx(l)).sum::<f64>()
}

pub fn von_neumann_entropy(r: &DensityOperator) -> Result<f64> {
    Ok(spectrum_entropy(&r.eigenvalues()?))
}

/// Entropy of a block-diagonal cq operator: H(weights) + Σ w S(ρ_b).
fn cq_entropy(c: &CQState) -> Result<f64> {
    let mut s = 0.0;
    for b in c.branches() {
        s -= xlogx(b.weight);
        if b.op.dim() > 1 {
            s += b.weight * von_neumann_entropy(&b.op)?;
        }
    }
    Ok(s)
}

/// Indices of the key registers and of the remaining (side) registers.
fn split_registers(c: &CQState, key: &[&str]) -> Result<(Vec<usize>, Vec<usize>)> {
    let key_idx: Vec<usize> = key
        .iter()
        .map(|k| c.register_index(k))
        .collect::<std::result::Result<_, _>>()?;
    let side_idx = (0..c.registers().len())
        .filter(|i| !key_idx.contains(i))
        .collect();
    Ok((key_idx, side_idx))
}

/// |K|: number of proper (non-⊥) key values.
pub fn key_size(c: &CQState, key: &[&str]) -> Result<usize> {
    let (k, _) = split_registers(c, key)?;
    Ok(k.iter().map(|&i| c.registers()[i].size as usize).product())
}

/// Branches grouped by side assignment, each entry carrying its key tuple.
pub(crate) fn group_by_side<'a>(
    c: &'a CQState,
    key: &[&str],
) -> Result<BTreeMap<Vec<Symbol>, Vec<(Vec<Symbol>, &'a Branch)>>> {
    let (k, s) = split_registers(c, key)?;
    let mut groups: BTreeMap<Vec<Symbol>, Vec<(Vec<Symbol>, &Branch)>> = BTreeMap::new();
    for b in c.branches() {
        let side = s.iter().map(|&i| b.assignment[i]).collect();
        let kv = k.iter().map(|&i| b.assignment[i]).collect();
        groups.entry(side).or_default().push((kv, b));
    }
    Ok(groups)
}

/// ρ_E (together with any non-key classical registers).
pub fn side_marginal(c: &CQState, key: &[&str]) -> Result<CQState> {
    Ok(c.trace_out(key)?)
}

/// τ_K ⊗ σ, laid out with the registers of `c`. `sigma` must be over the
/// non-key registers of `c`, in order.
pub fn uniform_key_state(c: &CQState, key: &[&str], sigma: &CQState) -> Result<CQState> {
    let (k, s) = split_registers(c, key)?;
    let side_regs: Vec<_> = s.iter().map(|&i| c.registers()[i].clone()).collect();
    if sigma.registers() != side_regs.as_slice() {
        return Err(MetricsError::RegisterMismatch(format!(
            "side state has registers {:?}",
            sigma.register_names()
        )));
    }
    let sizes: Vec<u64> = k.iter().map(|&i| c.registers()[i].size).collect();
    let count: u64 = sizes.iter().product();
    let mut builder = CqBuilder::new(c.registers().to_vec());
    let mut assignment = vec![0; c.registers().len()];
    for b in sigma.branches() {
        for (pos, &i) in s.iter().enumerate() {
            assignment[i] = b.assignment[pos];
        }
        for mut idx in 0..count {
            for (pos, &i) in k.iter().enumerate().rev() {
                assignment[i] = idx % sizes[pos];
                idx /= sizes[pos];
            }
            builder.add_branch(
                assignment.clone(),
                &Branch {
                    weight: b.weight / count as f64,
                    ..b.clone()
                },
            )?;
        }
    }
    Ok(builder.finish()?)
}

/// D(ρ_KE, τ_K ⊗ ρ_E).
pub fn uniform_key_distance(c: &CQState, key: &[&str]) -> Result<f64> {
    let ideal = uniform_key_state(c, key, &side_marginal(c, key)?)?;
    cq_trace_distance(c, &ideal)
}

/// S(K|E) = S(ρ_KE) − S(ρ_E).
pub fn conditional_entropy(c: &CQState, key: &[&str]) -> Result<f64> {
    Ok(cq_entropy(c)? - cq_entropy(&side_marginal(c, key)?)?)
}

/// tr a log a − tr a log b for positive (possibly subnormalised) blocks;
/// +∞ when supp a ⊄ supp b.
fn relative_entropy_blocks(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let ea = hermitian_eigenvalues(a)?;
    let eb = hermitian_eig(b)?;
    let mut cross = 0.0;
    for (j, &mu) in eb.values.iter().enumerate() {
        let v = eb.vector(j);
        let mut w = 0.0;
        for x in 0..a.rows() {
            for y in 0..a.cols() {
                w += (v[x].conj() * a[(x, y)] * v[y]).re;
            }
        }
        if mu <= tolerance::ENTROPY_ZERO {
            if w > tolerance::PSD {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += w * mu.log2();
    }
    Ok(ea.iter().map(|&l| xlogx(l)).sum::<f64>() - cross)
}

/// S(ρ‖σ) in bits; `f64::INFINITY` on a support violation.
pub fn relative_entropy(r: &DensityOperator, s: &DensityOperator) -> Result<f64> {
    if r.dim() != s.dim() {
        return Err(MetricsError::DimMismatch(r.dim(), s.dim()));
    }
    relative_entropy_blocks(r.matrix(), s.matrix())
}

/// Block-wise relative entropy of two cq states with identical registers.
pub fn relative_entropy_cq(r: &CQState, s: &CQState) -> Result<f64> {
    check_registers(r, s)?;
    let mut total = 0.0;
    for b in r.branches() {
        let Some(o) = s.get(&b.assignment) else {
            return Ok(f64::INFINITY);
        };
        if b.op.dim() != o.op.dim() {
            return Err(MetricsError::DimMismatch(b.op.dim(), o.op.dim()));
        }
        total += if b.op.dim() == 1 {
            b.weight * (b.weight / o.weight).log2()
        } else {
            relative_entropy_blocks(&b.weighted_matrix(), &o.weighted_matrix())?
        };
        if total.is_infinite() {
            return Ok(total);
        }
    }
    Ok(total)
}

/// (1 − p_abort) · D(ρ_KE, τ_K ⊗ ρ_E) for the state conditioned on acceptance.
pub fn secrecy_distance(c: &CQState, key: &[&str], p_abort: f64) -> Result<f64> {
    if p_abort >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - p_abort) * uniform_key_distance(c, key)?)
}

/// The three entropy reports: continuity lower bound on S(K|E), the
/// distance upper bound from S(K|E), and S(ρ‖τ⊗ρ_E) ≥ 2D².
pub fn entropy_bounds(c: &CQState, key: &[&str]) -> Result<Vec<BoundReport>> {
    let eps = uniform_key_distance(c, key)?;
    let s_cond = conditional_entropy(c, key)?;
    let log_k = (key_size(c, key)? as f64).log2();
    let af = (1.0 - 8.0 * eps) * log_k - 2.0 * binary_entropy(2.0 * eps);
    let af_report = if eps <= 0.25 {
        BoundReport::new("alicki_fannes", af, s_cond)
    } else {
        BoundReport::not_applicable("alicki_fannes", af, s_cond)
    };
    let pinsker = (0.5 * (log_k - s_cond)).max(0.0).sqrt();
    let ideal = uniform_key_state(c, key, &side_marginal(c, key)?)?;
    let rel = relative_entropy_cq(c, &ideal)?;
    Ok(vec![
        af_report,
        BoundReport::new("entropy_distance_bound", eps, pinsker),
        BoundReport::new("relative_entropy_pinsker", 2.0 * eps * eps, rel),
    ])
}

/// Checks D(ρ_KE, τ⊗ρ_E) ≤ 2 D(ρ_KE, τ⊗σ_E) for every candidate (ρ_E is
/// always included). `right` is twice the best candidate value.
pub fn alt_secrecy_relation(
    c: &CQState,
    key: &[&str],
    candidates: &[CQState],
) -> Result<BoundReport> {
    let rho_e = side_marginal(c, key)?;
    let d = cq_trace_distance(c, &uniform_key_state(c, key, &rho_e)?)?;
    let mut best = d;
    for sigma in candidates {
        let v = cq_trace_distance(c, &uniform_key_state(c, key, sigma)?)?;
        best = best.min(v);
    }
    Ok(BoundReport::new("alt_secrecy_factor2", d, 2.0 * best))
}
