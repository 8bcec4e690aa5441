use std::cmp::Ordering;

use crate::linalg::{hermitian_eig, CMatrix};
use crate::qstate::{Branch, CQState, ClassicalDistribution, DensityOperator, Povm};

use super::{MetricsError, Result};

/// ½ Σ |p(z) − q(z)|.
pub fn total_variation(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<f64> {
    check_alphabet(p, q)?;
    Ok(0.5
        * p.probs()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// 1 − Σ min(p(z), q(z)).
pub fn total_variation_min_form(
    p: &ClassicalDistribution,
    q: &ClassicalDistribution,
) -> Result<f64> {
    check_alphabet(p, q)?;
    Ok(1.0
        - p.probs()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| a.min(*b))
            .sum::<f64>())
}

pub(crate) fn check_alphabet(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(MetricsError::AlphabetMismatch(p.len(), q.len()));
    }
    Ok(())
}

fn check_dims(r: &DensityOperator, s: &DensityOperator) -> Result<()> {
    if r.dim() != s.dim() {
        return Err(MetricsError::DimMismatch(r.dim(), s.dim()));
    }
    Ok(())
}

/// ½ tr|ρ − σ|.
pub fn trace_distance(r: &DensityOperator, s: &DensityOperator) -> Result<f64> {
    check_dims(r, s)?;
    Ok(0.5 * (r.matrix() - s.matrix()).trace_norm_hermitian()?)
}

/// Projector onto the nonnegative eigenspace of ρ − σ, and I − Γ₊.
pub fn helstrom_povm(r: &DensityOperator, s: &DensityOperator) -> Result<Povm> {
    check_dims(r, s)?;
    let plus = positive_projector(&(r.matrix() - s.matrix()))?;
    let minus = &CMatrix::identity(r.dim()) - &plus;
    Ok(Povm::new(vec![plus, minus])?)
}

/// tr(Γ₊ (ρ − σ)) for the Helstrom projector.
pub fn helstrom_value(r: &DensityOperator, s: &DensityOperator) -> Result<f64> {
    let povm = helstrom_povm(r, s)?;
    Ok(r.expectation(&povm.elements()[0]) - s.expectation(&povm.elements()[0]))
}

pub(crate) fn positive_projector(delta: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(delta)?;
    let n = delta.rows();
    let mut p = CMatrix::zeros(n, n);
    for (i, &l) in eig.values.iter().enumerate() {
        if l >= 0.0 {
            p.add_scaled(&CMatrix::outer(&eig.vector(i)), 1.0);
        }
    }
    Ok(p.hermitian_part())
}

/// Optimal probability of telling ρ from σ given with equal priors.
pub fn guessing_probability(r: &DensityOperator, s: &DensityOperator) -> Result<f64> {
    Ok(0.5 + 0.5 * trace_distance(r, s)?)
}

/// Advantage 2·guess − 1 of the optimal distinguisher.
pub fn distinguishing_advantage(r: &DensityOperator, s: &DensityOperator) -> Result<f64> {
    Ok(2.0 * guessing_probability(r, s)? - 1.0)
}

/// Success probability of measuring `povm` and guessing the likelier state
/// for each outcome.
pub fn povm_guess_probability(
    povm: &Povm,
    r: &DensityOperator,
    s: &DensityOperator,
) -> Result<f64> {
    check_dims(r, s)?;
    let pr = povm.outcome_weights(r)?;
    let ps = povm.outcome_weights(s)?;
    Ok(0.5 * pr.iter().zip(&ps).map(|(a, b)| a.max(*b)).sum::<f64>())
}

pub(crate) fn check_registers(r: &CQState, s: &CQState) -> Result<()> {
    if r.registers() != s.registers() {
        return Err(MetricsError::RegisterMismatch(format!(
            "{:?} vs {:?}",
            r.register_names(),
            s.register_names()
        )));
    }
    Ok(())
}

/// ½‖w_r ρ_r − w_s ρ_s‖₁ for one block (either side may be absent).
fn block_distance(a: Option<&Branch>, b: Option<&Branch>) -> Result<f64> {
    match (a, b) {
        (Some(a), Some(b)) => {
            if a.op.dim() != b.op.dim() {
                return Err(MetricsError::DimMismatch(a.op.dim(), b.op.dim()));
            }
            if a.op.dim() == 1 || a.op.matrix() == b.op.matrix() {
                return Ok(0.5 * (a.weight - b.weight).abs());
            }
            let mut d = a.weighted_matrix();
            d.add_scaled(b.op.matrix(), -b.weight);
            Ok(0.5 * d.trace_norm_hermitian()?)
        }
        (Some(x), None) | (None, Some(x)) => Ok(0.5 * x.weight),
        (None, None) => Ok(0.0),
    }
}

/// Trace distance of two cq states with identical registers, computed block
/// by block over classical assignments.
pub fn cq_trace_distance(r: &CQState, s: &CQState) -> Result<f64> {
    check_registers(r, s)?;
    let (a, b) = (r.branches(), s.branches());
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.assignment.cmp(&y.assignment),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        total += match ord {
            Ordering::Equal => {
                i += 1;
                j += 1;
                block_distance(Some(&a[i - 1]), Some(&b[j - 1]))?
            }
            Ordering::Less => {
                i += 1;
                block_distance(Some(&a[i - 1]), None)?
            }
            Ordering::Greater => {
                j += 1;
                block_distance(None, Some(&b[j - 1]))?
            }
        };
    }
    Ok(total)
}

/// Blocks of two states with the same registers, paired by assignment.
fn merged_blocks<'a>(
    r: &'a CQState,
    s: &'a CQState,
) -> Vec<(Option<&'a Branch>, Option<&'a Branch>)> {
    let (a, b) = (r.branches(), s.branches());
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.assignment.cmp(&y.assignment),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Equal => {
                out.push((Some(&a[i]), Some(&b[j])));
                i += 1;
                j += 1;
            }
            Ordering::Less => {
                out.push((Some(&a[i]), None));
                i += 1;
            }
            Ordering::Greater => {
                out.push((None, Some(&b[j])));
                j += 1;
            }
        }
    }
    out
}

/// D(r₁ ⊗ … ⊗ r_k, s₁ ⊗ … ⊗ s_k) without materialising either product.
pub fn product_trace_distance(r: &[&CQState], s: &[&CQState]) -> Result<f64> {
    if r.len() != s.len() {
        return Err(MetricsError::RegisterMismatch(format!(
            "{} factors vs {}",
            r.len(),
            s.len()
        )));
    }
    if r.is_empty() {
        return Ok(0.0);
    }
    let mut blocks = Vec::with_capacity(r.len());
    for (x, y) in r.iter().zip(s) {
        check_registers(x, y)?;
        blocks.push(merged_blocks(x, y));
    }
    let classical = r
        .iter()
        .chain(s)
        .all(|st| st.branches().iter().all(|b| b.op.dim() == 1));
    if classical {
        let w: Vec<Vec<(f64, f64)>> = blocks
            .iter()
            .map(|bl| {
                bl.iter()
                    .map(|(a, b)| (a.map_or(0.0, |x| x.weight), b.map_or(0.0, |x| x.weight)))
                    .collect()
            })
            .map(ratio_classes)
            .collect();
        return Ok(0.5 * classical_product_l1(&w, 1.0, 1.0));
    }
    let mut idx = vec![0usize; blocks.len()];
    let mut total = 0.0;
    loop {
        let mut wa = 1.0;
        let mut wb = 1.0;
        let mut oa = CMatrix::identity(1);
        let mut ob = CMatrix::identity(1);
        for (f, &i) in idx.iter().enumerate() {
            let (a, b) = blocks[f][i];
            wa *= a.map_or(0.0, |x| x.weight);
            wb *= b.map_or(0.0, |x| x.weight);
            let dim = a.or(b).map(|x| x.op.dim()).unwrap_or(1);
            oa = oa.kron(a.map_or(&CMatrix::zeros(dim, dim), |x| x.op.matrix()));
            ob = ob.kron(b.map_or(&CMatrix::zeros(dim, dim), |x| x.op.matrix()));
        }
        if oa == ob || oa.rows() == 1 {
            total += 0.5 * (wa - wb).abs();
        } else {
            let mut d = oa.scale(wa);
            d.add_scaled(&ob, -wb);
            total += 0.5 * d.trace_norm_hermitian()?;
        }
        let mut f = blocks.len();
        loop {
            if f == 0 {
                return Ok(total);
            }
            f -= 1;
            idx[f] += 1;
            if idx[f] < blocks[f].len() {
                break;
            }
            idx[f] = 0;
        }
    }
}

/// Relative spread of a/b tolerated inside one likelihood-ratio class.
const RATIO_MERGE: f64 = 1e-13;

/// Merges outcomes of one factor with equal likelihood ratio a/b. Each tuple
/// term |a·P − b·Q| is linear in (a, b) along a ray, so the product L1 sum is
/// unchanged.
fn ratio_classes(pairs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let (mut only_a, mut only_b) = (0.0, 0.0);
    let mut both: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        match (a > 0.0, b > 0.0) {
            (true, false) => only_a += a,
            (false, true) => only_b += b,
            (true, true) => both.push((a, b)),
            (false, false) => {}
        }
    }
    both.sort_by(|x, y| (x.0 / x.1).total_cmp(&(y.0 / y.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut lead = f64::NAN;
    for (a, b) in both {
        let r = a / b;
        match out.last_mut() {
            Some(last) if (r - lead).abs() <= RATIO_MERGE * lead => {
                last.0 += a;
                last.1 += b;
            }
            _ => {
                lead = r;
                out.push((a, b));
            }
        }
    }
    out.extend(
        [(only_a, 0.0), (0.0, only_b)]
            .into_iter()
            .filter(|p| p.0 + p.1 > 0.0),
    );
    out
}

/// Σ over index tuples of |Π a − Π b|, recursing factor by factor.
fn classical_product_l1(w: &[Vec<(f64, f64)>], pa: f64, pb: f64) -> f64 {
    match w.split_first() {
        None => (pa - pb).abs(),
        Some((first, rest)) => first
            .iter()
            .map(|&(a, b)| {
                let (na, nb) = (pa * a, pb * b);
                if na == 0.0 && nb == 0.0 {
                    0.0
                } else if na == nb && rest.iter().all(|f| f.iter().all(|(x, y)| x == y)) {
                    0.0
                } else {
                    classical_product_l1(rest, na, nb)
                }
            })
            .sum(),
    }
}

/// Block-diagonal Helstrom measurement Σ_z |z⟩⟨z| ⊗ M^z on the flattened
/// space: outcome 0 guesses `r`, outcome 1 guesses `s`.
pub fn optimal_cq_povm(r: &CQState, s: &CQState) -> Result<Povm> {
    check_registers(r, s)?;
    let qd = common_quantum_dim(r, s)?;
    let radices: Vec<usize> = r.registers().iter().map(|x| x.dim() as usize).collect();
    let blocks: usize = radices.iter().product();
    let total = blocks * qd;
    if total > crate::tolerance::DEFAULT_MAX_DIMENSION {
        return Err(MetricsError::Unsupported(format!(
            "flattened dimension {total} exceeds the cap"
        )));
    }
    let mut plus = CMatrix::identity(total);
    let mut set_block = |assignment: &[u64], delta: &CMatrix| -> Result<()> {
        let mut idx = 0usize;
        for (reg, &sym) in r.registers().iter().zip(assignment) {
            idx = idx * reg.dim() as usize + reg.embed(sym);
        }
        let p = positive_projector(delta)?;
        let base = idx * qd;
        for x in 0..qd {
            for y in 0..qd {
                plus[(base + x, base + y)] = p[(x, y)];
            }
        }
        Ok(())
    };
    for br in r.branches() {
        let mut delta = br.weighted_matrix();
        if let Some(o) = s.get(&br.assignment) {
            delta.add_scaled(o.op.matrix(), -o.weight);
        }
        set_block(&br.assignment, &delta)?;
    }
    for br in s.branches() {
        if r.get(&br.assignment).is_none() {
            set_block(&br.assignment, &br.weighted_matrix().scale(-1.0))?;
        }
    }
    let minus = &CMatrix::identity(total) - &plus;
    Ok(Povm::new(vec![plus, minus])?)
}

fn common_quantum_dim(r: &CQState, s: &CQState) -> Result<usize> {
    let mut dim = None;
    for b in r.branches().iter().chain(s.branches()) {
        match dim {
            None => dim = Some(b.op.dim()),
            Some(d) if d != b.op.dim() => return Err(MetricsError::DimMismatch(d, b.op.dim())),
            _ => {}
        }
    }
    Ok(dim.unwrap_or(1))
}
