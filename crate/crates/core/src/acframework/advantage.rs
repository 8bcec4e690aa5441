use std::sync::Arc;

use rayon::prelude::*;

use crate::metrics::BoundReport;

use super::attack::{AttackFamily, AttackStrategy, ParamFamily};
use super::system::{Converter, SystemGraph};
use super::{Interface, Result};

const GOLDEN_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageReport {
    pub family: String,
    pub value: f64,
    pub best: String,
    /// Distance for every evaluated strategy, in evaluation order.
    pub per_attack: Vec<(String, f64)>,
}

fn gap(real: &SystemGraph, ideal: &SystemGraph, a: &AttackStrategy) -> Result<f64> {
    real.evaluate(a)?.distance(&ideal.evaluate(a)?)
}

/// Largest trace distance between `real` and `ideal` over the family.
/// Parameter families are searched on their grid and then refined by golden
/// section around the best grid point.
pub fn advantage_over_family(
    real: &SystemGraph,
    ideal: &SystemGraph,
    fam: &AttackFamily,
) -> Result<AdvantageReport> {
    let mut per_attack: Vec<(String, f64)> = fam
        .members()
        .par_iter()
        .map(|a| Ok((a.id.clone(), gap(real, ideal, a)?)))
        .collect::<Result<_>>()?;
    for p in fam.params() {
        per_attack.extend(search_param(real, ideal, p)?);
    }
    let (best, value) =
        per_attack
            .iter()
            .fold((String::new(), f64::NEG_INFINITY), |(bn, bv), (n, v)| {
                if *v > bv {
                    (n.clone(), *v)
                } else {
                    (bn, bv)
                }
            });
    Ok(AdvantageReport {
        family: fam.name.clone(),
        value,
        best,
        per_attack,
    })
}

fn search_param(
    real: &SystemGraph,
    ideal: &SystemGraph,
    p: &ParamFamily,
) -> Result<Vec<(String, f64)>> {
    let grid: Vec<(f64, String, f64)> = (0..p.grid)
        .into_par_iter()
        .map(|i| {
            let x = p.point(i);
            let a = (p.build)(x);
            Ok((x, a.id.clone(), gap(real, ideal, &a)?))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<(String, f64)> = grid.iter().map(|(_, n, v)| (n.clone(), *v)).collect();
    if !p.refine || p.grid < 3 {
        return Ok(out);
    }
    let best = (0..grid.len()).fold(0, |b, i| if grid[i].2 > grid[b].2 { i } else { b });
    let lo = grid[best.saturating_sub(1)].0;
    let hi = grid[(best + 1).min(grid.len() - 1)].0;
    let f = |x: f64| -> Result<(String, f64)> {
        let a = (p.build)(x);
        Ok((a.id.clone(), gap(real, ideal, &a)?))
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_STEPS {
        if fc.1 >= fd.1 {
            b = d;
            d = c;
            out.push(fd);
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            out.push(fc);
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    out.push(fc);
    out.push(fd);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecurityReport {
    /// Condition (i): filtered real vs filtered ideal under honest behaviour.
    pub availability: BoundReport,
    /// Condition (ii): real vs ideal with simulator, worst case over the family.
    pub security: BoundReport,
    pub advantage: AdvantageReport,
}

/// Both conditions of ε-secure construction against a finite attack family.
pub fn security_check(
    real: &SystemGraph,
    ideal: &SystemGraph,
    real_filter: Arc<dyn Converter>,
    ideal_filter: Arc<dyn Converter>,
    simulator: Arc<dyn Converter>,
    fam: &AttackFamily,
    epsilon: f64,
) -> Result<SecurityReport> {
    let base = &fam.members()[0];
    let rf = real.attach_converter(real_filter, Interface::E)?;
    let idf = ideal.attach_converter(ideal_filter, Interface::E)?;
    let d_avail = rf.evaluate(base)?.distance(&idf.evaluate(base)?)?;
    let sim = ideal.attach_converter(simulator, Interface::E)?;
    let adv = advantage_over_family(real, &sim, fam)?;
    Ok(SecurityReport {
        availability: BoundReport::new("availability", d_avail, epsilon),
        security: BoundReport::new("security", adv.value, epsilon),
        advantage: adv,
    })
}
