//! Composition examples built from the QKD, one-time pad and key resources.

use std::sync::Arc;

use rayon::prelude::*;

use crate::acframework::{
    advantage_over_family, AdvantageReport, AttackFamily, AttackStrategy, Interface, SystemGraph,
};
use crate::metrics::BoundReport;

use super::gf2::Bits;
use super::otp::{attach_otp, OtpSimulator};
use super::qkd::{
    build_qkd_systems, parallel_qkd_systems, qkd_case, qkd_simulator, LeakConverter, QkdParams,
};
use super::resources::SecureChannel;
use super::{ProtocolError, Result};

#[derive(Debug, Clone)]
pub struct LeakedKeyReport {
    pub split: usize,
    pub plain: AdvantageReport,
    pub leaked: AdvantageReport,
    /// |leaked − plain| against 0.
    pub report: BoundReport,
}

/// Alice hands the first `split` key bits to Eve on both the real and the
/// ideal side; the advantage must not change.
pub fn leaked_key_scenario(
    p: &QkdParams,
    split: usize,
    fam: &AttackFamily,
) -> Result<LeakedKeyReport> {
    if split >= p.out_len {
        return Err(ProtocolError::InvalidParams(format!(
            "split {split} must be below the key length {}",
            p.out_len
        )));
    }
    let (real, ideal) = build_qkd_systems(p)?;
    let plain = advantage_over_family(&real, &ideal, fam)?;
    let leak = Arc::new(LeakConverter {
        split,
        key_len: p.out_len,
    });
    let real_l = real.attach_converter(leak.clone(), Interface::A)?;
    let ideal_l = ideal.attach_converter(leak, Interface::A)?;
    let leaked = advantage_over_family(&real_l, &ideal_l, fam)?;
    let report = BoundReport::new(
        "leaked_minus_plain",
        (leaked.value - plain.value).abs(),
        0.0,
    );
    Ok(LeakedKeyReport {
        split,
        plain,
        leaked,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct QkdOtpReport {
    pub qkd: AdvantageReport,
    pub composed: AdvantageReport,
    /// Worst D(real, hybrid): QKD replaced by the key resource with simulator.
    pub real_to_hybrid: f64,
    /// Worst D(hybrid, ideal): one-time pad replaced by the secure channel.
    pub hybrid_to_ideal: f64,
    /// Pr[B.msg = msg] under the identity strategy.
    pub delivery: f64,
    /// Composed advantage against the QKD advantage.
    pub report: BoundReport,
    /// Composed advantage against the two hybrid steps.
    pub triangle: BoundReport,
}

/// QKD followed by a one-time pad of `msg`, compared with a secure channel
/// plus both simulators.
pub fn qkd_otp_scenario(p: &QkdParams, msg: Bits, fam: &AttackFamily) -> Result<QkdOtpReport> {
    if msg.len != p.out_len {
        return Err(ProtocolError::LengthMismatch {
            expected: p.out_len,
            found: msg.len,
        });
    }
    let fam = fam.clone().with_input("A.msg", msg.word);
    let (qkd_real, qkd_ideal) = build_qkd_systems(p)?;
    let real = attach_otp(&qkd_real, p.out_len)?;
    let hybrid = attach_otp(&qkd_ideal, p.out_len)?;
    let ideal = SystemGraph::leaf(SecureChannel::new(p.out_len))
        .attach_converter(Arc::new(OtpSimulator { len: p.out_len }), Interface::E)?
        .attach_converter(qkd_simulator(p), Interface::E)?;

    let qkd = advantage_over_family(&qkd_real, &qkd_ideal, &fam)?;
    let composed = advantage_over_family(&real, &ideal, &fam)?;
    let steps = fam
        .expand()
        .par_iter()
        .map(|a| {
            let (r, h, i) = (real.evaluate(a)?, hybrid.evaluate(a)?, ideal.evaluate(a)?);
            Ok((r.distance(&h)?, h.distance(&i)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let real_to_hybrid = steps.iter().map(|s| s.0).fold(0.0, f64::max);
    let hybrid_to_ideal = steps.iter().map(|s| s.1).fold(0.0, f64::max);

    let honest = real.evaluate_cq(&AttackStrategy::identity().with_input("A.msg", msg.word))?;
    let bi = honest.register_index("B.msg")?;
    let delivery = honest.probability(|a| a[bi] == msg.word);
    Ok(QkdOtpReport {
        report: BoundReport::new("composed_le_qkd", composed.value, qkd.value),
        triangle: BoundReport::new(
            "composed_le_hybrid_steps",
            composed.value,
            real_to_hybrid + hybrid_to_ideal,
        ),
        qkd,
        composed,
        real_to_hybrid,
        hybrid_to_ideal,
        delivery,
    })
}

#[derive(Debug, Clone)]
pub struct ParallelQkdReport {
    /// max over the single-instance family of ε_cor + ε_sec.
    pub eps_single: f64,
    /// max over the single-instance family of the measured advantage.
    pub single_advantage: f64,
    pub parallel: AdvantageReport,
    /// Parallel advantage against 2 ε_single.
    pub report: BoundReport,
}

/// Qubit swap between position `i` of the first and `j` of the second instance.
pub fn swap_attack(pairs: &[(usize, usize)]) -> AttackStrategy {
    let id = pairs
        .iter()
        .map(|(i, j)| format!("{i}-{j}"))
        .collect::<Vec<_>>()
        .join(",");
    AttackStrategy::named(format!("swap:{id}")).with_crossing(pairs.to_vec())
}

/// Two instances side by side against the product of `single` with itself
/// plus the given crossing strategies.
pub fn parallel_qkd_scenario(
    p: &QkdParams,
    single: &AttackFamily,
    crossing: &[AttackStrategy],
) -> Result<ParallelQkdReport> {
    let cases = single
        .expand()
        .par_iter()
        .map(|a| qkd_case(p, a))
        .collect::<Result<Vec<_>>>()?;
    let eps_single = cases
        .iter()
        .map(|c| c.eps_cor + c.eps_sec)
        .fold(0.0, f64::max);
    let single_advantage = cases.iter().map(|c| c.advantage).fold(0.0, f64::max);
    let mut fam = AttackFamily::product(format!("{}^2", single.name), &[single, single]);
    for c in crossing {
        fam.add(c.clone());
    }
    let (real, ideal) = parallel_qkd_systems(p, p)?;
    let parallel = advantage_over_family(&real, &ideal, &fam)?;
    Ok(ParallelQkdReport {
        eps_single,
        single_advantage,
        report: BoundReport::new("parallel_le_twice_single", parallel.value, 2.0 * eps_single),
        parallel,
    })
}
