use crate::acframework::{AttackFamily, AttackStrategy, ParamFamily};
use crate::linalg::{CMatrix, C64};
use crate::qstate::KrausChannel;

/// Intercept-resend with probability p: measure in a uniformly random basis β,
/// resend the outcome z and keep the label 2β + z (label 0 when not
/// intercepting).
pub fn intercept_resend_channel(p: f64) -> KrausChannel {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let env = 4;
    let mut ops = Vec::with_capacity(5);
    let mut keep = CMatrix::zeros(2 * env, 2);
    keep[(0, 0)] = C64::new((1.0 - p).sqrt(), 0.0);
    keep[(env, 1)] = C64::new((1.0 - p).sqrt(), 0.0);
    ops.push(keep);
    let s = (p / 2.0).sqrt();
    for beta in 0..2 {
        for z in 0..2 {
            let v: [f64; 2] = match (beta, z) {
                (0, 0) => [1.0, 0.0],
                (0, _) => [0.0, 1.0],
                (_, 0) => [h, h],
                (_, _) => [h, -h],
            };
            let label = 2 * beta + z;
            let mut k = CMatrix::zeros(2 * env, 2);
            for q in 0..2 {
                for c in 0..2 {
                    k[(q * env + label, c)] = C64::new(s * v[q] * v[c], 0.0);
                }
            }
            ops.push(k);
        }
    }
    KrausChannel::new(ops, 2, vec![2, env]).expect("intercept-resend is trace preserving")
}

/// Depolarising noise of strength q with Eve holding the purifying environment.
pub fn depolarize_channel(q: f64) -> KrausChannel {
    KrausChannel::depolarizing(q).stinespring()
}

pub fn intercept_resend(p: f64) -> AttackStrategy {
    AttackStrategy::named(format!("intercept-resend:{}", fmt_param(p)))
        .with_channel(intercept_resend_channel(p))
}

pub fn depolarize(q: f64) -> AttackStrategy {
    AttackStrategy::named(format!("depolarize:{}", fmt_param(q)))
        .with_channel(depolarize_channel(q))
}

/// Honest noise ♯^q: depolarising channel that leaves nothing with Eve.
pub fn honest_noise(q: f64) -> AttackStrategy {
    AttackStrategy::named(format!("noise:{}", fmt_param(q)))
        .with_channel(KrausChannel::depolarizing(q))
}

fn fmt_param(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Identity plus intercept-resend and depolarising attacks on `points`-point grids over [0, 1].
pub fn standard_family(points: usize) -> AttackFamily {
    let ir =
        ParamFamily::new("intercept-resend", 0.0, 1.0, intercept_resend).with_grid(points, false);
    let dep = ParamFamily::new("depolarize", 0.0, 1.0, depolarize).with_grid(points, false);
    AttackFamily::new(format!("bb84[{points}]"))
        .with_grid(&ir)
        .with_grid(&dep)
}

/// Intercept-resend only.
pub fn intercept_resend_family(points: usize) -> AttackFamily {
    let ir =
        ParamFamily::new("intercept-resend", 0.0, 1.0, intercept_resend).with_grid(points, false);
    AttackFamily::new(format!("intercept-resend[{points}]")).with_grid(&ir)
}
