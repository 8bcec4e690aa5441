use std::time::Instant;

use rayon::prelude::*;

use crate::acframework::{advantage_over_family, AttackFamily, AttackStrategy};
use crate::metrics::{run_property_checks, BoundReport};
use crate::protocols::qkd::{
    depolarize, honest_noise, intercept_resend, intercept_resend_family, key_expansion,
    qkd_robustness_eval, qkd_security_eval, standard_family, QkdSecurityReport, DEFAULT_PA_SEED,
};
use crate::protocols::{
    build_auth_systems, leaked_key_scenario, locking_demo, otp_advantage, parallel_auth_systems,
    parallel_qkd_scenario, parallel_substitution_family, qkd_otp_scenario, substitution_family,
    swap_attack, verify_asu2, Bits, HashFamily, QkdParams,
};
use crate::qstate::derive_seed;
use crate::tolerance;

use super::config::{RunConfig, Scenario};
use super::report::{sort_rows, ReportRow};
use super::HarnessError;

/// Sub-seed streams: the global seed is split with `derive_seed(seed, stream)`.
/// Only the randomised metric audit consumes randomness; protocol scenarios
/// are exact enumerations.
pub const STREAM_METRICS: u64 = 1;

/// Rows plus the per-attack QKD detail when the scenario produced one.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub rows: Vec<ReportRow>,
    pub qkd: Vec<(f64, QkdSecurityReport)>,
}

pub fn run_scenario(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    Ok(run_scenario_full(cfg)?.rows)
}

pub fn run_scenario_full(cfg: &RunConfig) -> Result<ScenarioOutput, HarnessError> {
    let mut out = ScenarioOutput {
        rows: Vec::new(),
        qkd: Vec::new(),
    };
    match cfg.scenario {
        Scenario::Compose => {
            let parts = [
                Scenario::LeakedKey,
                Scenario::QkdOtp,
                Scenario::ParallelQkd,
                Scenario::KeyExpansion,
            ];
            let results = parts
                .par_iter()
                .map(|&s| run_one(cfg, s, &mut Vec::new()))
                .collect::<Result<Vec<_>, _>>()?;
            out.rows = results.into_iter().flatten().collect();
        }
        s => out.rows = run_one(cfg, s, &mut out.qkd)?,
    }
    sort_rows(&mut out.rows);
    Ok(out)
}

fn run_one(
    cfg: &RunConfig,
    s: Scenario,
    detail: &mut Vec<(f64, QkdSecurityReport)>,
) -> Result<Vec<ReportRow>, HarnessError> {
    let start = Instant::now();
    let mut rows = match s {
        Scenario::MetricsSuite => metrics_suite(cfg)?,
        Scenario::Otp => otp(cfg)?,
        Scenario::Qkd => qkd(cfg, detail)?,
        Scenario::Robustness => robustness(cfg)?,
        Scenario::Auth => auth(cfg)?,
        Scenario::LeakedKey => leaked_key(cfg)?,
        Scenario::QkdOtp => qkd_otp(cfg)?,
        Scenario::ParallelQkd => parallel_qkd(cfg)?,
        Scenario::KeyExpansion => expansion(cfg)?,
        Scenario::LockDemo => lockdemo(cfg)?,
        Scenario::Compose => unreachable!("compose is expanded by the caller"),
    };
    if cfg.timings {
        let ms = start.elapsed().as_millis() as u64;
        for r in &mut rows {
            r.runtime_ms = ms;
        }
    }
    Ok(rows)
}

/// Parses a comma-separated attack list into a family (identity is always
/// included): `identity`, `intercept-resend:p`, `depolarize:q`, `noise:q`,
/// `standard:points`, `intercept-resend-grid:points`.
pub fn parse_attack_family(spec: &str) -> Result<AttackFamily, HarnessError> {
    let mut fam = AttackFamily::new(spec);
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (kind, arg) = tok.split_once(':').unwrap_or((tok, ""));
        let prob = || -> Result<f64, HarnessError> {
            let q: f64 = arg.parse().map_err(|_| bad_attack(tok))?;
            if (0.0..=1.0).contains(&q) {
                Ok(q)
            } else {
                Err(bad_attack(tok))
            }
        };
        let points = || -> Result<usize, HarnessError> {
            match arg.parse::<usize>() {
                Ok(n) if n >= 2 => Ok(n),
                _ => Err(bad_attack(tok)),
            }
        };
        match kind {
            "identity" if arg.is_empty() => {}
            "intercept-resend" => {
                fam.add(intercept_resend(prob()?));
            }
            "depolarize" => {
                fam.add(depolarize(prob()?));
            }
            "noise" => {
                fam.add(honest_noise(prob()?));
            }
            "standard" => fam = merge(fam, standard_family(points()?)),
            "intercept-resend-grid" => fam = merge(fam, intercept_resend_family(points()?)),
            _ => return Err(bad_attack(tok)),
        }
    }
    Ok(fam)
}

fn merge(mut into: AttackFamily, from: AttackFamily) -> AttackFamily {
    for a in from.expand().into_iter().filter(|a| a.id != "identity") {
        into.add(a);
    }
    into
}

fn bad_attack(tok: &str) -> HarnessError {
    HarnessError::BadAttack(tok.to_string())
}

/// Crossing strategies for the parallel scenario: `none`, `swap-all`, or
/// pairs `i-j` joined by `+` (one strategy per comma-separated entry).
pub fn parse_crossing(spec: &str, n: usize) -> Result<Vec<AttackStrategy>, HarnessError> {
    let mut out = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok {
            "none" => {}
            "swap-all" => out.push(swap_attack(&(0..n).map(|i| (i, i)).collect::<Vec<_>>())),
            _ => {
                let pairs = tok
                    .split('+')
                    .map(|p| {
                        let (i, j) = p.split_once('-')?;
                        let (i, j) = (
                            i.trim().parse::<usize>().ok()?,
                            j.trim().parse::<usize>().ok()?,
                        );
                        (i < n && j < n).then_some((i, j))
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| bad_attack(tok))?;
                out.push(swap_attack(&pairs));
            }
        }
    }
    Ok(out)
}

fn params(
    cfg: &RunConfig,
    n: usize,
    t: usize,
    q_tol: f64,
    h_rows: usize,
    out_len: usize,
) -> Result<QkdParams, HarnessError> {
    Ok(QkdParams::new(
        cfg.n_qubits.unwrap_or(n),
        cfg.t.unwrap_or(t),
        q_tol,
        cfg.h_rows.unwrap_or(h_rows),
        cfg.out_len.unwrap_or(out_len),
        cfg.pa_seed.unwrap_or(DEFAULT_PA_SEED),
    )?)
}

fn family(cfg: &RunConfig, default: &str) -> Result<AttackFamily, HarnessError> {
    parse_attack_family(cfg.attack.as_deref().unwrap_or(default))
}

fn bound_row(s: Scenario, case: impl Into<String>, b: &BoundReport, tol: f64) -> ReportRow {
    ReportRow::new(s.name(), case, b.left, b.right, tol)
}

fn metrics_suite(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let reports = run_property_checks(derive_seed(cfg.seed, STREAM_METRICS), cfg.trials)?;
    // each property carries its own tolerance as the bound
    Ok(reports
        .into_iter()
        .map(|r| {
            ReportRow::new(
                Scenario::MetricsSuite.name(),
                r.name,
                r.max_violation,
                r.tolerance,
                0.0,
            )
        })
        .collect())
}

fn otp(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    (1..=cfg.otp_max_len)
        .into_par_iter()
        .map(|len| {
            Ok(ReportRow::new(
                Scenario::Otp.name(),
                format!("len={len}"),
                otp_advantage(len)?,
                0.0,
                0.0,
            ))
        })
        .collect()
}

fn qkd(
    cfg: &RunConfig,
    detail: &mut Vec<(f64, QkdSecurityReport)>,
) -> Result<Vec<ReportRow>, HarnessError> {
    let s = Scenario::Qkd;
    let tol = cfg.tolerance;
    let fam = family(cfg, "standard:17")?;
    let q_tols = cfg.q_tol.map_or(vec![0.0, 0.25], |q| vec![q]);
    let mut rows = Vec::new();
    for q in q_tols {
        let p = params(cfg, 4, 2, q, 1, 1)?;
        let report = qkd_security_eval(&p, &fam)?;
        let pre = format!("q_tol={q}");
        for c in &report.cases {
            rows.push(bound_row(
                s,
                format!("{pre}/{}/sandwich", c.attack),
                &c.sandwich,
                tol,
            ));
            rows.push(bound_row(
                s,
                format!("{pre}/{}/cor_converse", c.attack),
                &c.cor_converse,
                tol,
            ));
            rows.push(bound_row(
                s,
                format!("{pre}/{}/sec_converse", c.attack),
                &c.sec_converse,
                tol,
            ));
            rows.push(ReportRow::new(
                s.name(),
                format!("{pre}/{}/conditioned", c.attack),
                c.conditioned_defect,
                0.0,
                tol,
            ));
        }
        rows.push(bound_row(
            s,
            format!("{pre}/max_advantage_le_cor_plus_sec"),
            &report.thm1,
            tol,
        ));
        detail.push((q, report));
    }
    let p = params(cfg, 4, 2, 0.0, 1, 1)?;
    let honest = crate::protocols::qkd::qkd_case(&p, &AttackStrategy::identity())?;
    let exact = tolerance::CLASSICAL_EQ;
    rows.push(ReportRow::new(
        s.name(),
        "noiseless/p_abort",
        honest.p_abort,
        0.0,
        exact,
    ));
    rows.push(ReportRow::new(
        s.name(),
        "noiseless/eps_cor",
        honest.eps_cor,
        0.0,
        exact,
    ));
    rows.push(ReportRow::new(
        s.name(),
        "noiseless/eps_sec",
        honest.eps_sec,
        0.0,
        exact,
    ));
    Ok(rows)
}

fn robustness(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let s = Scenario::Robustness;
    let p = params(cfg, 4, 2, cfg.q_tol.unwrap_or(0.25), 1, 1)?;
    let reports = cfg
        .noise
        .par_iter()
        .map(|&q| qkd_robustness_eval(&p, q))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for r in reports {
        let pre = format!("q={}", r.q);
        rows.push(bound_row(
            s,
            format!("{pre}/distance_le_advantage"),
            &r.report,
            cfg.tolerance,
        ));
        rows.push(ReportRow::new(
            s.name(),
            format!("{pre}/abort_match"),
            (r.delta - r.ideal_abort).abs(),
            0.0,
            cfg.tolerance,
        ));
        if r.q == 0.0 {
            rows.push(ReportRow::new(
                s.name(),
                format!("{pre}/distance_zero"),
                r.distance,
                0.0,
                cfg.tolerance,
            ));
        }
    }
    Ok(rows)
}

fn auth(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let s = Scenario::Auth;
    let exact = tolerance::CLASSICAL_EQ;
    let per_b = cfg
        .hash_bits
        .par_iter()
        .map(|&b| -> Result<Vec<ReportRow>, HarnessError> {
            let fam = HashFamily::affine(b)?;
            let eps = fam.epsilon();
            let pre = format!("b={b}");
            let asu2 = verify_asu2(&fam)?;
            let (real, ideal) = build_auth_systems(fam)?;
            let single = (0..fam.message_space())
                .into_par_iter()
                .map(|x| {
                    Ok(advantage_over_family(&real, &ideal, &substitution_family(&fam, x)?)?.value)
                })
                .collect::<Result<Vec<f64>, HarnessError>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let (preal, pideal) = parallel_auth_systems(fam, cfg.copies)?;
            let par = advantage_over_family(
                &preal,
                &pideal,
                &parallel_substitution_family(&fam, 1, cfg.copies)?,
            )?;
            Ok(vec![
                ReportRow::new(
                    s.name(),
                    format!("{pre}/asu2_joint"),
                    asu2.max_joint,
                    asu2.joint_bound,
                    exact,
                ),
                ReportRow::new(
                    s.name(),
                    format!("{pre}/asu2_uniform"),
                    asu2.uniformity_defect,
                    0.0,
                    exact,
                ),
                ReportRow::new(s.name(), format!("{pre}/substitution"), single, eps, exact),
                ReportRow::new(
                    s.name(),
                    format!("{pre}/parallel{}", cfg.copies),
                    par.value,
                    cfg.copies as f64 * eps,
                    cfg.tolerance,
                ),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_b.into_iter().flatten().collect())
}

fn leaked_key(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let p = params(cfg, 4, 1, cfg.q_tol.unwrap_or(0.0), 1, 2)?;
    let fam = family(cfg, "intercept-resend-grid:5")?;
    let splits: Vec<usize> = cfg.split.map_or((0..p.out_len).collect(), |s| vec![s]);
    splits
        .par_iter()
        .map(|&split| {
            let r = leaked_key_scenario(&p, split, &fam)?;
            Ok(bound_row(
                Scenario::LeakedKey,
                format!("split={split}/leaked_minus_plain"),
                &r.report,
                cfg.tolerance,
            ))
        })
        .collect()
}

fn qkd_otp(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let s = Scenario::QkdOtp;
    let p = params(cfg, 4, 1, cfg.q_tol.unwrap_or(0.0), 1, 2)?;
    let msg = match &cfg.msg {
        Some(m) => Bits::parse(m)?,
        None => Bits::new(0b10 & ((1 << p.out_len) - 1), p.out_len)?,
    };
    let r = qkd_otp_scenario(&p, msg, &family(cfg, "intercept-resend-grid:3")?)?;
    let tol = cfg.tolerance;
    Ok(vec![
        bound_row(s, "composed_le_qkd", &r.report, tol),
        bound_row(s, "composed_le_hybrid_steps", &r.triangle, tol),
        ReportRow::new(s.name(), "hybrid_to_ideal", r.hybrid_to_ideal, 0.0, tol),
        ReportRow::new(
            s.name(),
            "honest_delivery_failure",
            1.0 - r.delivery,
            0.0,
            tol,
        ),
    ])
}

fn parallel_qkd(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let s = Scenario::ParallelQkd;
    let p = params(cfg, 3, 1, cfg.q_tol.unwrap_or(0.0), 1, 1)?;
    let single = family(
        cfg,
        "intercept-resend:0.5,intercept-resend:1,noise:0.5,noise:1",
    )?;
    let crossing = parse_crossing(cfg.crossing.as_deref().unwrap_or("swap-all"), p.n)?;
    let r = parallel_qkd_scenario(&p, &single, &crossing)?;
    let mut rows = vec![bound_row(
        s,
        "parallel_le_twice_single",
        &r.report,
        cfg.tolerance,
    )];
    for c in &crossing {
        let v = r
            .parallel
            .per_attack
            .iter()
            .find(|(id, _)| *id == c.id)
            .map_or(0.0, |(_, v)| *v);
        rows.push(ReportRow::new(
            s.name(),
            format!("{}_le_twice_single", c.id),
            v,
            2.0 * r.eps_single,
            cfg.tolerance,
        ));
    }
    Ok(rows)
}

fn expansion(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let s = Scenario::KeyExpansion;
    let p = params(cfg, 4, 1, cfg.q_tol.unwrap_or(0.0), 1, 2)?;
    let auth = HashFamily::affine(1)?;
    let quantum = family(cfg, "noise:0.2,noise:0.5")?;
    let reports = cfg
        .rounds
        .par_iter()
        .map(|&r| key_expansion(r, &auth, &p, &quantum))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for r in reports {
        let pre = format!("rounds={}", r.rounds);
        rows.push(bound_row(
            s,
            format!("{pre}/ledger_exact"),
            &r.ledger_exact,
            tolerance::CLASSICAL_EQ,
        ));
        if let Some(b) = &r.report {
            rows.push(bound_row(
                s,
                format!("{pre}/measured_le_ledger"),
                b,
                cfg.tolerance,
            ));
        }
    }
    Ok(rows)
}

/// Closed-form I(K₂; Y) for the fixed computational-basis measurement:
/// Y = K₂ when K₁ = 0, Y uniform when K₁ = 1.
pub fn locking_oracle(m: usize) -> f64 {
    let d = (1u64 << m) as f64;
    let diag = 1.0 / (2.0 * d) + 1.0 / (2.0 * d * d);
    let off = 1.0 / (2.0 * d * d);
    let h_joint = -d * diag * diag.log2() - (d * d - d) * off * off.log2();
    2.0 * m as f64 - h_joint
}

/// Margin used to express the strict inequality I(K₂; Y) < m as a row.
pub const STRICT_MARGIN: f64 = 1e-6;

fn lockdemo(cfg: &RunConfig) -> Result<Vec<ReportRow>, HarnessError> {
    let s = Scenario::LockDemo;
    let mut rows = Vec::new();
    for &m in &cfg.m {
        let r = locking_demo(m)?;
        let mb = m as f64;
        let pre = format!("m={m}");
        rows.push(ReportRow::new(
            s.name(),
            format!("{pre}/post_reveal_defect"),
            (r.post_reveal - mb).abs(),
            0.0,
            cfg.tolerance,
        ));
        rows.push(ReportRow::new(
            s.name(),
            format!("{pre}/pre_reveal_oracle_defect"),
            (r.pre_reveal - locking_oracle(m)).abs(),
            0.0,
            cfg.tolerance,
        ));
        rows.push(ReportRow::new(
            s.name(),
            format!("{pre}/pre_reveal_below_m"),
            r.pre_reveal,
            mb - STRICT_MARGIN,
            0.0,
        ));
        rows.push(ReportRow::new(
            s.name(),
            format!("{pre}/full_key_defect"),
            (r.pre_reveal_full - mb / 2.0).abs(),
            0.0,
            cfg.tolerance,
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::csv_string;

    #[test]
    fn attack_specs() {
        let f = parse_attack_family("identity, intercept-resend:0.5, noise:0.1").unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(parse_attack_family("standard:3").unwrap().len(), 7);
        assert!(parse_attack_family("intercept-resend:2").is_err());
        assert!(parse_attack_family("teleport").is_err());
        assert_eq!(
            parse_crossing("swap-all", 3).unwrap()[0].id,
            "swap:0-0,1-1,2-2"
        );
        assert_eq!(parse_crossing("0-1+2-2", 3).unwrap()[0].id, "swap:0-1,2-2");
        assert!(parse_crossing("0-3", 3).is_err());
        assert!(parse_crossing("none", 3).unwrap().is_empty());
    }

    #[test]
    fn parallel_identity_rows_are_zero() {
        let mut cfg = RunConfig::new(Scenario::ParallelQkd, 1);
        cfg.attack = Some("identity".into());
        cfg.crossing = Some("none".into());
        let rows = run_scenario(&cfg).unwrap();
        assert!(!rows.is_empty());
        for r in rows {
            assert!(
                r.holds && r.measured.abs() < 1e-12 && r.bound.abs() < 1e-12,
                "{r:?}"
            );
        }
    }

    #[test]
    fn metrics_suite_has_one_row_per_property_and_is_deterministic() {
        let mut cfg = RunConfig::new(Scenario::MetricsSuite, 9);
        cfg.trials = 5;
        let a = run_scenario(&cfg).unwrap();
        assert_eq!(a.len(), 17);
        assert!(a.iter().all(|r| r.holds));
        assert_eq!(
            csv_string(&a).unwrap(),
            csv_string(&run_scenario(&cfg).unwrap()).unwrap()
        );
    }

    #[test]
    fn lockdemo_rows() {
        let cfg = RunConfig::new(Scenario::LockDemo, 0);
        let rows = run_scenario(&cfg).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.holds), "{rows:?}");
    }

    #[test]
    fn otp_rows_are_zero() {
        let mut cfg = RunConfig::new(Scenario::Otp, 0);
        cfg.otp_max_len = 3;
        let rows = run_scenario(&cfg).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.case.as_str()).collect::<Vec<_>>(),
            ["len=1", "len=2", "len=3"]
        );
        assert!(rows.iter().all(|r| r.holds && r.measured == 0.0));
    }
}
