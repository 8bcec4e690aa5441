use std::sync::Arc;

use rayon::prelude::*;

use crate::acframework::{
    advantage_over_family, AttackFamily, AttackStrategy, Converter, DiscardFilter, IdealFilter,
    Interface, SystemGraph,
};
use crate::metrics::{cq_trace_distance, uniform_key_distance, BoundReport};
use crate::qstate::{CQState, BOT};

use super::super::Result;
use super::attacks::honest_noise;
use super::params::QkdParams;
use super::systems::{build_qkd_systems, ideal_from_real, QkdReal, QkdSimulator};

/// Exact final state of one protocol run and its failure measures.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub attack: String,
    pub state: CQState,
    pub p_abort: f64,
    /// Pr[K_A ≠ K_B].
    pub eps_cor: f64,
    /// (1 − p⊥) D(ρ⊤_AE, τ_A ⊗ ρ⊤_E).
    pub eps_sec: f64,
}

fn accepted(state: &CQState) -> Result<CQState> {
    let i = state.register_index("E.abort")?;
    Ok(state.filter(|a| a[i] == 0))
}

/// Runs the protocol against `attack`, enumerating every branch exactly.
pub fn qkd_run(p: &QkdParams, attack: &AttackStrategy) -> Result<ProtocolRun> {
    let state = SystemGraph::leaf(QkdReal { params: p.clone() }).evaluate_cq(attack)?;
    let (ab, ka, kb) = (
        state.register_index("E.abort")?,
        state.register_index("A.key")?,
        state.register_index("B.key")?,
    );
    let p_abort = state.probability(|a| a[ab] == 1);
    let eps_cor = state.probability(|a| a[ka] != a[kb]);
    let eps_sec = if p_abort >= 1.0 - 1e-15 {
        0.0
    } else {
        let acc = accepted(&state)?.trace_out(&["B.key"])?.normalized()?;
        (1.0 - p_abort) * uniform_key_distance(&acc, &["A.key"])?
    };
    Ok(ProtocolRun {
        attack: attack.id.clone(),
        state,
        p_abort,
        eps_cor,
        eps_sec,
    })
}

/// Per-attack outcome of the correctness/secrecy split.
#[derive(Debug, Clone)]
pub struct QkdCase {
    pub attack: String,
    pub p_abort: f64,
    pub eps_cor: f64,
    pub eps_sec: f64,
    /// D(ρ_ABE, ρ̃_ABE) against the key resource with simulator.
    pub advantage: f64,
    /// |D(ρ_ABE, ρ̃_ABE) − (1 − p⊥) D(ρ⊤_ABE, τ_AB ⊗ ρ⊤_E)|.
    pub conditioned_defect: f64,
    pub sandwich: BoundReport,
    pub cor_converse: BoundReport,
    pub sec_converse: BoundReport,
}

impl QkdCase {
    pub fn holds(&self) -> bool {
        self.sandwich.holds && self.cor_converse.holds && self.sec_converse.holds
    }
}

#[derive(Debug, Clone)]
pub struct QkdSecurityReport {
    pub family: String,
    pub cases: Vec<QkdCase>,
    /// max ε_cor against max advantage.
    pub eps_cor: BoundReport,
    /// max ε_sec against twice the max advantage.
    pub eps_sec: BoundReport,
    /// max advantage against max ε_cor + max ε_sec.
    pub thm1: BoundReport,
}

impl QkdSecurityReport {
    pub fn holds(&self) -> bool {
        self.cases.iter().all(QkdCase::holds)
            && self.eps_cor.holds
            && self.eps_sec.holds
            && self.thm1.holds
    }

    pub fn advantage(&self) -> f64 {
        self.thm1.left
    }
}

/// Evaluates one attack: the run, the simulated ideal state and both bounds.
pub fn qkd_case(p: &QkdParams, attack: &AttackStrategy) -> Result<QkdCase> {
    let run = qkd_run(p, attack)?;
    let ideal = ideal_from_real(&run.state, "", p.out_len)?;
    let advantage = cq_trace_distance(&run.state, &ideal)?;
    let conditioned = if run.p_abort >= 1.0 - 1e-15 {
        0.0
    } else {
        let acc = accepted(&run.state)?.normalized()?;
        let acc_ideal = ideal_from_real(&acc, "", p.out_len)?;
        (1.0 - run.p_abort) * cq_trace_distance(&acc, &acc_ideal)?
    };
    let bound = run.eps_cor + run.eps_sec;
    Ok(QkdCase {
        attack: run.attack,
        p_abort: run.p_abort,
        eps_cor: run.eps_cor,
        eps_sec: run.eps_sec,
        advantage,
        conditioned_defect: (advantage - conditioned).abs(),
        sandwich: BoundReport::new("advantage_le_cor_plus_sec", advantage, bound),
        cor_converse: BoundReport::new("cor_le_advantage", run.eps_cor, advantage),
        sec_converse: BoundReport::new("sec_le_twice_advantage", run.eps_sec, 2.0 * advantage),
    })
}

/// Correctness, secrecy and their sum over every member of `fam`.
pub fn qkd_security_eval(p: &QkdParams, fam: &AttackFamily) -> Result<QkdSecurityReport> {
    let cases = fam
        .expand()
        .par_iter()
        .map(|a| qkd_case(p, a))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&QkdCase) -> f64| cases.iter().map(f).fold(0.0, f64::max);
    let (cor, sec, adv) = (max(|c| c.eps_cor), max(|c| c.eps_sec), max(|c| c.advantage));
    Ok(QkdSecurityReport {
        family: fam.name.clone(),
        eps_cor: BoundReport::new("eps_cor", cor, adv),
        eps_sec: BoundReport::new("eps_sec", sec, 2.0 * adv),
        thm1: BoundReport::new("thm1", adv, cor + sec),
        cases,
    })
}

/// Honest-noise robustness with an ideal filter of matched abort probability.
#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub q: f64,
    /// Abort probability of the real system under ♯^q.
    pub delta: f64,
    /// Abort probability of the filtered ideal system.
    pub ideal_abort: f64,
    /// Distance between the filtered real and filtered ideal systems.
    pub distance: f64,
    /// Condition (ii) advantage against the honest-noise strategy.
    pub advantage: f64,
    pub report: BoundReport,
}

pub fn qkd_robustness_eval(p: &QkdParams, q: f64) -> Result<RobustnessReport> {
    if !(0.0..=1.0).contains(&q) {
        return Err(super::super::ProtocolError::InvalidParams(format!(
            "q = {q} outside [0, 1]"
        )));
    }
    let (real, ideal_sim) = build_qkd_systems(p)?;
    let noise = honest_noise(q);
    let filter: Arc<dyn Converter> = Arc::new(DiscardFilter::new("honest_noise", noise.clone()));
    let real_f = real
        .attach_converter(filter, Interface::E)?
        .evaluate_cq(&AttackStrategy::identity())?;
    let ka = real_f.register_index("A.key")?;
    let delta = real_f.probability(|a| a[ka] == BOT);

    let ideal = SystemGraph::leaf(super::super::KeyResource::new(p.out_len));
    let ideal_f = ideal
        .attach_converter(Arc::new(IdealFilter::new(delta)), Interface::E)?
        .evaluate_cq(&AttackStrategy::identity())?;
    let ideal_abort = ideal_f.probability(|a| a[ka] == BOT);
    let distance = cq_trace_distance(&real_f, &ideal_f)?;

    let fam = AttackFamily::new("honest").with(noise);
    let advantage = advantage_over_family(&real, &ideal_sim, &fam)?.value;
    Ok(RobustnessReport {
        q,
        delta,
        ideal_abort,
        distance,
        advantage,
        report: BoundReport::new("filtered_distance_le_advantage", distance, advantage),
    })
}

/// The QKD simulator as a shareable converter.
pub fn qkd_simulator(p: &QkdParams) -> Arc<dyn Converter> {
    Arc::new(QkdSimulator { params: p.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::qkd::attacks::{depolarize, intercept_resend, intercept_resend_family};

    fn params(q_tol: f64) -> QkdParams {
        QkdParams::with_default_seed(4, 2, q_tol, 1, 1).unwrap()
    }

    fn binomial_tail(t: usize, p: f64, more_than: f64) -> f64 {
        (0..=t)
            .filter(|&k| k as f64 > more_than + 1e-12)
            .map(|k| {
                let c = (0..k).fold(1.0, |acc, i| acc * (t - i) as f64 / (i + 1) as f64);
                c * p.powi(k as i32) * (1.0 - p).powi((t - k) as i32)
            })
            .sum()
    }

    #[test]
    fn noiseless_run_is_perfect() {
        for q_tol in [0.0, 0.25] {
            let run = qkd_run(&params(q_tol), &AttackStrategy::identity()).unwrap();
            assert!(run.p_abort.abs() < 1e-12);
            assert!(run.eps_cor.abs() < 1e-12);
            assert!(run.eps_sec.abs() < 1e-12);
            assert!((run.state.trace_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_intercept_resend_gives_quarter_error_rate() {
        let p = QkdParams::with_default_seed(4, 1, 1.0, 1, 1).unwrap();
        let run = qkd_run(&p, &intercept_resend(1.0)).unwrap();
        let (xs, ys) = (
            run.state.register_index("E.xs").unwrap(),
            run.state.register_index("E.ys").unwrap(),
        );
        let err = run.state.probability(|a| a[xs] != a[ys]);
        assert!((err - 0.25).abs() < 1e-12, "{err}");
    }

    #[test]
    fn abort_probability_matches_binomial() {
        // Full depolarisation flips each sampled bit with probability 1/2.
        for (q_tol, t) in [(0.0, 2), (0.25, 2), (0.5, 3)] {
            let p = QkdParams::with_default_seed(5, t, q_tol, 1, 1).unwrap();
            let run = qkd_run(&p, &depolarize(1.0)).unwrap();
            let oracle = binomial_tail(t, 0.5, q_tol * t as f64);
            assert!(
                (run.p_abort - oracle).abs() < 1e-12,
                "{} vs {oracle}",
                run.p_abort
            );
        }
    }

    #[test]
    fn aborts_are_joint_and_carry_bottom() {
        let run = qkd_run(&params(0.0), &depolarize(0.3)).unwrap();
        let s = &run.state;
        let (ka, kb, ab, syn) = (
            s.register_index("A.key").unwrap(),
            s.register_index("B.key").unwrap(),
            s.register_index("E.abort").unwrap(),
            s.register_index("E.syn").unwrap(),
        );
        assert!(run.p_abort > 0.0);
        for b in s.branches() {
            let a = &b.assignment;
            assert_eq!(a[ka] == BOT, a[kb] == BOT);
            assert_eq!(a[ka] == BOT, a[ab] == 1);
            assert_eq!(a[syn] == BOT, a[ab] == 1);
        }
    }

    #[test]
    fn simulated_ideal_matches_graph_route() {
        let p = params(0.25);
        let (real, ideal) = build_qkd_systems(&p).unwrap();
        for a in [intercept_resend(0.7), depolarize(0.4)] {
            let case = qkd_case(&p, &a).unwrap();
            let d = real
                .evaluate(&a)
                .unwrap()
                .distance(&ideal.evaluate(&a).unwrap())
                .unwrap();
            assert!((case.advantage - d).abs() < 1e-12);
            assert!(case.conditioned_defect < 1e-9);
        }
    }

    #[test]
    fn sandwich_holds_with_positive_values() {
        let report = qkd_security_eval(&params(0.25), &intercept_resend_family(5)).unwrap();
        assert!(report.holds());
        assert!(report.advantage() > 0.0 && report.eps_cor.left > 0.0 && report.eps_sec.left > 0.0);
        let id = qkd_security_eval(&params(0.25), &AttackFamily::new("id")).unwrap();
        assert!(id.advantage() < 1e-12 && id.eps_cor.left < 1e-12 && id.eps_sec.left < 1e-12);
    }

    #[test]
    fn robustness_matches_abort_probability() {
        let p = params(0.25);
        let r0 = qkd_robustness_eval(&p, 0.0).unwrap();
        assert!(r0.delta.abs() < 1e-12 && r0.distance.abs() < 1e-12);
        let r = qkd_robustness_eval(&p, 1.0).unwrap();
        assert!((r.delta - binomial_tail(2, 0.5, 0.5)).abs() < 1e-12);
        assert!((r.ideal_abort - r.delta).abs() < 1e-12);
        assert!(r.report.holds, "{r:?}");
    }
}
