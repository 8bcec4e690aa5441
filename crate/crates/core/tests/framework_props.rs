use std::sync::Arc;

use acqkd_core::acframework::{
    advantage_over_family, AttackFamily, AttackStrategy, DiscardFilter, EpsilonLedger,
    EpsilonSource, Interface, SystemGraph,
};
use acqkd_core::protocols::qkd::{honest_noise, intercept_resend, qkd_simulator};
use acqkd_core::protocols::{
    attach_otp, build_qkd_systems, otp_advantage, Bits, LeakConverter, OtpSimulator, QkdParams,
    SecureChannel,
};
use acqkd_core::tolerance;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

const KEY: usize = 1;

fn params(q_tol: f64) -> QkdParams {
    QkdParams::with_default_seed(3, 1, q_tol, 1, KEY).unwrap()
}

// Stinespring depolarisation is exercised by the acceptance suite; the
// env-free channel keeps these sampled checks fast.
fn family(p: f64, q: f64) -> AttackFamily {
    AttackFamily::new("sampled")
        .with(intercept_resend(p))
        .with(honest_noise(q))
}

fn adv(a: &SystemGraph, b: &SystemGraph, f: &AttackFamily) -> f64 {
    advantage_over_family(a, b, f).unwrap().value
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn advantage_is_a_pseudometric(p in 0.0..=1.0f64, q in 0.0..=1.0f64, tol_b in 0.0..=1.0f64) {
        let f = family(p, q);
        let (a, ideal) = build_qkd_systems(&params(0.0)).unwrap();
        let (b, _) = build_qkd_systems(&params(tol_b)).unwrap();
        prop_assert!(adv(&a, &a, &f).abs() < 1e-12);
        let ab = adv(&a, &b, &f);
        prop_assert!((ab - adv(&b, &a, &f)).abs() < 1e-12);
        prop_assert!(adv(&a, &ideal, &f) <= ab + adv(&b, &ideal, &f) + tolerance::BOUND);
    }

    #[test]
    fn converters_do_not_increase_advantage(p in 0.0..=1.0f64, q in 0.0..=1.0f64, split in 0usize..=KEY) {
        let f = family(p, q);
        let pr = params(0.0);
        let (real, ideal) = build_qkd_systems(&pr).unwrap();
        let before = adv(&real, &ideal, &f);
        let leak = Arc::new(LeakConverter { split, key_len: KEY });
        let after = adv(
            &real.attach_converter(leak.clone(), Interface::A).unwrap(),
            &ideal.attach_converter(leak, Interface::A).unwrap(),
            &f,
        );
        prop_assert!(after <= before + tolerance::BOUND);
        let f_msg = f.clone().with_input("A.msg", 1);
        let padded = adv(&attach_otp(&real, KEY).unwrap(), &attach_otp(&ideal, KEY).unwrap(), &f_msg);
        prop_assert!(padded <= before + tolerance::BOUND);
    }

    #[test]
    fn serial_composition_adds_component_advantages(p in 0.0..=1.0f64, msg in 0u64..2) {
        let pr = params(0.0);
        let f = family(p, 1.0 - p).with_input("A.msg", msg);
        let (qkd_real, qkd_ideal) = build_qkd_systems(&pr).unwrap();
        let real = attach_otp(&qkd_real, KEY).unwrap();
        let ideal = SystemGraph::leaf(SecureChannel::new(KEY))
            .attach_converter(Arc::new(OtpSimulator { len: KEY }), Interface::E)
            .unwrap()
            .attach_converter(qkd_simulator(&pr), Interface::E)
            .unwrap();
        // the pad sees only classical strategies, covered exhaustively
        let composite = adv(&real, &ideal, &f);
        let parts = adv(&qkd_real, &qkd_ideal, &f) + otp_advantage(KEY).unwrap();
        prop_assert!(composite <= parts + tolerance::BOUND);
    }

    #[test]
    fn filtered_systems_ignore_the_attack(p in 0.0..=1.0f64, q in 0.0..=1.0f64, noise in 0.0..=0.5f64) {
        let (real, _) = build_qkd_systems(&params(0.25)).unwrap();
        let filtered = real
            .attach_converter(Arc::new(DiscardFilter::new("honest", honest_noise(noise))), Interface::E)
            .unwrap();
        let base = filtered.evaluate_cq(&AttackStrategy::identity()).unwrap();
        for a in family(p, q).expand() {
            prop_assert_eq!(&filtered.evaluate_cq(&a).unwrap(), &base);
        }
    }

    #[test]
    fn ledger_totals_are_sums(eps in proptest::collection::vec(0.0..0.5f64, 0..6)) {
        let ledger = eps
            .iter()
            .enumerate()
            .fold(EpsilonLedger::new(), |l, (i, &e)| l.with(format!("c{i}"), e, EpsilonSource::Measured));
        let sum: f64 = eps.iter().sum();
        prop_assert!((ledger.total() - sum).abs() < 1e-12);
        let doubled = ledger.serial_compose(&ledger);
        prop_assert!((doubled.total() - 2.0 * sum).abs() < 1e-12);
    }
}

#[test]
fn families_always_contain_identity() {
    for f in [
        AttackFamily::new("x"),
        family(0.3, 0.4),
        AttackFamily::product("p", &[&family(0.1, 0.2), &family(0.5, 0.6)]),
    ] {
        assert!(f
            .expand()
            .iter()
            .any(|a| a.id == "identity" || a.parts.iter().all(|p| p.id == "identity")));
    }
    let bits = Bits::parse("01").unwrap();
    assert_eq!(bits.len, 2);
}
