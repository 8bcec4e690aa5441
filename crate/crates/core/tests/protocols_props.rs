use acqkd_core::acframework::AttackStrategy;
use acqkd_core::protocols::qkd::{depolarize, honest_noise, intercept_resend, qkd_case};
use acqkd_core::protocols::{
    auth_tag, auth_verify, otp_decrypt, otp_encrypt, verify_asu2, Bits, HashFamily, QkdParams,
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

/// n ≤ 3 with t < n and h_rows + out_len ≤ n − t.
fn small_params() -> impl Strategy<Value = QkdParams> {
    (2usize..=3, 0.0..=0.5f64, any::<u64>())
        .prop_flat_map(|(n, q, seed)| (Just(n), 0..n, Just(q), Just(seed)))
        .prop_flat_map(|(n, t, q, seed)| {
            let m = n - t;
            (Just((n, t, q, seed)), 0..m)
                .prop_flat_map(move |(base, h)| (Just(base), Just(h), 1..=m - h))
        })
        .prop_map(|((n, t, q, seed), h, out)| QkdParams::new(n, t, q, h, out, seed).unwrap())
}

fn attack() -> impl Strategy<Value = AttackStrategy> {
    prop_oneof![
        Just(AttackStrategy::identity()),
        (0.0..=1.0f64).prop_map(intercept_resend),
        (0.0..=1.0f64).prop_map(honest_noise),
        (0.0..=1.0f64).prop_map(depolarize),
    ]
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn noiseless_runs_are_complete_and_secret(p in small_params()) {
        let c = qkd_case(&p, &AttackStrategy::identity()).unwrap();
        prop_assert!(c.p_abort.abs() < tolerance::CLASSICAL_EQ);
        prop_assert!(c.eps_cor.abs() < tolerance::CLASSICAL_EQ);
        prop_assert!(c.eps_sec.abs() < tolerance::CLASSICAL_EQ);
        prop_assert!(c.advantage.abs() < tolerance::CLASSICAL_EQ);
    }

    #[test]
    fn advantage_is_sandwiched(p in small_params(), a in attack()) {
        let c = qkd_case(&p, &a).unwrap();
        prop_assert!((0.0..=1.0 + tolerance::BOUND).contains(&c.p_abort));
        prop_assert!(c.advantage <= c.eps_cor + c.eps_sec + tolerance::BOUND, "{c:?}");
        prop_assert!(c.eps_cor <= c.advantage + tolerance::BOUND);
        prop_assert!(c.eps_sec <= 2.0 * c.advantage + tolerance::BOUND);
        prop_assert!(c.conditioned_defect < tolerance::BOUND);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn one_time_pad_roundtrip(len in 1usize..=16, x in any::<u64>(), k in any::<u64>()) {
        let mask = (1u64 << len) - 1;
        let (x, k) = (Bits::new(x & mask, len).unwrap(), Bits::new(k & mask, len).unwrap());
        let y = otp_encrypt(x, k).unwrap();
        prop_assert_eq!(otp_decrypt(y, k).unwrap(), x);
        prop_assert_eq!(y.word, x.word ^ k.word);
    }

    #[test]
    fn tags_verify_and_tampered_tags_fail(b in 1u32..=4, blocks in 1usize..=3, key in any::<u64>(), x in any::<u64>()) {
        let fam = HashFamily::new(b, blocks).unwrap();
        let key = key % fam.key_space();
        let x = Bits::new(x % fam.message_space(), fam.message_bits()).unwrap();
        let (sent, y) = auth_tag(&fam, key, x).unwrap();
        prop_assert_eq!(auth_verify(&fam, key, sent, y).unwrap(), Some(x));
        let bad = (y + 1) % fam.tag_space();
        prop_assert_eq!(auth_verify(&fam, key, sent, bad).unwrap(), None);
    }
}

#[test]
fn hash_families_are_strongly_universal() {
    for b in 1..=4 {
        for blocks in 1..=2 {
            let fam = HashFamily::new(b, blocks).unwrap();
            let r = verify_asu2(&fam).unwrap();
            assert!(r.holds, "b={b} blocks={blocks}: {r:?}");
            assert!((fam.epsilon() - blocks as f64 / (1u64 << b) as f64).abs() < 1e-15);
        }
    }
}

#[test]
fn oversized_messages_are_rejected() {
    let fam = HashFamily::affine(3).unwrap();
    assert!(auth_tag(&fam, 0, Bits::new(0, 6).unwrap()).is_err());
    assert!(otp_encrypt(Bits::new(0, 3).unwrap(), Bits::new(0, 4).unwrap()).is_err());
}
