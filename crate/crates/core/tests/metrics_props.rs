use acqkd_core::linalg::{CMatrix, C64};
use acqkd_core::metrics::{
    binary_entropy, cq_trace_distance, guessing_probability, helstrom_povm, maximal_coupling,
    povm_guess_probability, total_variation, total_variation_min_form, trace_distance,
    von_neumann_entropy,
};
use acqkd_core::qstate::{
    random_channel, random_cq_state, random_density_with, random_distribution, random_povm,
    seeded_rng, ClassicalDistribution, DensityOperator,
};
use acqkd_core::tolerance;
use proptest::prelude::*;
use rand::Rng;

fn bloch(r: [f64; 3]) -> DensityOperator {
    let m = CMatrix::from_vec(
        2,
        2,
        vec![
            C64::new((1.0 + r[2]) / 2.0, 0.0),
            C64::new(r[0] / 2.0, -r[1] / 2.0),
            C64::new(r[0] / 2.0, r[1] / 2.0),
            C64::new((1.0 - r[2]) / 2.0, 0.0),
        ],
    );
    DensityOperator::new(m, &[2]).unwrap()
}

fn ball() -> impl Strategy<Value = [f64; 3]> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| {
        let n = (x * x + y * y + z * z).sqrt();
        if n > 1.0 {
            [x / n, y / n, z / n]
        } else {
            [x, y, z]
        }
    })
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn qubit_distance_is_half_bloch_distance(r in ball(), s in ball()) {
        let d = trace_distance(&bloch(r), &bloch(s)).unwrap();
        let oracle = norm([r[0] - s[0], r[1] - s[1], r[2] - s[2]]) / 2.0;
        prop_assert!((d - oracle).abs() < 1e-10, "{d} vs {oracle}");
    }

    #[test]
    fn qubit_entropy_matches_binary_entropy(r in ball()) {
        let s = von_neumann_entropy(&bloch(r)).unwrap();
        prop_assert!((s - binary_entropy((1.0 + norm(r)) / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn pure_state_distance_from_overlap(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = seeded_rng(seed);
        let vec = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<C64> {
            let v: Vec<C64> = (0..d).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect()
        };
        let (a, b) = (vec(&mut rng), vec(&mut rng));
        let overlap: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        let oracle = (1.0 - overlap.norm_sqr()).max(0.0).sqrt();
        let got = trace_distance(&DensityOperator::pure(&a, &[d]).unwrap(), &DensityOperator::pure(&b, &[d]).unwrap()).unwrap();
        prop_assert!((got - oracle).abs() < 1e-9);
    }

    #[test]
    fn metric_axioms(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = seeded_rng(seed);
        let rank = |rng: &mut rand_chacha::ChaCha8Rng| rng.random_range(1..=d);
        let (ra, rb, rc) = (rank(&mut rng), rank(&mut rng), rank(&mut rng));
        let a = random_density_with(&mut rng, d, ra);
        let b = random_density_with(&mut rng, d, rb);
        let c = random_density_with(&mut rng, d, rc);
        prop_assert!(trace_distance(&a, &a).unwrap().abs() < 1e-12);
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(trace_distance(&a, &c).unwrap() <= ab + trace_distance(&b, &c).unwrap() + tolerance::BOUND);
    }

    #[test]
    fn data_processing_and_tensor_invariance(seed in any::<u64>(), d in 2usize..=6, out in 2usize..=6) {
        let mut rng = seeded_rng(seed);
        let a = random_density_with(&mut rng, d, d);
        let b = random_density_with(&mut rng, d, 1);
        let kraus = d.div_ceil(out) + rng.random_range(0..3);
        let ch = random_channel(&mut rng, d, out, kraus);
        let before = trace_distance(&a, &b).unwrap();
        let after = trace_distance(&a.apply_channel(&ch, 0).unwrap(), &b.apply_channel(&ch, 0).unwrap()).unwrap();
        prop_assert!(after <= before + tolerance::BOUND);
        let t = random_density_with(&mut rng, 2, 2);
        let tensored = trace_distance(&a.tensor(&t).unwrap(), &b.tensor(&t).unwrap()).unwrap();
        prop_assert!((tensored - before).abs() < 1e-9);
    }

    #[test]
    fn helstrom_is_optimal(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = seeded_rng(seed);
        let ra = rng.random_range(1..=d);
        let a = random_density_with(&mut rng, d, ra);
        let rb = rng.random_range(1..=d);
        let b = random_density_with(&mut rng, d, rb);
        let best = guessing_probability(&a, &b).unwrap();
        prop_assert!((best - 0.5 - 0.5 * trace_distance(&a, &b).unwrap()).abs() < 1e-9);
        let h = povm_guess_probability(&helstrom_povm(&a, &b).unwrap(), &a, &b).unwrap();
        prop_assert!((h - best).abs() < 1e-9);
        for _ in 0..10 {
            let p = random_povm(&mut rng, d, 2);
            prop_assert!(povm_guess_probability(&p, &a, &b).unwrap() <= best + 1e-9);
        }
    }

    #[test]
    fn maximal_coupling_properties(seed in any::<u64>(), n in 1usize..=32) {
        let mut rng = seeded_rng(seed);
        let p = random_distribution(&mut rng, n);
        let q = random_distribution(&mut rng, n);
        let tv = total_variation(&p, &q).unwrap();
        let c = maximal_coupling(&p, &q).unwrap();
        prop_assert!(c.marginal_defect(&p, &q) < 1e-12);
        prop_assert!(c.joint().iter().all(|&x| x >= 0.0));
        prop_assert!((c.prob_equal() - (1.0 - tv)).abs() < 1e-12);
        // independent oracle: 1 − TV = Σ min(p, q)
        let overlap: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| a.min(*b)).sum();
        prop_assert!((c.prob_equal() - overlap).abs() < 1e-12);
        prop_assert!((total_variation_min_form(&p, &q).unwrap() - tv).abs() < 1e-12);
        // product coupling is a valid alternative
        let indep: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| a * b).sum();
        prop_assert!(indep <= 1.0 - tv + 1e-12);
    }

    #[test]
    fn cq_block_distance_equals_flattened(seed in any::<u64>(), k in 1usize..=4, e in 1usize..=3) {
        let mut rng = seeded_rng(seed);
        let r = random_cq_state(&mut rng, k, e);
        let s = random_cq_state(&mut rng, k, e);
        let block = cq_trace_distance(&r, &s).unwrap();
        let flat = trace_distance(&r.flatten().unwrap(), &s.flatten().unwrap()).unwrap();
        prop_assert!((block - flat).abs() < 1e-9);
    }

    #[test]
    fn channels_preserve_trace_and_partial_trace_inverts_tensor(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = seeded_rng(seed);
        let ra = rng.random_range(1..=d);
        let a = random_density_with(&mut rng, d, ra);
        let out = rng.random_range(2..=8);
        let ch = random_channel(&mut rng, d, out, d.div_ceil(out) + 1);
        prop_assert!((a.apply_channel(&ch, 0).unwrap().trace() - 1.0).abs() < tolerance::COMPLETENESS);
        let t = random_density_with(&mut rng, 3, 2);
        let back = a.tensor(&t).unwrap().partial_trace(&[0]).unwrap();
        prop_assert!(back.matrix().max_abs_diff(a.matrix()) < 1e-12);
        // re-validation of a valid state is idempotent
        let once = DensityOperator::new(a.matrix().clone(), &[d]).unwrap();
        let twice = DensityOperator::new(once.matrix().clone(), &[d]).unwrap();
        prop_assert!(twice.validate().is_ok());
        prop_assert!(once.matrix().max_abs_diff(a.matrix()) < 1e-12);
        prop_assert!(twice.matrix().max_abs_diff(once.matrix()) < 1e-12);
    }
}

#[test]
fn distribution_rejects_negative_mass() {
    assert!(ClassicalDistribution::new(vec![0.5, -0.1, 0.6]).is_err());
}
