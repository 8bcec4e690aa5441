use std::time::{Duration, Instant};

use acqkd_core::acframework::{advantage_over_family, AttackStrategy};
use acqkd_core::harness::parse_attack_family;
use acqkd_core::metrics::{
    alt_secrecy_relation, entropy_bounds, helstrom_povm, maximal_coupling, pguess_exact,
    povm_guess_probability, total_variation, trace_distance, uniform_key_distance,
};
use acqkd_core::protocols::qkd::{
    intercept_resend_family, key_expansion, qkd_case, qkd_robustness_eval, qkd_security_eval,
    standard_family,
};
use acqkd_core::protocols::{
    build_auth_systems, leaked_key_scenario, locking_demo, otp_advantage, parallel_auth_systems,
    parallel_qkd_scenario, parallel_substitution_family, qkd_otp_scenario, substitution_family,
    swap_attack, verify_asu2, Bits, HashFamily, QkdParams,
};
use acqkd_core::qstate::{
    derive_seed, random_channel, random_cq_state, random_density_with, random_distribution,
    random_povm, seeded_rng, CQState, DensityOperator, Register,
};
use acqkd_core::tolerance;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_140_101;

fn rng(criterion: u64) -> ChaCha8Rng {
    seeded_rng(derive_seed(SEED, criterion))
}

fn report(n: u32, ok: bool, summary: String) -> bool {
    println!(
        "{} criterion {n}: {summary}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn within(start: Instant, secs: u64) -> bool {
    start.elapsed() < Duration::from_secs(secs)
}

fn random_pair(rng: &mut ChaCha8Rng) -> (DensityOperator, DensityOperator) {
    let d = rng.random_range(2..=8);
    let (ra, rb) = (rng.random_range(1..=d), rng.random_range(1..=d));
    let a = random_density_with(rng, d, ra);
    let b = random_density_with(rng, d, rb);
    (a, b)
}

fn c01_helstrom_equality() -> bool {
    let start = Instant::now();
    let mut rng = rng(1);
    let (mut eq_defect, mut excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..200 {
        let (a, b) = random_pair(&mut rng);
        let d = trace_distance(&a, &b).unwrap();
        let built = povm_guess_probability(&helstrom_povm(&a, &b).unwrap(), &a, &b).unwrap();
        eq_defect = eq_defect.max((built - 0.5 - 0.5 * d).abs());
        for _ in 0..200 {
            let outcomes = rng.random_range(2..=4);
            let p = random_povm(&mut rng, a.dim(), outcomes);
            excess = excess.max(povm_guess_probability(&p, &a, &b).unwrap() - built);
        }
    }
    let ok = eq_defect <= 1e-9 && excess <= 1e-9 && within(start, 30);
    report(
        1,
        ok,
        format!(
            "Helstrom defect {eq_defect:.2e}, best random POVM excess {excess:.2e}, {:?}",
            start.elapsed()
        ),
    )
}

fn c02_maximal_coupling() -> bool {
    let start = Instant::now();
    let mut rng = rng(2);
    let (mut marg, mut eq) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.random_range(1..=32);
        let (p, q) = (
            random_distribution(&mut rng, n),
            random_distribution(&mut rng, n),
        );
        let c = maximal_coupling(&p, &q).unwrap();
        // marginals recomputed from the joint table
        for z in 0..n {
            let row: f64 = (0..n).map(|w| c.prob(z, w)).sum();
            let col: f64 = (0..n).map(|w| c.prob(w, z)).sum();
            marg = marg
                .max((row - p.probs()[z]).abs())
                .max((col - q.probs()[z]).abs());
        }
        let tv = 0.5
            * p.probs()
                .iter()
                .zip(q.probs())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        eq = eq.max((c.prob_equal() - (1.0 - tv)).abs());
        eq = eq.max((total_variation(&p, &q).unwrap() - tv).abs());
    }
    let ok = marg <= 1e-12 && eq <= 1e-12 && within(start, 5);
    report(
        2,
        ok,
        format!(
            "marginal defect {marg:.2e}, Pr[Z=Z'] defect {eq:.2e}, {:?}",
            start.elapsed()
        ),
    )
}

fn c03_metric_and_data_processing() -> bool {
    let start = Instant::now();
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (a, b) = random_pair(&mut rng);
        let rc = rng.random_range(1..=a.dim());
        let c = random_density_with(&mut rng, a.dim(), rc);
        let ab = trace_distance(&a, &b).unwrap();
        worst = worst.max(trace_distance(&a, &a).unwrap().abs());
        worst = worst.max((ab - trace_distance(&b, &a).unwrap()).abs());
        worst = worst.max(trace_distance(&a, &c).unwrap() - ab - trace_distance(&b, &c).unwrap());
    }
    let mut mono = 0.0f64;
    for _ in 0..100 {
        let (a, b) = random_pair(&mut rng);
        let out = rng.random_range(2..=8);
        let kraus = a.dim().div_ceil(out) + rng.random_range(0..3);
        let ch = random_channel(&mut rng, a.dim(), out, kraus);
        let after = trace_distance(
            &a.apply_channel(&ch, 0).unwrap(),
            &b.apply_channel(&ch, 0).unwrap(),
        )
        .unwrap();
        mono = mono.max(after - trace_distance(&a, &b).unwrap());
    }
    let ok = worst <= 1e-9 && mono <= 1e-9 && within(start, 60);
    report(
        3,
        ok,
        format!(
            "axiom defect {worst:.2e}, monotonicity excess {mono:.2e}, {:?}",
            start.elapsed()
        ),
    )
}

fn c04_one_time_pad() -> bool {
    let start = Instant::now();
    let adv: Vec<f64> = (1..=8).map(|len| otp_advantage(len).unwrap()).collect();
    let ok = adv.iter().all(|&a| a == 0.0) && within(start, 5);
    report(
        4,
        ok,
        format!(
            "advantages for lengths 1..=8: {adv:?}, {:?}",
            start.elapsed()
        ),
    )
}

fn c05_security_sandwich() -> bool {
    let start = Instant::now();
    let fam = standard_family(17);
    assert_eq!(fam.len(), 35);
    let mut lines = Vec::new();
    let mut ok = true;
    for q in [0.0, 0.25] {
        let p = QkdParams::with_default_seed(4, 2, q, 1, 1).unwrap();
        let r = qkd_security_eval(&p, &fam).unwrap();
        for c in &r.cases {
            ok &= c.advantage <= c.eps_cor + c.eps_sec + tolerance::BOUND;
            ok &= c.eps_cor <= c.advantage + tolerance::BOUND;
            ok &= c.eps_sec <= 2.0 * c.advantage + tolerance::BOUND;
        }
        lines.push(format!(
            "q_tol={q}: {} attacks, max advantage {:.6}",
            r.cases.len(),
            r.advantage()
        ));
    }
    ok &= within(start, 600);
    report(
        5,
        ok,
        format!("{}, {:?}", lines.join("; "), start.elapsed()),
    )
}

fn c06_noiseless_exactness() -> bool {
    let p = QkdParams::with_default_seed(4, 2, 0.0, 1, 1).unwrap();
    let joint = p.h().stack(p.pa()).unwrap();
    assert!(joint.full_row_rank());
    let c = qkd_case(&p, &AttackStrategy::identity()).unwrap();
    let exact = tolerance::CLASSICAL_EQ;
    let ok = c.p_abort.abs() <= exact && c.eps_cor.abs() <= exact && c.eps_sec.abs() <= exact;
    report(
        6,
        ok,
        format!(
            "p_abort {:.2e}, eps_cor {:.2e}, eps_sec {:.2e}",
            c.p_abort.abs(), c.eps_cor.abs(), c.eps_sec.abs()
        ),
    )
}

fn c07_robustness_matching() -> bool {
    let p = QkdParams::with_default_seed(4, 2, 0.25, 1, 1).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [0.0, 0.1, 0.3] {
        let r = qkd_robustness_eval(&p, q).unwrap();
        ok &= r.distance <= r.advantage + tolerance::BOUND;
        ok &= (r.delta - r.ideal_abort).abs() <= tolerance::BOUND;
        if q == 0.0 {
            ok &= r.distance.abs() <= tolerance::BOUND;
        }
        parts.push(format!(
            "q={q}: distance {:.6} <= advantage {:.6}",
            r.distance, r.advantage
        ));
    }
    report(7, ok, parts.join("; "))
}

/// Independent GF(2^b) multiply with the usual irreducible polynomials.
fn gf_mul(b: u32, mut x: u64, mut y: u64) -> u64 {
    let poly = match b {
        3 => 0b1011,
        4 => 0b1_0011,
        _ => unreachable!(),
    };
    let mut acc = 0;
    while y != 0 {
        if y & 1 == 1 {
            acc ^= x;
        }
        y >>= 1;
        x <<= 1;
        if x >> b & 1 == 1 {
            x ^= poly;
        }
    }
    acc
}

fn c08_authentication() -> bool {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for b in [3u32, 4] {
        let fam = HashFamily::affine(b).unwrap();
        let size = 1u64 << b;
        let eps = 1.0 / size as f64;
        // h_{a,c}(x) = a·x + c, keys indexed a·2^b + c
        for key in 0..fam.key_space() {
            for x in 0..size {
                ok &= fam.eval(key, x) == gf_mul(b, key >> b, x) ^ (key & (size - 1));
            }
        }
        let mut max_count = 0u64;
        for x in 0..size {
            for x2 in (0..size).filter(|&x2| x2 != x) {
                let mut hist = vec![0u64; (size * size) as usize];
                for key in 0..fam.key_space() {
                    hist[(fam.eval(key, x) * size + fam.eval(key, x2)) as usize] += 1;
                }
                max_count = max_count.max(*hist.iter().max().unwrap());
            }
        }
        let oracle_joint = max_count as f64 / fam.key_space() as f64;
        let asu2 = verify_asu2(&fam).unwrap();
        ok &= asu2.holds && (asu2.max_joint - oracle_joint).abs() <= tolerance::CLASSICAL_EQ;
        ok &= oracle_joint <= eps * eps + tolerance::CLASSICAL_EQ;

        let (real, ideal) = build_auth_systems(fam).unwrap();
        let single = (0..size)
            .map(|x| {
                advantage_over_family(&real, &ideal, &substitution_family(&fam, x).unwrap())
                    .unwrap()
                    .value
            })
            .fold(0.0, f64::max);
        ok &= single <= eps + tolerance::CLASSICAL_EQ;
        let (preal, pideal) = parallel_auth_systems(fam, 3).unwrap();
        let par = advantage_over_family(
            &preal,
            &pideal,
            &parallel_substitution_family(&fam, 1, 3).unwrap(),
        )
        .unwrap()
        .value;
        ok &= par <= 3.0 * eps + tolerance::BOUND;
        parts.push(format!(
            "b={b}: joint {oracle_joint:.6}, substitution {single:.6}, parallel3 {par:.6}"
        ));
    }
    ok &= within(start, 60);
    report(
        8,
        ok,
        format!("{}, {:?}", parts.join("; "), start.elapsed()),
    )
}

fn c09_composition() -> bool {
    let mut ok = true;
    let mut parts = Vec::new();
    let p = QkdParams::with_default_seed(4, 1, 0.0, 1, 2).unwrap();

    let fam = intercept_resend_family(5);
    for split in 0..p.out_len {
        let r = leaked_key_scenario(&p, split, &fam).unwrap();
        ok &= (r.leaked.value - r.plain.value).abs() <= tolerance::BOUND;
        parts.push(format!(
            "leak split {split}: {:.6} vs {:.6}",
            r.leaked.value, r.plain.value
        ));
    }

    let r = qkd_otp_scenario(&p, Bits::parse("10").unwrap(), &intercept_resend_family(3)).unwrap();
    ok &= r.composed.value <= r.qkd.value + tolerance::BOUND;
    parts.push(format!(
        "qkd+otp {:.6} <= qkd {:.6}",
        r.composed.value, r.qkd.value
    ));

    let p3 = QkdParams::with_default_seed(3, 1, 0.0, 1, 1).unwrap();
    let single =
        parse_attack_family("intercept-resend:0.5,intercept-resend:1,noise:0.5,noise:1").unwrap();
    let crossing = [swap_attack(&[(0, 0), (1, 1), (2, 2)])];
    let r = parallel_qkd_scenario(&p3, &single, &crossing).unwrap();
    ok &= r
        .parallel
        .per_attack
        .iter()
        .any(|(id, _)| *id == crossing[0].id);
    ok &= r.parallel.value <= 2.0 * r.eps_single + tolerance::BOUND;
    parts.push(format!(
        "parallel {:.6} <= 2*{:.6}",
        r.parallel.value, r.eps_single
    ));

    let auth = HashFamily::affine(1).unwrap();
    let quantum = parse_attack_family("noise:0.2,noise:0.5").unwrap();
    let r = key_expansion(2, &auth, &p, &quantum).unwrap();
    ok &= (r.ledger.total() - 2.0 * (r.eps_auth + r.eps_qkd)).abs() <= tolerance::CLASSICAL_EQ;
    let measured = r
        .measured
        .as_ref()
        .map(|m| m.value)
        .unwrap_or(f64::INFINITY);
    ok &= measured <= r.ledger.total() + tolerance::BOUND;
    parts.push(format!(
        "expansion {measured:.6} <= ledger {:.6}",
        r.ledger.total()
    ));

    report(9, ok, parts.join("; "))
}

/// Mixes a random cq state towards τ_K ⊗ ρ_E so that ε stays small.
fn near_ideal(rng: &mut ChaCha8Rng, k: usize, e: usize) -> CQState {
    let lam: f64 = rng.random_range(0.0..0.3);
    let base = random_density_with(rng, e, e);
    let p = random_distribution(rng, k);
    let branches = (0..k)
        .map(|i| {
            let r = rng.random_range(1..=e);
            let mut m = base.matrix().scale(1.0 - lam);
            m.add_scaled(random_density_with(rng, e, r).matrix(), lam);
            let w = (1.0 - lam) / k as f64 + lam * p.probs()[i];
            (vec![i as u64], w, DensityOperator::new(m, &[e]).unwrap())
        })
        .collect();
    CQState::make(vec![Register::new("K", k as u64)], branches).unwrap()
}

/// Σ_k p_k tr(Γ_k ρ_k) for a measurement with one outcome per key.
fn povm_success(c: &CQState, rng: &mut ChaCha8Rng) -> f64 {
    let d = c.branches()[0].op.dim();
    let povm = random_povm(rng, d, 2);
    c.branches()
        .iter()
        .map(|b| b.weight * povm.outcome_weights(&b.op).unwrap()[b.assignment[0] as usize])
        .sum()
}

fn c10_bound_suite() -> bool {
    let start = Instant::now();
    let mut rng = rng(10);
    let k = ["K"];
    let (mut pguess, mut af, mut pinsker, mut factor2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut af_cases = 0;
    for _ in 0..500 {
        let e = rng.random_range(1..=4);
        let c = random_cq_state(&mut rng, 2, e);
        let pg = pguess_exact(&c, &k).unwrap();
        pguess = pguess.max(pg - 0.5 - uniform_key_distance(&c, &k).unwrap());
        pguess = pguess.max(povm_success(&c, &mut rng) - pg);
    }
    for i in 0..500 {
        let key = if i % 2 == 0 { 2 } else { 4 };
        let e = rng.random_range(1..=4);
        let c = near_ideal(&mut rng, key, e);
        for r in entropy_bounds(&c, &k).unwrap() {
            let excess = -r.slack;
            match r.name.as_str() {
                "alicki_fannes" if r.applicable => {
                    af_cases += 1;
                    af = af.max(excess);
                }
                "alicki_fannes" => {}
                _ => pinsker = pinsker.max(excess),
            }
        }
    }
    for _ in 0..500 {
        let key = if rng.random_bool(0.5) { 2 } else { 4 };
        let e = rng.random_range(1..=4);
        let c = random_cq_state(&mut rng, key, e);
        let cands: Vec<CQState> = (0..5)
            .map(|_| CQState::from_quantum(random_density_with(&mut rng, e, e)))
            .collect();
        factor2 = factor2.max(-alt_secrecy_relation(&c, &k, &cands).unwrap().slack);
    }
    let worst = pguess.max(af).max(pinsker).max(factor2);
    let ok = worst <= 1e-9 && af_cases == 500 && within(start, 120);
    report(
        10,
        ok,
        format!(
            "pguess {pguess:.2e}, alicki-fannes {af:.2e} ({af_cases} applicable), pinsker {pinsker:.2e}, factor-2 {factor2:.2e}, {:?}",
            start.elapsed()
        ),
    )
}

/// I(K₂; Y) by enumerating K₁, K₂ and the computational-basis outcome Y.
fn locking_enumeration(m: usize) -> f64 {
    let d = 1usize << m;
    let amp = |k1: usize, k2: usize, y: usize| -> f64 {
        if k1 == 0 {
            f64::from(u8::from(y == k2))
        } else {
            let sign = if (y & k2).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            sign / (d as f64).sqrt()
        }
    };
    let mut joint = vec![vec![0.0; d]; d];
    for k1 in 0..2 {
        for (k2, row) in joint.iter_mut().enumerate() {
            for (y, cell) in row.iter_mut().enumerate() {
                *cell += 0.5 / d as f64 * amp(k1, k2, y).powi(2);
            }
        }
    }
    let py: Vec<f64> = (0..d).map(|y| joint.iter().map(|r| r[y]).sum()).collect();
    let mut mi = 0.0;
    for row in &joint {
        let pk: f64 = row.iter().sum();
        for (y, &pxy) in row.iter().enumerate() {
            if pxy > 0.0 {
                mi += pxy * (pxy / (pk * py[y])).log2();
            }
        }
    }
    mi
}

fn c11_locking() -> bool {
    let r = locking_demo(2).unwrap();
    let oracle = locking_enumeration(2);
    let ok = (r.post_reveal - 2.0).abs() <= tolerance::CLASSICAL_EQ
        && (r.pre_reveal - oracle).abs() <= tolerance::BOUND
        && r.pre_reveal < 2.0;
    report(
        11,
        ok,
        format!(
            "post-reveal {:.12}, pre-reveal {:.9} (oracle {oracle:.9})",
            r.post_reveal, r.pre_reveal
        ),
    )
}

fn main() {
    let criteria: [fn() -> bool; 11] = [
        c01_helstrom_equality,
        c02_maximal_coupling,
        c03_metric_and_data_processing,
        c04_one_time_pad,
        c05_security_sandwich,
        c06_noiseless_exactness,
        c07_robustness_matching,
        c08_authentication,
        c09_composition,
        c10_bound_suite,
        c11_locking,
    ];
    let failed = criteria
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            let ok = std::panic::catch_unwind(**c).unwrap_or(false);
            if !ok {
                println!("FAIL criterion {}", i + 1);
            }
            !ok
        })
        .count();
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
