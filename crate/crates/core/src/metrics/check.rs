//! Randomised audit of the metric identities and inequalities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::qstate::{
    derive_seed, random_channel, random_cq_state, random_density_with, random_distribution,
    random_povm, seeded_rng, CQState, DensityOperator,
};

use super::*;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: &'static str,
    pub trials: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

type Probe = fn(&mut ChaCha8Rng) -> Result<f64>;

fn pair(rng: &mut ChaCha8Rng) -> (DensityOperator, DensityOperator) {
    let d = rng.random_range(2..=8);
    let (ra, rb) = (rng.random_range(1..=d), rng.random_range(1..=d));
    let a = random_density_with(rng, d, ra);
    let b = random_density_with(rng, d, rb);
    (a, b)
}

fn identity(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, _) = pair(rng);
    trace_distance(&a, &a)
}

fn symmetry(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = pair(rng);
    Ok((trace_distance(&a, &b)? - trace_distance(&b, &a)?).abs())
}

fn triangle(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = pair(rng);
    let c = random_density_with(rng, a.dim(), a.dim());
    Ok((trace_distance(&a, &c)? - trace_distance(&a, &b)? - trace_distance(&b, &c)?).max(0.0))
}

fn data_processing(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = pair(rng);
    let out = rng.random_range(2..=4);
    let kraus = rng.random_range(1..=3) + a.dim() / out;
    let ch = random_channel(rng, a.dim(), out, kraus);
    let (ea, eb) = (a.apply_channel(&ch, 0)?, b.apply_channel(&ch, 0)?);
    Ok((trace_distance(&ea, &eb)? - trace_distance(&a, &b)?).max(0.0))
}

fn tensor_invariance(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = pair(rng);
    let t = random_density_with(rng, 2, 2);
    let lhs = trace_distance(&a.tensor(&t)?, &b.tensor(&t)?)?;
    Ok((lhs - trace_distance(&a, &b)?).abs())
}

fn helstrom_equality(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = pair(rng);
    Ok((helstrom_value(&a, &b)? - trace_distance(&a, &b)?).abs())
}

fn helstrom_optimality(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = pair(rng);
    let n = rng.random_range(2..=5);
    let povm = random_povm(rng, a.dim(), n);
    Ok((povm_guess_probability(&povm, &a, &b)? - guessing_probability(&a, &b)?).max(0.0))
}

fn coupling_equality(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = rng.random_range(2..=8);
    let (p, q) = (random_distribution(rng, n), random_distribution(rng, n));
    let c = maximal_coupling(&p, &q)?;
    let eq = (c.prob_equal() - (1.0 - total_variation(&p, &q)?)).abs();
    Ok(eq.max(c.marginal_defect(&p, &q)))
}

/// Mixtures of the maximal and the independent coupling have the right
/// marginals and must not beat 1 − TV.
fn coupling_optimality(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = rng.random_range(2..=8);
    let (p, q) = (random_distribution(rng, n), random_distribution(rng, n));
    let max = maximal_coupling(&p, &q)?;
    let lam: f64 = rng.random();
    let indep: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| a * b).sum();
    let alt = lam * max.prob_equal() + (1.0 - lam) * indep;
    Ok((alt - (1.0 - total_variation(&p, &q)?)).max(0.0))
}

fn measurement_coupling(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = pair(rng);
    let n = rng.random_range(2..=4);
    let povm = random_povm(rng, a.dim(), n);
    let c = couple_measurements(&a, &b, &povm)?;
    Ok((1.0 - c.prob_equal() - trace_distance(&a, &b)?).max(0.0))
}

fn tv_forms(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = rng.random_range(1..=10);
    let (p, q) = (random_distribution(rng, n), random_distribution(rng, n));
    Ok((total_variation(&p, &q)? - total_variation_min_form(&p, &q)?).abs())
}

fn random_cq(rng: &mut ChaCha8Rng) -> CQState {
    let k = if rng.random_bool(0.5) { 2 } else { 4 };
    let e = rng.random_range(1..=4);
    random_cq_state(rng, k, e)
}

fn cq_block_vs_flat(rng: &mut ChaCha8Rng) -> Result<f64> {
    let k = if rng.random_bool(0.5) { 2 } else { 4 };
    let e = rng.random_range(1..=4);
    let (r, s) = (random_cq_state(rng, k, e), random_cq_state(rng, k, e));
    let flat = trace_distance(&r.flatten()?, &s.flatten()?)?;
    Ok((cq_trace_distance(&r, &s)? - flat).abs())
}

fn guessing_vs_distance(rng: &mut ChaCha8Rng) -> Result<f64> {
    let e = rng.random_range(1..=4);
    let c = random_cq_state(rng, 2, e);
    Ok((pguess_exact(&c, &["K"])? - 0.5 - uniform_key_distance(&c, &["K"])?).max(0.0))
}

fn entropy_reports(rng: &mut ChaCha8Rng) -> Result<f64> {
    let c = random_cq(rng);
    Ok(entropy_bounds(&c, &["K"])?
        .iter()
        .filter(|r| r.applicable)
        .map(|r| (-r.slack).max(0.0))
        .fold(0.0, f64::max))
}

fn alt_secrecy(rng: &mut ChaCha8Rng) -> Result<f64> {
    let c = random_cq(rng);
    let e = c.branches()[0].op.dim();
    let cands: Vec<CQState> = (0..10)
        .map(|_| CQState::from_quantum(random_density_with(rng, e, e)))
        .collect();
    Ok((-alt_secrecy_relation(&c, &["K"], &cands)?.slack).max(0.0))
}

fn channel_trace(rng: &mut ChaCha8Rng) -> Result<f64> {
    let d = rng.random_range(2..=8);
    let rank = rng.random_range(1..=d);
    let a = random_density_with(rng, d, rank);
    let out = rng.random_range(2..=8);
    let kraus = d.div_ceil(out) + rng.random_range(0..3);
    let ch = random_channel(rng, d, out, kraus);
    Ok((a.apply_channel(&ch, 0)?.trace() - 1.0).abs())
}

fn partial_trace_tensor(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, _) = pair(rng);
    let t = random_density_with(rng, 3, 2);
    let back = a.tensor(&t)?.partial_trace(&[0])?;
    Ok(back.matrix().max_abs_diff(a.matrix()))
}

const PROPERTIES: &[(&str, Probe, f64)] = &[
    ("trace_distance_identity", identity, 1e-12),
    ("trace_distance_symmetry", symmetry, 1e-12),
    ("trace_distance_triangle", triangle, 1e-9),
    ("data_processing", data_processing, 1e-9),
    ("tensor_invariance", tensor_invariance, 1e-9),
    ("helstrom_equality", helstrom_equality, 1e-9),
    ("helstrom_optimality", helstrom_optimality, 1e-9),
    ("maximal_coupling_equality", coupling_equality, 1e-12),
    ("maximal_coupling_optimality", coupling_optimality, 1e-12),
    ("measurement_coupling_bound", measurement_coupling, 1e-9),
    ("total_variation_forms", tv_forms, 1e-12),
    ("cq_block_vs_flat", cq_block_vs_flat, 1e-9),
    ("guessing_vs_distance", guessing_vs_distance, 1e-9),
    ("entropy_bounds", entropy_reports, 1e-9),
    ("alt_secrecy_factor2", alt_secrecy, 1e-9),
    ("channel_trace_preservation", channel_trace, 1e-10),
    ("partial_trace_of_tensor", partial_trace_tensor, 1e-12),
];

/// Runs every property `trials` times; trial `i` of property `p` is seeded
/// independently so results do not depend on thread scheduling.
pub fn run_property_checks(seed: u64, trials: usize) -> Result<Vec<PropertyReport>> {
    PROPERTIES
        .iter()
        .enumerate()
        .map(|(p, &(name, probe, tol))| {
            let worst = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = seeded_rng(derive_seed(seed, ((p as u64) << 32) | t as u64));
                    probe(&mut rng)
                })
                .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
            Ok(PropertyReport {
                name,
                trials,
                max_violation: worst,
                tolerance: tol,
                pass: worst <= tol,
            })
        })
        .collect()
}
