//! Deterministic random test objects (Ginibre states, Haar-ish isometries).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::linalg::{orthonormalize_columns, CMatrix, C64};

use super::{CQState, ClassicalDistribution, DensityOperator, KrausChannel, Povm, Register};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-seed for stream `stream` (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn normal_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| normal_c64(rng))
}

/// Random state of the given rank: G G† / tr for a dim × rank Ginibre G.
pub fn random_density(seed: u64, dim: usize, rank: usize) -> DensityOperator {
    random_density_with(&mut seeded_rng(seed), dim, rank)
}

pub fn random_density_with<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
) -> DensityOperator {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    let g = ginibre(rng, dim, rank);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityOperator::from_parts(m.scale(1.0 / tr).hermitian_part(), vec![dim], 1.0)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    ginibre(rng, dim, dim).hermitian_part()
}

/// Random isometry C^in → C^(out·k), split into k Kraus operators.
pub fn random_channel<R: Rng + ?Sized>(
    rng: &mut R,
    in_dim: usize,
    out_dim: usize,
    kraus: usize,
) -> KrausChannel {
    assert!(out_dim * kraus >= in_dim, "isometry needs out·k ≥ in");
    let v = orthonormalize_columns(&ginibre(rng, out_dim * kraus, in_dim));
    let ops = (0..kraus)
        .map(|j| CMatrix::from_fn(out_dim, in_dim, |a, b| v[(a * kraus + j, b)]))
        .collect();
    KrausChannel::from_parts(ops, in_dim, vec![out_dim])
}

/// Random POVM with `outcomes` elements, Γ_x = K_x† K_x from a random isometry.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Povm {
    let ch = random_channel(rng, dim, dim, outcomes);
    Povm::from_parts(
        ch.kraus_ops()
            .iter()
            .map(|k| (&k.adjoint() * k).hermitian_part())
            .collect(),
    )
}

/// Random distribution (normalised exponentials), occasionally with zeros.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ClassicalDistribution {
    let sparse = rng.random_bool(0.25);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = rng.sample(Exp1);
            if sparse && rng.random_bool(0.3) {
                0.0
            } else {
                e
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    ClassicalDistribution::from_weights(w).expect("positive weights")
}

/// Random cq state Σ_k p_k |k⟩⟨k| ⊗ ρ^k_E over a key register `K` of size
/// `key_size` and a quantum `E` of dimension `e_dim`.
pub fn random_cq_state<R: Rng + ?Sized>(rng: &mut R, key_size: usize, e_dim: usize) -> CQState {
    let p = random_distribution(rng, key_size);
    let mut branches = Vec::new();
    for (k, &pk) in p.probs().iter().enumerate() {
        let rank = rng.random_range(1..=e_dim);
        branches.push((vec![k as u64], pk, random_density_with(rng, e_dim, rank)));
    }
    CQState::make(vec![Register::new("K", key_size as u64)], branches)
        .expect("valid random cq state")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_state() {
        assert_eq!(random_density(7, 4, 2), random_density(7, 4, 2));
        assert_ne!(random_density(7, 4, 2), random_density(8, 4, 2));
    }

    #[test]
    fn rank_one_is_pure_and_full_rank_positive() {
        let ev = random_density(3, 5, 1).eigenvalues().unwrap();
        assert!(ev[..4].iter().all(|v| v.abs() < 1e-9));
        let ev = random_density(3, 5, 5).eigenvalues().unwrap();
        assert!(ev.iter().all(|&v| v > 0.0));
        assert!(random_density(11, 6, 3).validate().is_ok());
    }

    #[test]
    fn random_channels_and_povms_valid() {
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let ch = random_channel(&mut rng, 3, 4, 2);
            assert!(ch.completeness_defect() < 1e-10);
            let p = random_povm(&mut rng, 3, 4);
            assert!(Povm::new(p.elements().to_vec()).is_ok());
        }
    }
}
