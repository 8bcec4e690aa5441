use crate::qstate::CQState;

use super::entropy::group_by_side;
use super::{MetricsError, Result};

/// Exact p_guess(K|E). Per side-information value, classical E takes the
/// largest key weight and two candidate keys use the binary Helstrom form
/// ½(w₀ + w₁) + ½‖w₀ρ₀ − w₁ρ₁‖₁. More than two keys with quantum E is refused.
pub fn pguess_exact(c: &CQState, key: &[&str]) -> Result<f64> {
    let mut total = 0.0;
    for (side, group) in group_by_side(c, key)? {
        let classical = group.iter().all(|(_, b)| b.op.dim() == 1);
        total += match group.len() {
            1 => group[0].1.weight,
            _ if classical => group.iter().map(|(_, b)| b.weight).fold(0.0, f64::max),
            2 => {
                let (a, b) = (group[0].1, group[1].1);
                if a.op.dim() != b.op.dim() {
                    return Err(MetricsError::DimMismatch(a.op.dim(), b.op.dim()));
                }
                let mut d = a.weighted_matrix();
                d.add_scaled(b.op.matrix(), -b.weight);
                0.5 * (a.weight + b.weight) + 0.5 * d.trace_norm_hermitian()?
            }
            n => {
                return Err(MetricsError::Unsupported(format!(
                    "{n} candidate keys with quantum side information at {side:?}"
                )))
            }
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::uniform_key_distance;
    use crate::qstate::{
        random_cq_state, random_density_with, seeded_rng, DensityOperator, Register,
    };

    #[test]
    fn no_side_information() {
        let e = random_density_with(&mut seeded_rng(1), 3, 2);
        for k in [2usize, 4] {
            let c = CQState::classical(
                vec![Register::new("K", k as u64)],
                (0..k).map(|i| (vec![i as u64], 1.0 / k as f64)).collect(),
            )
            .unwrap();
            assert!((pguess_exact(&c, &["K"]).unwrap() - 1.0 / k as f64).abs() < 1e-12);
        }
        let c = CQState::make(
            vec![Register::new("K", 2)],
            vec![(vec![0], 0.5, e.clone()), (vec![1], 0.5, e)],
        )
        .unwrap();
        assert!((pguess_exact(&c, &["K"]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn correlated_classical_copy() {
        let c = CQState::classical(
            vec![Register::new("K", 4), Register::new("E", 4)],
            (0..4).map(|i| (vec![i, i], 0.25)).collect(),
        )
        .unwrap();
        assert!((pguess_exact(&c, &["K"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_many_keys_with_quantum_e() {
        let c = CQState::make(
            vec![Register::new("K", 3)],
            (0..3)
                .map(|i| {
                    (
                        vec![i],
                        1.0 / 3.0,
                        DensityOperator::basis(&[2], (i % 2) as usize).unwrap(),
                    )
                })
                .collect(),
        )
        .unwrap();
        assert!(matches!(
            pguess_exact(&c, &["K"]),
            Err(MetricsError::Unsupported(_))
        ));
    }

    #[test]
    fn guessing_bounded_by_distance_from_uniform() {
        let mut rng = seeded_rng(44);
        for i in 0..200 {
            let c = random_cq_state(&mut rng, 2, 1 + i % 4);
            let pg = pguess_exact(&c, &["K"]).unwrap();
            let d = uniform_key_distance(&c, &["K"]).unwrap();
            assert!(pg <= 0.5 + d + 1e-9);
        }
    }
}
