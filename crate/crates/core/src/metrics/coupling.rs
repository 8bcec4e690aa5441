use crate::qstate::{ClassicalDistribution, DensityOperator, Povm};

use super::distance::check_alphabet;
use super::{MetricsError, Result};

/// Joint distribution of (Z, Z̃) over a common alphabet of size `n`,
/// stored row-major: `joint[z * n + z̃]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    n: usize,
    joint: Vec<f64>,
}

impl Coupling {
    pub fn from_joint(n: usize, joint: Vec<f64>) -> Result<Self> {
        if joint.len() != n * n {
            return Err(MetricsError::AlphabetMismatch(joint.len(), n * n));
        }
        ClassicalDistribution::new(joint.clone())?;
        Ok(Self { n, joint })
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    pub fn prob(&self, z: usize, zt: usize) -> f64 {
        self.joint[z * self.n + zt]
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|z| (0..self.n).map(|t| self.prob(z, t)).sum())
            .collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|t| (0..self.n).map(|z| self.prob(z, t)).sum())
            .collect()
    }

    /// Pr[Z = Z̃].
    pub fn prob_equal(&self) -> f64 {
        (0..self.n).map(|z| self.prob(z, z)).sum()
    }

    /// Largest deviation of either marginal from the given distributions.
    pub fn marginal_defect(&self, p: &ClassicalDistribution, q: &ClassicalDistribution) -> f64 {
        let (m1, m2) = (self.first_marginal(), self.second_marginal());
        let d1 = m1.iter().zip(p.probs()).map(|(a, b)| (a - b).abs());
        let d2 = m2.iter().zip(q.probs()).map(|(a, b)| (a - b).abs());
        d1.chain(d2).fold(0.0, f64::max)
    }
}

/// Q(z,z) = min(p, q) on the diagonal plus R_Z R_Z̃ᵀ / D off it. When
/// D = 0 the correction vanishes and the coupling is diagonal.
pub fn maximal_coupling(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<Coupling> {
    check_alphabet(p, q)?;
    let n = p.len();
    let mins: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| a.min(*b))
        .collect();
    let rp: Vec<f64> = p.probs().iter().zip(&mins).map(|(a, m)| a - m).collect();
    let rq: Vec<f64> = q.probs().iter().zip(&mins).map(|(b, m)| b - m).collect();
    let d: f64 = rp.iter().sum();
    let mut joint = vec![0.0; n * n];
    for z in 0..n {
        joint[z * n + z] = mins[z];
    }
    if d > 0.0 {
        for z in 0..n {
            if rp[z] == 0.0 {
                continue;
            }
            for t in 0..n {
                joint[z * n + t] += rp[z] * rq[t] / d;
            }
        }
    }
    Ok(Coupling { n, joint })
}

/// Maximal coupling of the outcome distributions of `povm` on ρ and σ.
pub fn couple_measurements(
    r: &DensityOperator,
    s: &DensityOperator,
    povm: &Povm,
) -> Result<Coupling> {
    if r.dim() != s.dim() {
        return Err(MetricsError::DimMismatch(r.dim(), s.dim()));
    }
    let pr = ClassicalDistribution::from_weights(povm.outcome_weights(r)?)?;
    let ps = ClassicalDistribution::from_weights(povm.outcome_weights(s)?)?;
    maximal_coupling(&pr, &ps)
}
