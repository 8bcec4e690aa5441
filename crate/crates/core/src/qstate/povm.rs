use crate::linalg::{hermitian_eigenvalues, CMatrix};
use crate::tolerance;

use super::density::partial_trace_matrix;
use super::{
    CQState, ClassicalDistribution, CqBuilder, DensityOperator, Register, Result, StateError,
};

/// Positive operator-valued measure {Γ_x}.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(|i| i.to_string()).collect();
        Self::with_labels(elements, labels)
    }

    /// Validates 0 ≤ Γ_x ≤ I and Σ Γ_x = I.
    pub fn with_labels(elements: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() || elements.len() != labels.len() {
            return Err(StateError::BadPovm(
                "need one label per element and at least one element".into(),
            ));
        }
        let d = elements[0].rows();
        let mut sum = CMatrix::zeros(d, d);
        for (g, l) in elements.iter().zip(&labels) {
            if !g.is_square() || g.rows() != d {
                return Err(StateError::BadPovm(format!(
                    "element `{l}` has wrong shape"
                )));
            }
            let defect = g.hermiticity_defect();
            if defect > tolerance::HERMITIAN {
                return Err(StateError::BadPovm(format!(
                    "element `{l}` not Hermitian ({defect:e})"
                )));
            }
            let ev = hermitian_eigenvalues(g)?;
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            if lo < -tolerance::PSD || hi > 1.0 + tolerance::PSD {
                return Err(StateError::BadPovm(format!(
                    "element `{l}` spectrum [{lo}, {hi}] outside [0, 1]"
                )));
            }
            sum.add_scaled(g, 1.0);
        }
        let defect = sum.max_abs_diff(&CMatrix::identity(d));
        if defect > tolerance::COMPLETENESS {
            return Err(StateError::BadPovm(format!(
                "Σ Γ differs from I by {defect:e}"
            )));
        }
        Ok(Self { elements, labels })
    }

    pub(crate) fn from_parts(elements: Vec<CMatrix>) -> Self {
        let labels = (0..elements.len()).map(|i| i.to_string()).collect();
        Self { elements, labels }
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        Self::from_parts((0..dim).map(|i| CMatrix::basis_projector(dim, i)).collect())
    }

    /// The trivial one-outcome measurement {I}.
    pub fn trivial(dim: usize) -> Self {
        Self::from_parts(vec![CMatrix::identity(dim)])
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Outcome probabilities tr(Γ_x ρ) on a full-space state (not renormalised).
    pub fn outcome_weights(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(StateError::DimMismatch {
                expected: rho.dim(),
                found: self.dim(),
            });
        }
        Ok(self.elements.iter().map(|g| rho.expectation(g)).collect())
    }

    /// Measures factor `factor` of each branch of `state`, appending an
    /// outcome register named `register`. The measured factor is consumed.
    pub fn measure_cq(&self, state: &CQState, factor: usize, register: &str) -> Result<CQState> {
        let mut regs = state.registers().to_vec();
        regs.push(Register::new(register, self.len() as u64));
        let mut builder = CqBuilder::new(regs);
        for b in state.branches() {
            let (dims, posts) = self.post_states(&b.op, factor)?;
            for (x, post) in posts.iter().enumerate() {
                let mut a = b.assignment.clone();
                a.push(x as u64);
                builder.add(a, &dims, post, b.weight)?;
            }
        }
        builder.finish()
    }

    /// tr_factor[(Γ_x on factor) ρ] for every outcome, with the remaining factorisation.
    fn post_states(
        &self,
        rho: &DensityOperator,
        factor: usize,
    ) -> Result<(Vec<usize>, Vec<CMatrix>)> {
        let dims = rho.dims();
        if factor >= dims.len() {
            return Err(StateError::BadFactor {
                index: factor,
                factors: dims.len(),
            });
        }
        if dims[factor] != self.dim() {
            return Err(StateError::DimMismatch {
                expected: dims[factor],
                found: self.dim(),
            });
        }
        let left: usize = dims[..factor].iter().product();
        let right: usize = dims[factor + 1..].iter().product();
        let keep: Vec<usize> = (0..dims.len()).filter(|&i| i != factor).collect();
        let rest: Vec<usize> = if keep.is_empty() {
            vec![1]
        } else {
            keep.iter().map(|&i| dims[i]).collect()
        };
        let il = CMatrix::identity(left);
        let ir = CMatrix::identity(right);
        let mut posts = Vec::with_capacity(self.len());
        for g in &self.elements {
            let emb = il.kron(g).kron(&ir);
            let prod = &emb * rho.matrix();
            let post = if keep.is_empty() {
                CMatrix::from_vec(1, 1, vec![prod.trace()])
            } else {
                partial_trace_matrix(&prod, dims, &keep)
            };
            posts.push(post.hermitian_part());
        }
        Ok((rest, posts))
    }
}

/// Measures factor `factor` of `rho`: the conditional outcome distribution
/// P_X(x) = tr(Γ_x ρ) / tr ρ and the post-measurement cq state over the
/// outcome register `X` and the unmeasured factors.
pub fn measure_povm(
    povm: &Povm,
    rho: &DensityOperator,
    factor: usize,
) -> Result<(ClassicalDistribution, CQState)> {
    let cq = povm.measure_cq(&CQState::from_quantum(rho.clone()), factor, "X")?;
    let mut weights = vec![0.0; povm.len()];
    for b in cq.branches() {
        weights[b.assignment[0] as usize] += b.weight;
    }
    let dist = ClassicalDistribution::with_labels(povm.labels().to_vec(), {
        let total: f64 = weights.iter().sum();
        weights.iter().map(|w| w / total).collect()
    })?;
    Ok((dist, cq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::density::qubit_state;

    #[test]
    fn computational_on_mixed_and_plus() {
        let (d, _) = measure_povm(
            &Povm::computational(2),
            &DensityOperator::maximally_mixed(2),
            0,
        )
        .unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let plus = DensityOperator::pure(&qubit_state(0, 1), &[2]).unwrap();
        let (d, _) = measure_povm(&Povm::computational(2), &plus, 0).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-15 && (d.probs()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trivial_povm_certain() {
        let rho = DensityOperator::basis(&[3], 2).unwrap();
        let (d, _) = measure_povm(&Povm::trivial(3), &rho, 0).unwrap();
        assert_eq!(d.probs(), &[1.0]);
    }

    #[test]
    fn measuring_one_half_of_product_leaves_other() {
        let a = DensityOperator::basis(&[2], 1).unwrap();
        let b = DensityOperator::pure(&qubit_state(1, 1), &[2]).unwrap();
        let (d, post) = measure_povm(&Povm::computational(2), &a.tensor(&b).unwrap(), 0).unwrap();
        assert_eq!(d.probs(), &[0.0, 1.0]);
        let br = post.get(&[1]).unwrap();
        assert!(br.op.matrix().max_abs_diff(b.matrix()) < 1e-14);
    }

    #[test]
    fn invalid_povms() {
        assert!(Povm::new(vec![CMatrix::diag(&[1.0, 0.0])]).is_err());
        assert!(Povm::new(vec![
            CMatrix::diag(&[1.5, 1.0]),
            CMatrix::diag(&[-0.5, 0.0])
        ])
        .is_err());
        assert!(Povm::new(vec![CMatrix::diag(&[1.0, 0.0]), CMatrix::diag(&[0.0, 1.0])]).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let rho = DensityOperator::maximally_mixed(3);
        assert!(matches!(
            measure_povm(&Povm::computational(2), &rho, 0),
            Err(StateError::DimMismatch { .. })
        ));
    }
}
