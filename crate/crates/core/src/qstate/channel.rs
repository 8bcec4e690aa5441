use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::tolerance;

use super::{Result, StateError};

/// Completely positive trace-preserving map given by Kraus operators
/// `K_j : C^in → C^out`. The output space may be a product (e.g. the
/// channel output followed by an environment kept by the adversary), as
/// described by `out_dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    in_dim: usize,
    out_dims: Vec<usize>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>, in_dim: usize, out_dims: Vec<usize>) -> Result<Self> {
        let out: usize = out_dims.iter().product();
        if ops.is_empty() {
            return Err(StateError::InvalidArgument(
                "channel needs at least one Kraus operator".into(),
            ));
        }
        for k in &ops {
            if k.rows() != out || k.cols() != in_dim {
                return Err(StateError::DimMismatch {
                    expected: out * in_dim,
                    found: k.rows() * k.cols(),
                });
            }
        }
        let ch = Self {
            ops,
            in_dim,
            out_dims,
        };
        let defect = ch.completeness_defect();
        if defect > tolerance::COMPLETENESS {
            return Err(StateError::NotTracePreserving { defect });
        }
        Ok(ch)
    }

    pub(crate) fn from_parts(ops: Vec<CMatrix>, in_dim: usize, out_dims: Vec<usize>) -> Self {
        Self {
            ops,
            in_dim,
            out_dims,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_parts(vec![CMatrix::identity(dim)], dim, vec![dim])
    }

    pub fn unitary(u: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let d = u.rows();
        Self::new(vec![u], d, dims)
    }

    /// Qubit depolarising channel ρ ↦ (1 − q) ρ + q I/2.
    pub fn depolarizing(q: f64) -> Self {
        let (w0, w) = pauli_weights(q);
        let ops = pauli_matrices()
            .into_iter()
            .zip([w0, w, w, w])
            .map(|(p, wt)| p.scale(wt.sqrt()))
            .collect();
        Self::from_parts(ops, 2, vec![2])
    }

    /// Replaces any input of dimension `dim` by I/dim.
    pub fn fully_depolarizing(dim: usize) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        let mut ops = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, j)] = C64::new(s, 0.0);
                ops.push(k);
            }
        }
        Self::from_parts(ops, dim, vec![dim])
    }

    /// Single-isometry form V = Σ_j K_j ⊗ |j⟩: the output gains an
    /// environment factor of dimension equal to the number of Kraus operators.
    pub fn stinespring(&self) -> Self {
        let r = self.ops.len();
        let out: usize = self.out_dims.iter().product();
        let mut v = CMatrix::zeros(out * r, self.in_dim);
        for (j, k) in self.ops.iter().enumerate() {
            for a in 0..out {
                for b in 0..self.in_dim {
                    v[(a * r + j, b)] = k[(a, b)];
                }
            }
        }
        let mut dims = self.out_dims.clone();
        dims.push(r);
        Self::from_parts(vec![v], self.in_dim, dims)
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    /// max |Σ K†K − I|.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.ops {
            sum.add_scaled(&(&k.adjoint() * k), 1.0);
        }
        sum.max_abs_diff(&CMatrix::identity(self.in_dim))
    }

    /// Σ K ρ K† on a bare matrix.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let out = self.out_dim();
        let mut acc = CMatrix::zeros(out, out);
        for k in &self.ops {
            acc.add_scaled(&k.conjugate(rho), 1.0);
        }
        acc
    }

    /// Channel followed by `other` on the same (single-factor) output.
    pub fn then(&self, other: &KrausChannel) -> Result<Self> {
        if other.in_dim != self.out_dim() {
            return Err(StateError::DimMismatch {
                expected: self.out_dim(),
                found: other.in_dim,
            });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for b in &other.ops {
            for a in &self.ops {
                ops.push(b * a);
            }
        }
        Ok(Self::from_parts(ops, self.in_dim, other.out_dims.clone()))
    }
}

/// (weight of I, weight of each of X, Y, Z) for depolarising strength q.
pub(crate) fn pauli_weights(q: f64) -> (f64, f64) {
    (1.0 - 0.75 * q, 0.25 * q)
}

pub(crate) fn pauli_matrices() -> [CMatrix; 4] {
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::identity(2),
        CMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]),
        CMatrix::from_vec(2, 2, vec![ZERO, -i, i, ZERO]),
        CMatrix::from_vec(2, 2, vec![ONE, ZERO, ZERO, -ONE]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_channels_are_trace_preserving() {
        for q in [0.0, 0.2, 1.0] {
            assert!(KrausChannel::depolarizing(q).completeness_defect() < 1e-12);
        }
        assert!(KrausChannel::fully_depolarizing(3).completeness_defect() < 1e-12);
        assert!(
            KrausChannel::depolarizing(0.4)
                .stinespring()
                .completeness_defect()
                < 1e-12
        );
    }

    #[test]
    fn non_trace_preserving_rejected() {
        let k = CMatrix::identity(2).scale(0.5);
        assert!(matches!(
            KrausChannel::new(vec![k], 2, vec![2]),
            Err(StateError::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn composition_is_trace_preserving() {
        let c = KrausChannel::depolarizing(0.3)
            .then(&KrausChannel::depolarizing(0.5))
            .unwrap();
        assert!(c.completeness_defect() < 1e-12);
    }
}
