use crate::linalg::{hermitian_eig, hermitian_eigenvalues, CMatrix, C64};
use crate::tolerance;

use super::{total_dim, KrausChannel, Result, StateError};

/// Configurable construction limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateLimits {
    pub max_dimension: usize,
}

impl Default for StateLimits {
    fn default() -> Self {
        Self {
            max_dimension: tolerance::DEFAULT_MAX_DIMENSION,
        }
    }
}

/// Positive semidefinite Hermitian operator over an ordered tensor
/// factorisation. `trace_mass` is 1 for normalised states and below 1 for
/// conditional (subnormalised) ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: CMatrix,
    trace_mass: f64,
}

impl DensityOperator {
    /// Validated unit-trace state.
    pub fn new(matrix: CMatrix, dims: &[usize]) -> Result<Self> {
        Self::make(matrix, dims, Some(1.0), false, StateLimits::default())
    }

    /// Validated state whose trace must equal `trace_mass`.
    pub fn with_trace_mass(matrix: CMatrix, dims: &[usize], trace_mass: f64) -> Result<Self> {
        Self::make(
            matrix,
            dims,
            Some(trace_mass),
            false,
            StateLimits::default(),
        )
    }

    /// Symmetrises, validates and clips tiny negative eigenvalues. With
    /// `renormalize` the result is rescaled to unit trace; otherwise the
    /// trace must already be 1.
    pub fn make(
        matrix: CMatrix,
        dims: &[usize],
        expected_trace: Option<f64>,
        renormalize: bool,
        limits: StateLimits,
    ) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(StateError::InvalidArgument("factor dimension 0".into()));
        }
        let dim = total_dim(dims, limits.max_dimension)?;
        if !matrix.is_square() || matrix.rows() != dim {
            return Err(StateError::DimMismatch {
                expected: dim,
                found: matrix.rows().max(matrix.cols()),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > tolerance::HERMITIAN {
            return Err(StateError::NotHermitian {
                defect,
                tolerance: tolerance::HERMITIAN,
            });
        }
        let mut m = matrix.hermitian_part();
        let eig = hermitian_eig(&m)?;
        let min = eig.values.first().copied().unwrap_or(0.0);
        if min < -tolerance::PSD {
            return Err(StateError::NotPSD {
                min_eigenvalue: min,
                tolerance: tolerance::PSD,
            });
        }
        if min < 0.0 {
            let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
            m = crate::linalg::HermitianEig {
                values: clipped,
                vectors: eig.vectors,
            }
            .reconstruct()
            .hermitian_part();
        }
        let tr = m.trace().re;
        if renormalize {
            if tr <= 0.0 {
                return Err(StateError::BadTrace {
                    expected: 1.0,
                    found: tr,
                    defect: (1.0 - tr).abs(),
                });
            }
            m = m.scale(1.0 / tr);
            return Ok(Self {
                dims: dims.to_vec(),
                matrix: m,
                trace_mass: 1.0,
            });
        }
        let expected = expected_trace.unwrap_or(1.0);
        if !(0.0..=1.0 + tolerance::TRACE).contains(&expected)
            || (tr - expected).abs() > tolerance::TRACE
        {
            return Err(StateError::BadTrace {
                expected,
                found: tr,
                defect: (tr - expected).abs(),
            });
        }
        Ok(Self {
            dims: dims.to_vec(),
            matrix: m,
            trace_mass: expected,
        })
    }

    /// Internal constructor for operators produced by validated pipelines.
    pub(crate) fn from_parts(matrix: CMatrix, dims: Vec<usize>, trace_mass: f64) -> Self {
        debug_assert_eq!(matrix.rows(), dims.iter().product::<usize>());
        Self {
            dims,
            matrix,
            trace_mass,
        }
    }

    /// Pure state |ψ⟩⟨ψ| from an (automatically normalised) vector.
    pub fn pure(vector: &[C64], dims: &[usize]) -> Result<Self> {
        let norm: f64 = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(StateError::InvalidArgument("zero vector".into()));
        }
        let v: Vec<C64> = vector.iter().map(|z| z / norm).collect();
        let dim = total_dim(dims, StateLimits::default().max_dimension)?;
        if v.len() != dim {
            return Err(StateError::DimMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        Ok(Self::from_parts(CMatrix::outer(&v), dims.to_vec(), 1.0))
    }

    /// Computational basis state |index⟩⟨index|.
    pub fn basis(dims: &[usize], index: usize) -> Result<Self> {
        let dim = total_dim(dims, StateLimits::default().max_dimension)?;
        if index >= dim {
            return Err(StateError::InvalidArgument(format!(
                "basis index {index} out of range {dim}"
            )));
        }
        Ok(Self::from_parts(
            CMatrix::basis_projector(dim, index),
            dims.to_vec(),
            1.0,
        ))
    }

    /// τ_d = I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_parts(
            CMatrix::identity(dim).scale(1.0 / dim as f64),
            vec![dim],
            1.0,
        )
    }

    /// τ over a factorisation.
    pub fn maximally_mixed_dims(dims: &[usize]) -> Self {
        let dim: usize = dims.iter().product();
        Self::from_parts(
            CMatrix::identity(dim).scale(1.0 / dim as f64),
            dims.to_vec(),
            1.0,
        )
    }

    /// The trivial one-dimensional state with the given mass.
    pub fn scalar(mass: f64) -> Self {
        Self::from_parts(CMatrix::from_real(1, 1, &[mass]), vec![1], mass)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace_mass(&self) -> f64 {
        self.trace_mass
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Re-runs every invariant check.
    pub fn validate(&self) -> Result<()> {
        Self::make(
            self.matrix.clone(),
            &self.dims,
            Some(self.trace_mass),
            false,
            StateLimits {
                max_dimension: usize::MAX,
            },
        )
        .map(|_| ())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigenvalues(&self.matrix)?)
    }

    /// Returns a copy scaled by `s`; trace mass scales too.
    pub fn scaled(&self, s: f64) -> Self {
        Self::from_parts(self.matrix.scale(s), self.dims.clone(), self.trace_mass * s)
    }

    /// Unit-trace copy.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(StateError::BadTrace {
                expected: 1.0,
                found: tr,
                defect: 1.0,
            });
        }
        Ok(Self::from_parts(
            self.matrix.scale(1.0 / tr),
            self.dims.clone(),
            1.0,
        ))
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        self.tensor_with_limits(other, StateLimits::default())
    }

    pub fn tensor_with_limits(&self, other: &DensityOperator, limits: StateLimits) -> Result<Self> {
        // scalar factors are absorbed so that dims stay comparable
        let dims = match (self.dims.as_slice(), other.dims.as_slice()) {
            ([1], d) | (d, [1]) => d.to_vec(),
            (a, b) => [a, b].concat(),
        };
        total_dim(&dims, limits.max_dimension)?;
        Ok(Self::from_parts(
            self.matrix.kron(&other.matrix),
            dims,
            self.trace_mass * other.trace_mass,
        ))
    }

    /// Traces out every factor not listed in `keep`; kept factors stay in
    /// their original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(StateError::EmptyKeep);
        }
        let n = self.dims.len();
        let mut keep_sorted: Vec<usize> = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if let Some(&bad) = keep_sorted.iter().find(|&&k| k >= n) {
            return Err(StateError::BadFactor {
                index: bad,
                factors: n,
            });
        }
        let matrix = partial_trace_matrix(&self.matrix, &self.dims, &keep_sorted);
        let dims = keep_sorted.iter().map(|&k| self.dims[k]).collect();
        Ok(Self::from_parts(matrix, dims, self.trace_mass))
    }

    /// Applies `channel` to factor `factor`; the factor is replaced by the
    /// channel's output factors.
    pub fn apply_channel(&self, channel: &KrausChannel, factor: usize) -> Result<Self> {
        self.apply_channel_with_limits(channel, factor, StateLimits::default())
    }

    pub fn apply_channel_with_limits(
        &self,
        channel: &KrausChannel,
        factor: usize,
        limits: StateLimits,
    ) -> Result<Self> {
        let n = self.dims.len();
        if factor >= n {
            return Err(StateError::BadFactor {
                index: factor,
                factors: n,
            });
        }
        if channel.in_dim() != self.dims[factor] {
            return Err(StateError::DimMismatch {
                expected: self.dims[factor],
                found: channel.in_dim(),
            });
        }
        let left: usize = self.dims[..factor].iter().product();
        let right: usize = self.dims[factor + 1..].iter().product();
        let mut dims = self.dims[..factor].to_vec();
        dims.extend_from_slice(channel.out_dims());
        dims.extend_from_slice(&self.dims[factor + 1..]);
        let out_dim = total_dim(&dims, limits.max_dimension)?;
        let mut out = CMatrix::zeros(out_dim, out_dim);
        let il = CMatrix::identity(left);
        let ir = CMatrix::identity(right);
        for k in channel.kraus_ops() {
            let embedded = il.kron(k).kron(&ir);
            let term = embedded.conjugate(&self.matrix);
            out.add_scaled(&term, 1.0);
        }
        Ok(Self::from_parts(out, dims, self.trace_mass))
    }

    /// Expectation tr(M ρ) for an operator on the full space.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        let d = self.dim();
        for r in 0..d {
            for c in 0..d {
                acc += op[(r, c)] * self.matrix[(c, r)];
            }
        }
        acc.re
    }
}

/// Partial trace on a raw matrix. `keep` must be sorted and in range.
pub(crate) fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let n = dims.len();
    let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // stride of each factor in the full index
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |sub: usize, which: &[usize], sub_dims: &[usize]| -> usize {
        let mut rem = sub;
        let mut off = 0;
        for j in (0..which.len()).rev() {
            let digit = rem % sub_dims[j];
            rem /= sub_dims[j];
            off += digit * strides[which[j]];
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offsets(i, keep, &kept_dims)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offsets(i, &traced, &traced_dims)).collect();

    let mut out = CMatrix::zeros(dk, dk);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (c, &co) in kept_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &traced_off {
                acc += m[(ro + t, co + t)];
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// BB84 state: `bit` encoded in basis `basis` (0 = computational, 1 = Hadamard).
#[cfg(test)]
pub(crate) fn qubit_state(bit: usize, basis: usize) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match (basis, bit) {
        (0, 0) => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        (0, _) => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        (_, 0) => [C64::new(h, 0.0), C64::new(h, 0.0)],
        (_, _) => [C64::new(h, 0.0), C64::new(-h, 0.0)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> DensityOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        DensityOperator::pure(&[C64::new(h, 0.0), z, z, C64::new(h, 0.0)], &[2, 2]).unwrap()
    }

    #[test]
    fn maximally_mixed_qubit() {
        let s = DensityOperator::new(CMatrix::identity(2).scale(0.5), &[2]).unwrap();
        assert_eq!(s.trace_mass(), 1.0);
        assert!(
            s.matrix()
                .max_abs_diff(DensityOperator::maximally_mixed(2).matrix())
                < 1e-15
        );
    }

    #[test]
    fn diag_one_zero_is_pure_zero() {
        let s = DensityOperator::new(CMatrix::diag(&[1.0, 0.0]), &[2]).unwrap();
        assert_eq!(s, DensityOperator::basis(&[2], 0).unwrap());
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let err = DensityOperator::new(CMatrix::diag(&[1.01, -0.01]), &[2]).unwrap_err();
        assert!(
            matches!(err, StateError::NotPSD { min_eigenvalue, .. } if (min_eigenvalue + 0.01).abs() < 1e-12)
        );
    }

    #[test]
    fn tiny_negative_eigenvalue_clipped_without_renormalisation() {
        let s = DensityOperator::new(CMatrix::diag(&[1.0 + 5e-11, -5e-11]), &[2]).unwrap();
        assert!(s.eigenvalues().unwrap().iter().all(|&v| v >= 0.0));
        assert!((s.trace() - (1.0 + 5e-11)).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMatrix::diag(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(
            DensityOperator::new(m, &[2]),
            Err(StateError::NotHermitian { .. })
        ));
    }

    #[test]
    fn wrong_trace_rejected() {
        assert!(matches!(
            DensityOperator::new(CMatrix::diag(&[0.5, 0.4]), &[2]),
            Err(StateError::BadTrace { .. })
        ));
    }

    #[test]
    fn tensor_of_mixed_is_mixed() {
        let t = DensityOperator::maximally_mixed(2);
        let tt = t.tensor(&t).unwrap();
        assert_eq!(tt.dims(), &[2, 2]);
        assert!(
            tt.matrix()
                .max_abs_diff(DensityOperator::maximally_mixed(4).matrix())
                < 1e-15
        );
    }

    #[test]
    fn tensor_of_basis_states() {
        let a = DensityOperator::basis(&[2], 0).unwrap();
        let b = DensityOperator::basis(&[2], 1).unwrap();
        assert_eq!(
            a.tensor(&b).unwrap().matrix(),
            DensityOperator::basis(&[2, 2], 1).unwrap().matrix()
        );
    }

    #[test]
    fn tensor_multiplies_trace_mass() {
        let a = DensityOperator::maximally_mixed(2).scaled(0.5);
        let b = DensityOperator::maximally_mixed(3);
        assert_eq!(a.tensor(&b).unwrap().trace_mass(), 0.5);
    }

    #[test]
    fn tensor_respects_dimension_cap() {
        let a = DensityOperator::maximally_mixed(8);
        let err = a
            .tensor_with_limits(&a, StateLimits { max_dimension: 32 })
            .unwrap_err();
        assert_eq!(err, StateError::DimensionCap { dim: 64, cap: 32 });
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let s = DensityOperator::basis(&[2, 2], 0).unwrap();
        assert_eq!(
            s.partial_trace(&[0]).unwrap(),
            DensityOperator::basis(&[2], 0).unwrap()
        );
        let r = bell().partial_trace(&[0]).unwrap();
        assert!(
            r.matrix()
                .max_abs_diff(DensityOperator::maximally_mixed(2).matrix())
                < 1e-15
        );
        assert_eq!(bell().partial_trace(&[]), Err(StateError::EmptyKeep));
    }

    #[test]
    fn partial_trace_keeps_order_of_middle_factors() {
        let a = DensityOperator::basis(&[2], 1).unwrap();
        let b = DensityOperator::maximally_mixed(3);
        let c = DensityOperator::basis(&[2], 0).unwrap();
        let abc = a.tensor(&b).unwrap().tensor(&c).unwrap();
        let ac = abc.partial_trace(&[2, 0]).unwrap();
        assert_eq!(ac.dims(), &[2, 2]);
        assert!(ac.matrix().max_abs_diff(a.tensor(&c).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn identity_and_depolarizing_channels() {
        let plus = DensityOperator::pure(&qubit_state(0, 1), &[2]).unwrap();
        let same = plus.apply_channel(&KrausChannel::identity(2), 0).unwrap();
        assert!(same.matrix().max_abs_diff(plus.matrix()) < 1e-15);
        let mixed = plus
            .apply_channel(&KrausChannel::depolarizing(1.0), 0)
            .unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(DensityOperator::maximally_mixed(2).matrix())
                < 1e-15
        );
    }

    #[test]
    fn stinespring_dilation_matches_direct_action() {
        let ch = KrausChannel::depolarizing(0.37);
        let dil = ch.stinespring();
        let rho = bell();
        let direct = rho.apply_channel(&ch, 1).unwrap();
        let dilated = rho.apply_channel(&dil, 1).unwrap();
        assert_eq!(dilated.dims(), &[2, 2, 4]);
        let reduced = dilated.partial_trace(&[0, 1]).unwrap();
        assert!(reduced.matrix().max_abs_diff(direct.matrix()) < 1e-10);
        assert!((dilated.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn channel_dimension_mismatch() {
        let rho = DensityOperator::maximally_mixed(3);
        assert!(matches!(
            rho.apply_channel(&KrausChannel::identity(2), 0),
            Err(StateError::DimMismatch { .. })
        ));
    }
}
