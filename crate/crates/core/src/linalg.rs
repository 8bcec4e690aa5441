//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian input.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::tolerance::{JACOBI_MAX_SWEEPS, JACOBI_OFFDIAG_TARGET};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|v⟩⟨v|` for a column vector given as a slice.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    /// Projector onto the computational basis state `index` in dimension `dim`.
    pub fn basis_projector(dim: usize, index: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m[(index, index)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`, in place.
    pub fn add_scaled(&mut self, other: &CMatrix, s: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (r1, c1, r2, c2) = (self.rows, self.cols, other.rows, other.cols);
        let mut out = CMatrix::zeros(r1 * r2, c1 * c2);
        for i in 0..r1 {
            for j in 0..c1 {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..r2 {
                    let row = (i * r2 + k) * out.cols + j * c2;
                    for l in 0..c2 {
                        out.data[row + l] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |M - M†|.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†) / 2.
    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies `self * rho * self†` without forming the adjoint explicitly.
    pub fn conjugate(&self, rho: &CMatrix) -> CMatrix {
        &(self * rho) * &self.adjoint()
    }

    /// Sum of |λ| for a Hermitian matrix.
    pub fn trace_norm_hermitian(&self) -> Result<f64, EigError> {
        match self.rows {
            0 => Ok(0.0),
            1 => Ok(self[(0, 0)].re.abs()),
            2 => {
                // closed form for 2x2 Hermitian
                let a = self[(0, 0)].re;
                let d = self[(1, 1)].re;
                let b = self[(0, 1)];
                let mean = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
                Ok((mean + rad).abs() + (mean - rad).abs())
            }
            _ => Ok(hermitian_eigenvalues(self)?.iter().map(|l| l.abs()).sum()),
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})"
    )]
    NoConvergence { sweeps: usize, residual: f64 },
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        (0..self.vectors.rows())
            .map(|r| self.vectors[(r, i)])
            .collect()
    }

    /// V Λ V†.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for r in 0..n {
            for c in 0..n {
                scaled[(r, c)] *= self.values[c];
            }
        }
        &scaled * &self.vectors.adjoint()
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi diagonalisation. Only the Hermitian part of `m` is used.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig, EigError> {
    jacobi(m, true).map(|(values, vectors)| HermitianEig {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>, EigError> {
    jacobi(m, false).map(|(v, _)| v)
}

fn jacobi(m: &CMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>), EigError> {
    if !m.is_square() {
        return Err(EigError::NotSquare(m.rows(), m.cols()));
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = want_vectors.then(|| CMatrix::identity(n));
    let scale = a.frobenius().max(1.0);
    let target = JACOBI_OFFDIAG_TARGET * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(EigError::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let gabs = g.norm();
                if gabs <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = g / gabs;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * gabs);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = [[c, s e^{iφ}], [-s e^{-iφ}, c]] on the (p, q) plane
                let s_ph = phase * s;
                let s_ph_conj = phase.conj() * s;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - s_ph_conj * akq;
                    a[(k, q)] = s_ph * akp + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - s_ph * aqk;
                    a[(q, k)] = s_ph_conj * apk + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - s_ph_conj * vkq;
                        v[(k, q)] = s_ph * vkp + vkq * c;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.map(|v| CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]));
    Ok((values, vectors))
}

/// Orthonormalises the columns of `m` (modified Gram-Schmidt). Columns that
/// become numerically dependent are left as zero.
pub fn orthonormalize_columns(m: &CMatrix) -> CMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q = m.clone();
    for j in 0..cols {
        for i in 0..j {
            let mut dot = ZERO;
            for r in 0..rows {
                dot += q[(r, i)].conj() * q[(r, j)];
            }
            for r in 0..rows {
                let qi = q[(r, i)];
                q[(r, j)] -= dot * qi;
            }
        }
        let norm: f64 = (0..rows).map(|r| q[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..rows {
            q[(r, j)] = if norm > 1e-300 {
                q[(r, j)] / norm
            } else {
                ZERO
            };
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMatrix {
        CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn diagonal_input_sorted() {
        let e = hermitian_eig(&CMatrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
    }

    #[test]
    fn pauli_x_eigenpairs() {
        let x = pauli_x();
        let e = hermitian_eig(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        assert!(e.reconstruct().max_abs_diff(&x) < 1e-12);
        // |−⟩ has opposite-sign components
        let minus = e.vector(0);
        assert!((minus[0] + minus[1]).norm() < 1e-12);
        let plus = e.vector(1);
        assert!((plus[0] - plus[1]).norm() < 1e-12);
    }

    #[test]
    fn complex_hermitian_reconstruction() {
        let m = CMatrix::from_vec(
            3,
            3,
            vec![
                C64::new(2.0, 0.0),
                C64::new(0.5, -1.0),
                C64::new(0.0, 0.3),
                C64::new(0.5, 1.0),
                C64::new(-1.0, 0.0),
                C64::new(0.2, 0.2),
                C64::new(0.0, -0.3),
                C64::new(0.2, -0.2),
                C64::new(0.7, 0.0),
            ],
        );
        let e = hermitian_eig(&m).unwrap();
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-10);
        let vv = &e.vectors.adjoint() * &e.vectors;
        assert!(vv.max_abs_diff(&CMatrix::identity(3)) < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn two_by_two_trace_norm_matches_eig() {
        let m = CMatrix::from_vec(
            2,
            2,
            vec![
                C64::new(0.3, 0.0),
                C64::new(0.1, 0.4),
                C64::new(0.1, -0.4),
                C64::new(-0.6, 0.0),
            ],
        );
        let direct: f64 = hermitian_eigenvalues(&m)
            .unwrap()
            .iter()
            .map(|x| x.abs())
            .sum();
        assert!((m.trace_norm_hermitian().unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn kron_shapes() {
        let a = CMatrix::identity(2);
        let b = CMatrix::zeros(3, 1);
        let k = a.kron(&b);
        assert_eq!((k.rows(), k.cols()), (6, 2));
    }

    #[test]
    fn not_square_rejected() {
        assert!(matches!(
            hermitian_eig(&CMatrix::zeros(2, 3)),
            Err(EigError::NotSquare(2, 3))
        ));
    }
}
