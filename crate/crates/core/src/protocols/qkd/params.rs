use crate::qstate::{derive_seed, seeded_rng};

use super::super::gf2::BitMatrix;
use super::super::{ProtocolError, Result};

/// Fixed public seed for the syndrome and privacy-amplification matrices.
pub const DEFAULT_PA_SEED: u64 = 0x5eed_0f_b884;

const MAX_QUBITS: usize = 10;
const MATRIX_ATTEMPTS: u64 = 1000;

/// Toy BB84 parameters. Bob measures every position in Alice's basis, so all
/// `n` positions are sifted; `t` of them are sampled and the remaining
/// `m = n − t` form the raw key.
#[derive(Debug, Clone, PartialEq)]
pub struct QkdParams {
    pub n: usize,
    pub t: usize,
    pub q_tol: f64,
    pub h_rows: usize,
    pub out_len: usize,
    pub pa_seed: u64,
    h: BitMatrix,
    pa: BitMatrix,
}

impl QkdParams {
    /// Parameters with H (random) and T (random Toeplitz) drawn from
    /// `pa_seed`, redrawn until the stacked matrix has full row rank.
    pub fn new(
        n: usize,
        t: usize,
        q_tol: f64,
        h_rows: usize,
        out_len: usize,
        pa_seed: u64,
    ) -> Result<Self> {
        validate(n, t, q_tol, h_rows, out_len)?;
        let m = n - t;
        for attempt in 0..MATRIX_ATTEMPTS {
            let mut rng = seeded_rng(derive_seed(pa_seed, attempt));
            let h = BitMatrix::random(&mut rng, h_rows, m);
            let pa = BitMatrix::random_toeplitz(&mut rng, out_len, m);
            if h.stack(&pa)?.full_row_rank() {
                return Ok(Self {
                    n,
                    t,
                    q_tol,
                    h_rows,
                    out_len,
                    pa_seed,
                    h,
                    pa,
                });
            }
        }
        Err(ProtocolError::InvalidParams(
            "no jointly full-rank (H, T) found".into(),
        ))
    }

    pub fn with_default_seed(
        n: usize,
        t: usize,
        q_tol: f64,
        h_rows: usize,
        out_len: usize,
    ) -> Result<Self> {
        Self::new(n, t, q_tol, h_rows, out_len, DEFAULT_PA_SEED)
    }

    /// Explicit matrices; they must be jointly full rank.
    pub fn with_matrices(
        n: usize,
        t: usize,
        q_tol: f64,
        h: BitMatrix,
        pa: BitMatrix,
    ) -> Result<Self> {
        validate(n, t, q_tol, h.rows(), pa.rows())?;
        let m = n - t;
        if h.cols() != m || pa.cols() != m {
            return Err(ProtocolError::InvalidParams(format!(
                "matrices must have {m} columns"
            )));
        }
        if !h.stack(&pa)?.full_row_rank() {
            return Err(ProtocolError::InvalidParams(
                "rows of H and T are not jointly independent".into(),
            ));
        }
        Ok(Self {
            n,
            t,
            q_tol,
            h_rows: h.rows(),
            out_len: pa.rows(),
            pa_seed: 0,
            h,
            pa,
        })
    }

    pub fn with_q_tol(&self, q_tol: f64) -> Result<Self> {
        validate(self.n, self.t, q_tol, self.h_rows, self.out_len)?;
        Ok(Self {
            q_tol,
            ..self.clone()
        })
    }

    /// Raw key length n − t.
    pub fn m(&self) -> usize {
        self.n - self.t
    }

    pub fn h(&self) -> &BitMatrix {
        &self.h
    }

    pub fn pa(&self) -> &BitMatrix {
        &self.pa
    }

    /// Abort iff errors / t > q_tol; ties pass and t = 0 never aborts.
    pub fn aborts(&self, errors: usize) -> bool {
        self.t > 0 && errors as f64 > self.q_tol * self.t as f64 + 1e-12
    }
}

fn validate(n: usize, t: usize, q_tol: f64, h_rows: usize, out_len: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(ProtocolError::InvalidParams(format!(
            "n_qubits = {n} outside 1..={MAX_QUBITS}"
        )));
    }
    if t >= n {
        return Err(ProtocolError::InvalidParams(format!(
            "sample size {t} must be below n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&q_tol) {
        return Err(ProtocolError::InvalidParams(format!(
            "q_tol = {q_tol} outside [0, 1]"
        )));
    }
    if out_len == 0 {
        return Err(ProtocolError::InvalidParams(
            "out_len must be at least 1".into(),
        ));
    }
    if h_rows + out_len > n - t {
        return Err(ProtocolError::InvalidParams(format!(
            "h_rows + out_len = {} exceeds raw key length {}",
            h_rows + out_len,
            n - t
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_are_jointly_full_rank() {
        for seed in 0..50 {
            let p = QkdParams::new(6, 2, 0.25, 2, 2, seed).unwrap();
            assert_eq!(p.h().stack(p.pa()).unwrap().rank(), 4);
            assert_eq!(p.m(), 4);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(QkdParams::with_default_seed(4, 4, 0.1, 0, 1).is_err());
        assert!(QkdParams::with_default_seed(4, 2, 1.5, 1, 1).is_err());
        assert!(QkdParams::with_default_seed(4, 2, 0.1, 1, 2).is_err());
        assert!(QkdParams::with_default_seed(11, 2, 0.1, 1, 1).is_err());
        let h = BitMatrix::new(2, vec![0b11]).unwrap();
        assert!(QkdParams::with_matrices(4, 2, 0.0, h.clone(), h).is_err());
    }

    #[test]
    fn threshold_ties_pass() {
        let p = QkdParams::with_default_seed(4, 2, 0.5, 1, 1).unwrap();
        assert!(!p.aborts(1));
        assert!(p.aborts(2));
        let p = p.with_q_tol(0.0).unwrap();
        assert!(p.aborts(1) && !p.aborts(0));
    }
}
