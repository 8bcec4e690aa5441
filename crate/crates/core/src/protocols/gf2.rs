//! Bit-level linear algebra over GF(2) and arithmetic in GF(2^b).
//!
//! Bitstrings are `u64` words with position `i` in bit `i`; strings are
//! written position 0 first, so "1000" is the word 1.

use rand::Rng;

use super::{ProtocolError, Result};

/// Parses a string of '0'/'1' characters into (word, length).
pub fn parse_bits(s: &str) -> Result<(u64, usize)> {
    let s = s.trim();
    if s.len() > 64 {
        return Err(ProtocolError::InvalidParams(format!(
            "bitstring longer than 64: {s}"
        )));
    }
    let mut w = 0u64;
    for (i, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => w |= 1 << i,
            _ => {
                return Err(ProtocolError::InvalidParams(format!(
                    "not a bitstring: {s}"
                )))
            }
        }
    }
    Ok((w, s.len()))
}

/// A bitstring of explicit length (at most 64).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    pub word: u64,
    pub len: usize,
}

impl Bits {
    pub fn new(word: u64, len: usize) -> Result<Self> {
        if len > 64 || word & !mask(len) != 0 {
            return Err(ProtocolError::InvalidParams(format!(
                "{word:#x} does not fit in {len} bits"
            )));
        }
        Ok(Self { word, len })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (word, len) = parse_bits(s)?;
        Ok(Self { word, len })
    }

    pub fn zeros(len: usize) -> Self {
        Self { word: 0, len }
    }
}

impl std::fmt::Display for Bits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_bits(self.word, self.len))
    }
}

pub fn format_bits(w: u64, len: usize) -> String {
    (0..len)
        .map(|i| if w >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Dense binary matrix with at most 64 columns, one word per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn new(cols: usize, data: Vec<u64>) -> Result<Self> {
        if cols > 64 || data.iter().any(|r| r & !mask(cols) != 0) {
            return Err(ProtocolError::InvalidParams(format!(
                "rows do not fit in {cols} columns"
            )));
        }
        Ok(Self {
            rows: data.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..rows)
            .map(|i| (0..cols).fold(0u64, |w, j| if f(i, j) { w | 1 << j } else { w }))
            .collect();
        Self { rows, cols, data }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Self {
        let data = (0..rows)
            .map(|_| rng.random::<u64>() & mask(cols))
            .collect();
        Self { rows, cols, data }
    }

    /// Toeplitz matrix T[i][j] = d[i − j + cols − 1] from `rows + cols − 1` diagonal bits.
    pub fn toeplitz(rows: usize, cols: usize, diagonals: u64) -> Self {
        Self::from_fn(rows, cols, |i, j| diagonals >> (i + cols - 1 - j) & 1 == 1)
    }

    pub fn random_toeplitz<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Self {
        let d = rng.random::<u64>() & mask(rows + cols - 1);
        Self::toeplitz(rows, cols, d)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> u64 {
        self.data[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i] >> j & 1 == 1
    }

    /// M·x over GF(2); output bit i is the parity of row i masked by x.
    pub fn mul_vec(&self, x: u64) -> u64 {
        self.data.iter().enumerate().fold(0u64, |acc, (i, r)| {
            acc | (((r & x).count_ones() as u64) & 1) << i
        })
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &BitMatrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(ProtocolError::InvalidParams(format!(
                "cannot stack {} and {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: data.len(),
            cols: self.cols,
            data,
        })
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let bit = 1u64 << col;
            let Some(p) = (rank..rows.len()).find(|&i| rows[i] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank];
            for (i, r) in rows.iter_mut().enumerate() {
                if i != rank && *r & bit != 0 {
                    *r ^= pivot;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn full_row_rank(&self) -> bool {
        self.rank() == self.rows
    }
}

/// Irreducible polynomials for GF(2^b), b = 1..=8, including the x^b term.
const IRREDUCIBLE: [u32; 8] = [
    0b11,
    0b111,
    0b1011,
    0b10011,
    0b100101,
    0b1000011,
    0b10000011,
    0b100011011,
];

/// The field GF(2^b) in polynomial basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2b {
    bits: u32,
    poly: u32,
}

impl Gf2b {
    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=8).contains(&bits) {
            return Err(ProtocolError::InvalidParams(format!(
                "GF(2^{bits}) not supported (1..=8)"
            )));
        }
        Ok(Self {
            bits,
            poly: IRREDUCIBLE[bits as usize - 1],
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> u64 {
        1 << self.bits
    }

    pub fn modulus(&self) -> u32 {
        self.poly
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let (mut a, mut b) = (a as u32, b as u32);
        let mut r = 0u32;
        let top = 1u32 << self.bits;
        while b != 0 {
            if b & 1 == 1 {
                r ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.poly;
            }
        }
        r as u64
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let (mut base, mut acc) = (a, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Σ_i coeffs[i] · x^(i+1), evaluated by Horner's rule.
    pub fn eval_no_constant(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs.iter().rev().fold(0, |acc, &c| self.mul(acc ^ c, x))
    }
}
