//! Bit-packed vectors over GF(2) and a small incremental span solver.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Dense GF(2) vector stored in 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.flip(i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in GF(2) addition");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in GF(2) product");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    /// Parity of the elementwise product.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in GF(2) dot product");
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones();
        }
        acc & 1 == 1
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter_ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[{}]{{", self.len)?;
        let ones: Vec<usize> = self.iter_ones().collect();
        write!(f, "{ones:?}}}")
    }
}

impl std::ops::BitXor for &BitVector {
    type Output = BitVector;
    fn bitxor(self, rhs: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

impl std::ops::BitXorAssign<&BitVector> for BitVector {
    fn bitxor_assign(&mut self, rhs: &BitVector) {
        self.xor_assign(rhs);
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.index * 64 + bit);
            }
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
    }
}

/// Row-echelon basis of a subspace of GF(2)^n, built by inserting vectors one by one.
///
/// Every stored vector has a distinct pivot (its lowest set bit) and is reduced
/// against all earlier pivots, so membership tests are a single sweep.
#[derive(Clone, Debug)]
pub struct SpanBasis {
    len: usize,
    rows: Vec<BitVector>,
    pivot_row: Vec<Option<usize>>,
}

impl SpanBasis {
    pub fn new(len: usize) -> Self {
        SpanBasis {
            len,
            rows: Vec::new(),
            pivot_row: vec![None; len],
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Clears every pivot bit of `v`, scanning upward; rows only touch bits at or above their pivot.
    fn reduce(&self, v: &mut BitVector) {
        let mut pos = 0;
        while pos < self.len {
            let w = v.words[pos >> 6] >> (pos & 63);
            if w == 0 {
                pos = (pos | 63) + 1;
                continue;
            }
            pos += w.trailing_zeros() as usize;
            if pos >= self.len {
                break;
            }
            if let Some(r) = self.pivot_row[pos] {
                v.xor_assign(&self.rows[r]);
            }
            pos += 1;
        }
    }

    /// Inserts `v`; returns true if it increased the rank.
    pub fn insert(&mut self, mut v: BitVector) -> bool {
        assert_eq!(v.len(), self.len);
        self.reduce(&mut v);
        match v.first_one() {
            None => false,
            Some(p) => {
                self.pivot_row[p] = Some(self.rows.len());
                self.rows.push(v);
                true
            }
        }
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        let mut w = v.clone();
        self.reduce(&mut w);
        w.is_zero()
    }
}
