//! Fixed-length bitstrings, most-significant (first) bit on the left.
//!
//! `Bits` is the currency of every module: messages, keys, ciphertexts, and
//! public broadcasts. Strings up to 128 bits are stored inline, which keeps
//! exhaustive enumeration allocation-free.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// An ordered bitstring. Bit 0 is the leftmost, matching subscript order
/// `k1 k2 k3 k4`.
///
/// Equal-length strings order lexicographically; shorter strings sort first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bits {
    len: usize,
    // bit i lives in words[i / 64] at position 63 - i % 64; trailing bits are zero
    words: SmallVec<[u64; 2]>,
}

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        let mut words = SmallVec::new();
        words.resize(len.div_ceil(WORD), 0);
        Self { len, words }
    }

    /// The low `len` bits of `value`, written most-significant first.
    ///
    /// `Bits::from_u64(0b10, 2)` is `"10"`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        let mut out = Self::zeros(len);
        if len > 0 {
            let masked = if len == WORD { value } else { value & ((1u64 << len) - 1) };
            out.words[0] = masked << (WORD - len);
        }
        out
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bools: I) -> Self {
        let mut out = Self::new();
        for b in bools {
            out.push(b);
        }
        out
    }

    /// Inverse of [`Bits::from_u64`]; `None` beyond 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        match self.len {
            0 => Some(0),
            n if n <= WORD => Some(self.words[0] >> (WORD - n)),
            _ => None,
        }
    }

    /// Every bitstring of length `len` in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = Bits> {
        assert!(len < WORD, "cannot enumerate 2^{len} bitstrings");
        (0..1u64 << len).map(move |v| Bits::from_u64(v, len))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (WORD - 1 - i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn extend_from(&mut self, other: &Bits) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    /// Bits `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Bits {
        assert!(start <= end && end <= self.len, "slice {start}..{end} out of range");
        Bits::from_bools((start..end).map(|i| self.get(i)))
    }

    /// Consecutive blocks of `width` bits; the final block may be shorter.
    pub fn chunks(&self, width: usize) -> impl Iterator<Item = Bits> + '_ {
        assert!(width > 0);
        (0..self.len)
            .step_by(width)
            .map(move |start| self.slice(start, (start + width).min(self.len)))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn checked_xor(&self, other: &Bits) -> Result<Bits> {
        if self.len != other.len {
            return Err(Error::LengthMismatch { left: self.len, right: other.len });
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(Bits { len: self.len, words })
    }
}

impl BitXor for &Bits {
    type Output = Bits;

    /// Panics on length mismatch; use [`Bits::checked_xor`] for untrusted input.
    fn bitxor(self, rhs: &Bits) -> Bits {
        self.checked_xor(rhs).expect("xor of bitstrings with different lengths")
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Bits::new();
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(Error::InvalidBitstring(s.to_string())),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
