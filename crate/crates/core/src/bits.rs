//! Packed bit strings.
//!
//! Character `i` of the text form is bit `i`, so `0111010100` has bits
//! 1, 2, 3, 5 and 7 set.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    blocks: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            blocks: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut out = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                out.set(i, true);
            }
        }
        out
    }

    /// Builds a string of width `len` with the given positions set.
    pub fn from_positions(len: usize, positions: &[usize]) -> Result<Self> {
        let mut out = Self::zeros(len);
        for &p in positions {
            if p >= len {
                return Err(Error::Invalid(format!("bit position {p} out of range for width {len}")));
            }
            out.set(p, true);
        }
        Ok(out)
    }

    /// Little-endian decode of a basis index: bit `i` is `(index >> i) & 1`.
    pub fn from_index(index: usize, len: usize) -> Self {
        let mut out = Self::zeros(len);
        for i in 0..len.min(usize::BITS as usize) {
            if (index >> i) & 1 == 1 {
                out.set(i, true);
            }
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.blocks[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for width {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.blocks[i / 64] |= mask;
        } else {
            self.blocks[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Parity of `popcount(self AND other)`: true when odd.
    #[inline]
    pub fn and_parity(&self, other: &BitString) -> bool {
        let mut acc = 0u64;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        BitString {
            len: self.len,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a ^ b).collect(),
        }
    }

    /// Little-endian basis index. Only meaningful for widths below 64.
    pub fn to_index(&self) -> usize {
        debug_assert!(self.len < 64);
        self.blocks.first().copied().unwrap_or(0) as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.iter().map(|b| if b { 1.0 } else { 0.0 }).collect()
    }
}

impl Ord for BitString {
    /// Lexicographic order of the text form (position 0 is most significant).
    fn cmp(&self, other: &Self) -> Ordering {
        for i in 0..self.len.min(other.len) {
            match (self.get(i), other.get(i)) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut out = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                _ => return Err(Error::Invalid(format!("`{s}` is not a 0/1 string"))),
            }
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
