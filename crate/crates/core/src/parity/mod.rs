//! Parity words, their hard and relaxed features, and classical word
//! ranking.

mod features;
mod ranking;

pub use features::{
    empirical_parity_features, enumerate_words, hard_parity, sigmoid, soft_parity, soft_parity_grad,
    threshold_words, SoftParityGrad, DEFAULT_ENUMERATION_CAP,
};
pub use ranking::{bonferroni_select, sample_word_pool, variance_rank, WordScore};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// A parity word `s`: the feature it defines is `(-1)^(s . b)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParityWord(BitString);

impl ParityWord {
    pub fn new(bits: BitString) -> Self {
        ParityWord(bits)
    }

    pub fn empty(n: usize) -> Self {
        ParityWord(BitString::zeros(n))
    }

    pub fn from_positions(n: usize, positions: &[usize]) -> Result<Self> {
        BitString::from_positions(n, positions).map(ParityWord)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Hamming weight.
    pub fn order(&self) -> usize {
        self.0.count_ones()
    }

    /// `+1` or `-1`. Widths must already agree.
    #[inline]
    pub fn eval(&self, b: &BitString) -> f64 {
        if self.0.and_parity(b) {
            -1.0
        } else {
            1.0
        }
    }

    /// Sort key used by every ranking: lower order first, then lexicographic.
    pub fn rank_key(&self) -> (usize, &BitString) {
        (self.order(), &self.0)
    }
}

impl fmt::Display for ParityWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for ParityWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParityWord({})", self.0)
    }
}

impl FromStr for ParityWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(ParityWord)
    }
}

/// Relaxed participation logits for a pool of words. Row `k` is the logit
/// vector of word `k`; participation of bit `i` is `sigmoid(tau * l[k][i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordLogits {
    rows: Vec<Vec<f64>>,
    pub temperature: f64,
}

impl WordLogits {
    pub fn new(rows: Vec<Vec<f64>>, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Invalid(format!("temperature must be positive, got {temperature}")));
        }
        if let Some(first) = rows.first() {
            let n = first.len();
            if let Some(r) = rows.iter().find(|r| r.len() != n) {
                return Err(Error::dim(n, r.len()));
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite logit".into()));
        }
        Ok(WordLogits { rows, temperature })
    }

    pub fn zeros(k: usize, n: usize) -> Self {
        WordLogits {
            rows: vec![vec![0.0; n]; k],
            temperature: 1.0,
        }
    }

    /// Logits at `+c` on the word's bits and `-c` elsewhere.
    pub fn from_words(words: &[ParityWord], c: f64) -> Self {
        WordLogits {
            rows: words
                .iter()
                .map(|w| w.bits().iter().map(|b| if b { c } else { -c }).collect())
                .collect(),
            temperature: 1.0,
        }
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.rows
    }

    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let n = self.n();
        for (row, chunk) in self.rows.iter_mut().zip(flat.chunks(n.max(1))) {
            row.copy_from_slice(chunk);
        }
    }

    /// `sigmoid(tau * l)` for every entry.
    pub fn participation(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&l| sigmoid(self.temperature * l)).collect())
            .collect()
    }
}
