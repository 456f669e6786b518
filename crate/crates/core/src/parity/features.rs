use std::f64::consts::PI;

use rayon::prelude::*;

use super::{ParityWord, WordLogits};
use crate::bits::BitString;
use crate::datasets::LabeledBitDataset;
use crate::error::{Error, Result};

/// Default limit on the number of words [`enumerate_words`] will emit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn hard_parity(word: &ParityWord, b: &BitString) -> Result<f64> {
    if word.len() != b.len() {
        return Err(Error::dim(word.len(), b.len()));
    }
    Ok(word.eval(b))
}

/// `prod_i cos(pi * sigmoid(tau * l_i) * b_i)`. `b` may be fractional.
pub fn soft_parity(logit_row: &[f64], tau: f64, b: &[f64]) -> Result<f64> {
    if logit_row.len() != b.len() {
        return Err(Error::dim(logit_row.len(), b.len()));
    }
    if !(tau > 0.0) {
        return Err(Error::Invalid(format!("temperature must be positive, got {tau}")));
    }
    Ok(logit_row
        .iter()
        .zip(b)
        .map(|(&l, &bi)| if bi == 0.0 { 1.0 } else { (PI * sigmoid(tau * l) * bi).cos() })
        .product())
}

/// Value of the relaxed feature and its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftParityGrad {
    pub value: f64,
    /// d value / d l_i
    pub d_logits: Vec<f64>,
    /// d value / d b_i
    pub d_input: Vec<f64>,
}

/// Relaxed feature with analytic gradients. Leave-one-out products come
/// from prefix/suffix sweeps, so zero factors are handled exactly.
pub fn soft_parity_grad(logit_row: &[f64], tau: f64, b: &[f64]) -> SoftParityGrad {
    let n = logit_row.len();
    debug_assert_eq!(n, b.len());
    let mut factor = vec![1.0; n];
    let mut d_factor_l = vec![0.0; n];
    let mut d_factor_b = vec![0.0; n];
    for i in 0..n {
        let s = sigmoid(tau * logit_row[i]);
        let arg = PI * s * b[i];
        let (sin, cos) = arg.sin_cos();
        factor[i] = cos;
        d_factor_l[i] = -sin * PI * b[i] * tau * s * (1.0 - s);
        d_factor_b[i] = -sin * PI * s;
    }
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * factor[i];
    }
    let mut suffix = 1.0;
    let mut d_logits = vec![0.0; n];
    let mut d_input = vec![0.0; n];
    for i in (0..n).rev() {
        let others = prefix[i] * suffix;
        d_logits[i] = others * d_factor_l[i];
        d_input[i] = others * d_factor_b[i];
        suffix *= factor[i];
    }
    SoftParityGrad {
        value: prefix[n],
        d_logits,
        d_input,
    }
}

/// Bit `i` of word `k` participates iff `l[k][i] > 0` (sigmoid strictly
/// above one half).
pub fn threshold_words(logits: &WordLogits) -> Vec<ParityWord> {
    logits
        .rows()
        .iter()
        .map(|row| {
            let mut b = BitString::zeros(row.len());
            for (i, &l) in row.iter().enumerate() {
                if l > 0.0 {
                    b.set(i, true);
                }
            }
            ParityWord::new(b)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All nonzero words of order at most `max_order`, sorted by order and then
/// lexicographically.
pub fn enumerate_words(n: usize, max_order: usize, cap: u128) -> Result<Vec<ParityWord>> {
    let max_order = max_order.min(n);
    let count: u128 = (1..=max_order).map(|k| binomial(n, k)).sum();
    if count > cap {
        return Err(Error::Capacity {
            what: "parity word enumeration",
            count,
            limit: cap,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    for order in 1..=max_order {
        let start = out.len();
        let mut combo: Vec<usize> = (0..order).collect();
        loop {
            out.push(ParityWord::from_positions(n, &combo)?);
            // next combination in colex order
            let mut i = order;
            while i > 0 && combo[i - 1] == n - order + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..order {
                combo[j] = combo[j - 1] + 1;
            }
        }
        out[start..].sort();
    }
    Ok(out)
}

/// `features[j][k] = (-1)^(s_k . b_j)`.
pub fn empirical_parity_features(dataset: &LabeledBitDataset, words: &[ParityWord]) -> Result<Vec<Vec<f64>>> {
    if let Some(w) = words.iter().find(|w| w.len() != dataset.n()) {
        return Err(Error::dim(dataset.n(), w.len()));
    }
    Ok(dataset
        .samples()
        .par_iter()
        .map(|b| words.iter().map(|w| w.eval(b)).collect())
        .collect())
}
