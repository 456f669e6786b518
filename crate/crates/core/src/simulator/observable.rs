use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::{Error, Result};
use crate::parity::{sigmoid, ParityWord};

/// How a relaxed participation `p = sigmoid(tau * l)` becomes the bit-1
/// diagonal entry of a soft Pauli-Z factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoftForm {
    /// `cos(pi p)`: Born-averaging gives exactly the relaxed parity feature.
    #[default]
    Cosine,
    /// `1 - 2p`.
    Linear,
}

impl SoftForm {
    pub fn entry(self, logit: f64, tau: f64) -> f64 {
        let p = sigmoid(tau * logit);
        match self {
            SoftForm::Cosine => (PI * p).cos(),
            SoftForm::Linear => 1.0 - 2.0 * p,
        }
    }

    /// d entry / d logit.
    pub fn entry_grad(self, logit: f64, tau: f64) -> f64 {
        let p = sigmoid(tau * logit);
        let dp = tau * p * (1.0 - p);
        match self {
            SoftForm::Cosine => -PI * (PI * p).sin() * dp,
            SoftForm::Linear => -2.0 * dp,
        }
    }
}

/// Tensor-product diagonal observable: qubit `q` contributes `pairs[q][0]`
/// on bit 0 and `pairs[q][1]` on bit 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    pairs: Vec<[f64; 2]>,
}

impl DiagonalObservable {
    pub fn new(pairs: Vec<[f64; 2]>) -> Result<Self> {
        if pairs.iter().flatten().any(|v| !(v.abs() <= 1.0)) {
            return Err(Error::Invalid("diagonal entries must have magnitude at most 1".into()));
        }
        Ok(DiagonalObservable { pairs })
    }

    /// `Z^s`: `(1, -1)` on participating qubits, `(1, 1)` elsewhere.
    pub fn hard(word: &ParityWord) -> Self {
        DiagonalObservable {
            pairs: word.bits().iter().map(|b| if b { [1.0, -1.0] } else { [1.0, 1.0] }).collect(),
        }
    }

    pub fn soft(logit_row: &[f64], tau: f64, form: SoftForm) -> Self {
        DiagonalObservable {
            pairs: logit_row.iter().map(|&l| [1.0, form.entry(l, tau)]).collect(),
        }
    }

    pub fn single_z(n: usize, qubit: usize) -> Self {
        let mut pairs = vec![[1.0, 1.0]; n];
        pairs[qubit] = [1.0, -1.0];
        DiagonalObservable { pairs }
    }

    pub fn n_qubits(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[[f64; 2]] {
        &self.pairs
    }

    pub fn expect(&self, state: &StateVector) -> Result<f64> {
        if state.n_qubits() != self.pairs.len() {
            return Err(Error::dim(self.pairs.len(), state.n_qubits()));
        }
        Ok(self.expect_probs(&state.born_probabilities()))
    }

    /// `sum_b probs[b] prod_q pairs[q][b_q]`, contracting one qubit at a
    /// time from the most significant end.
    pub fn expect_probs(&self, probs: &[f64]) -> f64 {
        debug_assert_eq!(probs.len(), 1 << self.pairs.len());
        let mut buf = probs.to_vec();
        let mut len = buf.len();
        for q in (0..self.pairs.len()).rev() {
            let half = len / 2;
            let [e0, e1] = self.pairs[q];
            for i in 0..half {
                buf[i] = buf[i] * e0 + buf[i + half] * e1;
            }
            len = half;
        }
        buf[0]
    }

    /// Full diagonal, indexed like the state vector.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.pairs.len()];
        self.accumulate_diagonal(1.0, &mut out);
        out
    }

    /// `out[b] += weight * prod_q pairs[q][b_q]`.
    pub fn accumulate_diagonal(&self, weight: f64, out: &mut [f64]) {
        let mut diag = Vec::with_capacity(out.len());
        diag.push(weight);
        for &[e0, e1] in &self.pairs {
            let len = diag.len();
            for i in 0..len {
                let v = diag[i];
                diag[i] = v * e0;
                diag.push(v * e1);
            }
        }
        for (o, d) in out.iter_mut().zip(diag) {
            *o += d;
        }
    }

    /// Expectation plus, for each qubit `q`, the contraction with every
    /// other qubit weighted and qubit `q` pinned to 0 and to 1. The
    /// derivative of the expectation with respect to `pairs[q][v]` is
    /// `pinned[q][v]`.
    pub fn expect_with_pinned(&self, probs: &[f64]) -> (f64, Vec<[f64; 2]>) {
        let n = self.pairs.len();
        let mut pinned = vec![[0.0; 2]; n];
        if n == 0 {
            return (probs[0], pinned);
        }
        leave_one_out(probs, 0, n, &self.pairs, &mut pinned);
        let value = pinned[0][0] * self.pairs[0][0] + pinned[0][1] * self.pairs[0][1];
        (value, pinned)
    }
}

/// Product weights over qubits `lo..hi`, indexed by the local bit pattern.
fn product_weights(pairs: &[[f64; 2]], lo: usize, hi: usize) -> Vec<f64> {
    let mut w = vec![1.0];
    for &[e0, e1] in &pairs[lo..hi] {
        let len = w.len();
        for i in 0..len {
            let v = w[i];
            w[i] = v * e0;
            w.push(v * e1);
        }
    }
    w
}

/// `t` spans qubits `lo..hi`. Splits the range, contracts each half away
/// and recurses on the other, so the total cost stays linear in `t.len()`
/// per level.
fn leave_one_out(t: &[f64], lo: usize, hi: usize, pairs: &[[f64; 2]], out: &mut [[f64; 2]]) {
    if hi - lo == 1 {
        out[lo] = [t[0], t[1]];
        return;
    }
    let mid = lo + (hi - lo) / 2;
    let low_len = 1usize << (mid - lo);
    let high_len = 1usize << (hi - mid);

    let w_high = product_weights(pairs, mid, hi);
    let mut t_low = vec![0.0; low_len];
    for (c, &w) in w_high.iter().enumerate() {
        let block = &t[c * low_len..(c + 1) * low_len];
        for (acc, v) in t_low.iter_mut().zip(block) {
            *acc += v * w;
        }
    }
    leave_one_out(&t_low, lo, mid, pairs, out);

    let w_low = product_weights(pairs, lo, mid);
    let t_high: Vec<f64> = (0..high_len)
        .map(|c| {
            t[c * low_len..(c + 1) * low_len]
                .iter()
                .zip(&w_low)
                .map(|(v, w)| v * w)
                .sum()
        })
        .collect();
    leave_one_out(&t_high, mid, hi, pairs, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::parity::soft_parity;
    use crate::simulator::Ansatz;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let ansatz = Ansatz::new(n, 2);
        let theta: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x: Vec<f64> = (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut s = StateVector::amplitude_encode(&x, n).unwrap();
        ansatz.apply(&mut s, &theta).unwrap();
        s
    }

    #[test]
    fn hard_word_on_basis_state() {
        let w: ParityWord = "0110".parse().unwrap();
        for idx in 0..16 {
            let b = BitString::from_index(idx, 4);
            let s = StateVector::basis_state(&b).unwrap();
            assert_eq!(DiagonalObservable::hard(&w).expect(&s).unwrap(), w.eval(&b));
        }
    }

    #[test]
    fn uniform_superposition_is_balanced() {
        let u = StateVector::amplitude_encode(&[1.0; 16], 4).unwrap();
        for idx in 1..16 {
            let w = ParityWord::new(BitString::from_index(idx, 4));
            assert!(DiagonalObservable::hard(&w).expect(&u).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn non_participating_soft_observable_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = random_state(3, &mut rng);
        let obs = DiagonalObservable::soft(&[-1e6; 3], 1.0, SoftForm::Cosine);
        assert!((obs.expect(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn soft_observable_equals_born_average_of_soft_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            for _ in 0..20 {
                let s = random_state(n, &mut rng);
                let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let tau = rng.random_range(0.5..3.0);
                let obs = DiagonalObservable::soft(&logits, tau, SoftForm::Cosine);
                let brute: f64 = s
                    .born_probabilities()
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * soft_parity(&logits, tau, &BitString::from_index(i, n).to_f64()).unwrap())
                    .sum();
                assert!((obs.expect(&s).unwrap() - brute).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_matches_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_state(5, &mut rng);
        let obs = DiagonalObservable::soft(&[0.3, -2.0, 1.0, 0.0, 4.0], 1.3, SoftForm::Linear);
        let probs = s.born_probabilities();
        let direct: f64 = probs.iter().zip(obs.diagonal()).map(|(p, d)| p * d).sum();
        assert!((direct - obs.expect_probs(&probs)).abs() < 1e-12);
    }

    #[test]
    fn pinned_contractions_are_partial_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=7 {
            let s = random_state(n, &mut rng);
            let probs = s.born_probabilities();
            let pairs: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let obs = DiagonalObservable::new(pairs.clone()).unwrap();
            let (value, pinned) = obs.expect_with_pinned(&probs);
            assert!((value - obs.expect_probs(&probs)).abs() < 1e-12);
            for q in 0..n {
                for v in 0..2 {
                    let h = 1e-6;
                    let mut up = pairs.clone();
                    up[q][v] += h;
                    let mut dn = pairs.clone();
                    dn[q][v] -= h;
                    let fd = (DiagonalObservable { pairs: up }.expect_probs(&probs)
                        - DiagonalObservable { pairs: dn }.expect_probs(&probs))
                        / (2.0 * h);
                    assert!((fd - pinned[q][v]).abs() < 1e-8, "n={n} q={q} v={v}");
                }
            }
        }
    }

    #[test]
    fn rejects_large_entries() {
        assert!(DiagonalObservable::new(vec![[1.0, 1.5]]).is_err());
    }

    #[test]
    fn soft_entry_gradients_match_finite_differences() {
        for form in [SoftForm::Cosine, SoftForm::Linear] {
            for &(l, tau) in &[(0.3, 1.0), (-1.4, 2.5), (2.0, 0.7)] {
                let h = 1e-6;
                let fd = (form.entry(l + h, tau) - form.entry(l - h, tau)) / (2.0 * h);
                assert!((fd - form.entry_grad(l, tau)).abs() < 1e-8);
            }
        }
    }
}
