//! Dense state-vector simulation.
//!
//! Amplitude index `sum_i b_i 2^i` holds basis state `|b>`, so qubit `i` is
//! bit `i` of the index. Gate kernels sweep amplitude pairs that differ only
//! in the target bit.

mod ansatz;
mod gradient;
mod observable;

pub use ansatz::{Ansatz, Gate};
pub use gradient::{adjoint_grad, param_shift_grad, param_shift_vjp, GradientMethod};
pub use observable::{DiagonalObservable, SoftForm};

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::Capacity {
            what: "state vector qubits",
            count: n as u128,
            limit: MAX_QUBITS as u128,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn basis_state(b: &BitString) -> Result<Self> {
        let mut s = Self::zero(b.len())?;
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[b.to_index()] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Zero-pads `x` to `2^n` entries and normalizes.
    pub fn amplitude_encode(x: &[f64], n: usize) -> Result<Self> {
        check_capacity(n)?;
        let dim = 1usize << n;
        if x.len() > dim {
            return Err(Error::dim(dim, x.len()));
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Encoding("cannot amplitude-encode a zero or non-finite vector".into()));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for (a, v) in amps.iter_mut().zip(x) {
            *a = Complex64::new(v / norm, 0.0);
        }
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(Error::Invalid("amplitude count must be a power of two".into()));
        }
        check_capacity(n)?;
        Ok(StateVector { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Applies a 2x2 unitary `[[m00, m01], [m10, m11]]` to `target`.
    pub fn apply_single(&mut self, target: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << target;
        for chunk in self.amps.chunks_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    /// `exp(-i theta Y / 2)`.
    pub fn apply_ry(&mut self, target: usize, theta: f64) {
        let (s, c) = (0.5 * theta).sin_cos();
        let stride = 1usize << target;
        for chunk in self.amps.chunks_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x * c - y * s;
                *b = x * s + y * c;
            }
        }
    }

    /// `exp(-i theta Z / 2)`.
    pub fn apply_rz(&mut self, target: usize, theta: f64) {
        let phase0 = Complex64::from_polar(1.0, -0.5 * theta);
        let phase1 = phase0.conj();
        let stride = 1usize << target;
        for chunk in self.amps.chunks_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.iter_mut().for_each(|a| *a *= phase0);
            hi.iter_mut().for_each(|b| *b *= phase1);
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert_ne!(control, target, "CNOT needs distinct qubits");
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
    }

    pub fn apply_gate(&mut self, gate: Gate, theta: &[f64]) {
        match gate {
            Gate::Ry { qubit, param } => self.apply_ry(qubit, theta[param]),
            Gate::Rz { qubit, param } => self.apply_rz(qubit, theta[param]),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    pub fn apply_gate_inverse(&mut self, gate: Gate, theta: &[f64]) {
        match gate {
            Gate::Ry { qubit, param } => self.apply_ry(qubit, -theta[param]),
            Gate::Rz { qubit, param } => self.apply_rz(qubit, -theta[param]),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// `|amplitude|^2` per basis index.
    pub fn born_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// Inverse-CDF sampling of `m` basis strings.
    pub fn sample_bitstrings(&self, m: usize, seed: u64) -> Vec<BitString> {
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for p in self.born_probabilities() {
            acc += p;
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                BitString::from_index(idx, self.n)
            })
            .collect()
    }

    /// `index real imag` per line, for cross-checking against other
    /// simulators.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            let _ = writeln!(out, "{i} {:e} {:e}", a.re, a.im);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_state_index() {
        let s = StateVector::basis_state(&"101".parse().unwrap()).unwrap();
        assert_eq!(s.amplitudes()[5], c(1.0, 0.0));
        assert_eq!(s.norm_sqr(), 1.0);
        let z = StateVector::basis_state(&"000".parse().unwrap()).unwrap();
        assert_eq!(z.amplitudes()[0], c(1.0, 0.0));
    }

    #[test]
    fn amplitude_encoding() {
        let s = StateVector::amplitude_encode(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(s.born_probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
        let u = StateVector::amplitude_encode(&[1.0; 4], 2).unwrap();
        for q in 0..2 {
            let z = DiagonalObservable::single_z(2, q).expect(&u).unwrap();
            assert!(z.abs() < 1e-12);
        }
        assert!(matches!(
            StateVector::amplitude_encode(&[1.0; 5], 2),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            StateVector::amplitude_encode(&[0.0; 3], 2),
            Err(Error::Encoding(_))
        ));
    }

    #[test]
    fn capacity_guard() {
        assert!(matches!(StateVector::zero(21), Err(Error::Capacity { .. })));
    }

    fn ry_matrix(t: f64) -> [[Complex64; 2]; 2] {
        let (s, co) = (t / 2.0).sin_cos();
        [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
    }

    fn rz_matrix(t: f64) -> [[Complex64; 2]; 2] {
        [
            [Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)],
        ]
    }

    /// Dense 8x8 matrix of a single-qubit gate on a 3-qubit register.
    fn embed(m: [[Complex64; 2]; 2], target: usize) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![c(0.0, 0.0); 8]; 8];
        for row in 0..8 {
            for col in 0..8 {
                if row & !(1 << target) == col & !(1 << target) {
                    out[row][col] = m[(row >> target) & 1][(col >> target) & 1];
                }
            }
        }
        out
    }

    fn cnot_matrix(control: usize, target: usize) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![c(0.0, 0.0); 8]; 8];
        for col in 0..8 {
            let row = if col >> control & 1 == 1 { col ^ (1 << target) } else { col };
            out[row][col] = c(1.0, 0.0);
        }
        out
    }

    fn check_gate(apply: impl Fn(&mut StateVector), matrix: &[Vec<Complex64>]) {
        for col in 0..8 {
            let mut s = StateVector::basis_state(&BitString::from_index(col, 3)).unwrap();
            apply(&mut s);
            for row in 0..8 {
                assert!((s.amplitudes()[row] - matrix[row][col]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gates_match_dense_matrices_on_three_qubits() {
        for q in 0..3 {
            for &t in &[0.3, -1.7, 2.9] {
                check_gate(|s| s.apply_ry(q, t), &embed(ry_matrix(t), q));
                check_gate(|s| s.apply_rz(q, t), &embed(rz_matrix(t), q));
            }
            let h = [
                [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
                [c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
            ];
            check_gate(|s| s.apply_single(q, h), &embed(h, q));
        }
        for control in 0..3 {
            for target in 0..3 {
                if control != target {
                    check_gate(|s| s.apply_cnot(control, target), &cnot_matrix(control, target));
                }
            }
        }
    }

    #[test]
    fn born_probabilities_examples() {
        let s = StateVector::zero(2).unwrap();
        assert_eq!(s.born_probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
        let u = StateVector::amplitude_encode(&[1.0; 4], 2).unwrap();
        for p in u.born_probabilities() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_frequencies_within_three_sigma() {
        let mut s = StateVector::zero(3).unwrap();
        let ansatz = Ansatz::new(3, 2);
        let theta: Vec<f64> = (0..ansatz.num_params()).map(|i| 0.37 * i as f64 - 1.1).collect();
        ansatz.apply(&mut s, &theta).unwrap();
        let probs = s.born_probabilities();
        let m = 100_000;
        let draws = s.sample_bitstrings(m, 17);
        let mut counts = vec![0usize; 8];
        for d in &draws {
            counts[d.to_index()] += 1;
        }
        for (p, k) in probs.iter().zip(counts) {
            let sigma = (m as f64 * p * (1.0 - p)).sqrt();
            assert!((k as f64 - m as f64 * p).abs() <= 3.0 * sigma + 1e-9, "p={p} k={k}");
        }
        assert_eq!(draws, s.sample_bitstrings(m, 17));
    }

    #[test]
    fn dump_lists_every_amplitude() {
        let s = StateVector::zero(2).unwrap();
        let text = s.dump();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("0 1e0 0e0"));
    }
}
