use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Ry { qubit: usize, param: usize },
    Rz { qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn param(self) -> Option<usize> {
        match self {
            Gate::Ry { param, .. } | Gate::Rz { param, .. } => Some(param),
            Gate::Cnot { .. } => None,
        }
    }
}

/// Hardware-efficient layered circuit. Each layer applies `RY` on every
/// qubit, then `RZ` on every qubit, then CNOTs `i -> i+1 (mod n)` for
/// `i = 0..n` (skipped for a single qubit).
///
/// Parameters of layer `l` occupy `[2nl, 2nl + n)` for `RY` and
/// `[2nl + n, 2n(l+1))` for `RZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ansatz {
    pub n_qubits: usize,
    pub layers: usize,
}

impl Ansatz {
    pub fn new(n_qubits: usize, layers: usize) -> Self {
        Ansatz { n_qubits, layers }
    }

    pub fn num_params(&self) -> usize {
        2 * self.n_qubits * self.layers
    }

    pub fn gates(&self) -> Vec<Gate> {
        let n = self.n_qubits;
        let mut out = Vec::with_capacity(self.layers * 3 * n);
        for l in 0..self.layers {
            let base = 2 * n * l;
            out.extend((0..n).map(|q| Gate::Ry { qubit: q, param: base + q }));
            out.extend((0..n).map(|q| Gate::Rz {
                qubit: q,
                param: base + n + q,
            }));
            if n > 1 {
                out.extend((0..n).map(|q| Gate::Cnot {
                    control: q,
                    target: (q + 1) % n,
                }));
            }
        }
        out
    }

    pub fn check(&self, state: &StateVector, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::dim(self.num_params(), theta.len()));
        }
        if state.n_qubits() != self.n_qubits {
            return Err(Error::dim(self.n_qubits, state.n_qubits()));
        }
        Ok(())
    }

    pub fn apply(&self, state: &mut StateVector, theta: &[f64]) -> Result<()> {
        self.check(state, theta)?;
        for g in self.gates() {
            state.apply_gate(g, theta);
        }
        Ok(())
    }
}
