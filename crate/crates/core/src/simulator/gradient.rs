use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Ansatz, Gate, StateVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    ParameterShift,
    #[default]
    Adjoint,
}

/// Two-term shift rule: `(f(theta + pi/2 e_i) - f(theta - pi/2 e_i)) / 2`.
/// Exact for circuits whose parameters each enter through a single Pauli
/// rotation.
pub fn param_shift_grad<F: FnMut(&[f64]) -> f64>(theta: &[f64], mut f: F) -> Vec<f64> {
    let mut shifted = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            shifted[i] = theta[i] + FRAC_PI_2;
            let up = f(&shifted);
            shifted[i] = theta[i] - FRAC_PI_2;
            let down = f(&shifted);
            shifted[i] = theta[i];
            0.5 * (up - down)
        })
        .collect()
}

/// Shift rule for a vector-valued circuit function, contracted with
/// `cotangent`.
pub fn param_shift_vjp<F: FnMut(&[f64]) -> Vec<f64>>(theta: &[f64], mut f: F, cotangent: &[f64]) -> Vec<f64> {
    let mut shifted = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            shifted[i] = theta[i] + FRAC_PI_2;
            let up = f(&shifted);
            shifted[i] = theta[i] - FRAC_PI_2;
            let down = f(&shifted);
            shifted[i] = theta[i];
            up.iter()
                .zip(&down)
                .zip(cotangent)
                .map(|((u, d), c)| 0.5 * c * (u - d))
                .sum()
        })
        .collect()
}

fn apply_generator(state: &mut StateVector, gate: Gate) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match gate {
        Gate::Ry { qubit, .. } => state.apply_single(qubit, [[zero, -i], [i, zero]]),
        Gate::Rz { qubit, .. } => state.apply_single(qubit, [[one, zero], [zero, -one]]),
        Gate::Cnot { .. } => unreachable!("CNOT has no parameter"),
    }
}

/// Value and gradient of `<psi(theta)| D |psi(theta)>` for a real diagonal
/// `D`, with `psi(theta) = U(theta) initial`. One forward pass and one
/// backward sweep regardless of the parameter count.
pub fn adjoint_grad(ansatz: &Ansatz, theta: &[f64], initial: &StateVector, diag: &[f64]) -> Result<(f64, Vec<f64>)> {
    ansatz.check(initial, theta)?;
    if diag.len() != initial.amplitudes().len() {
        return Err(Error::dim(initial.amplitudes().len(), diag.len()));
    }
    let gates = ansatz.gates();
    let mut phi = initial.clone();
    for &g in &gates {
        phi.apply_gate(g, theta);
    }
    let lambda_amps: Vec<Complex64> = phi.amplitudes().iter().zip(diag).map(|(a, d)| a * d).collect();
    let value: f64 = phi.amplitudes().iter().zip(&lambda_amps).map(|(a, l)| (a.conj() * l).re).sum();
    let mut lambda = StateVector::from_amplitudes(lambda_amps)?;

    let mut grad = vec![0.0; theta.len()];
    for &g in gates.iter().rev() {
        if let Some(p) = g.param() {
            let mut mu = phi.clone();
            apply_generator(&mut mu, g);
            let overlap: Complex64 = lambda
                .amplitudes()
                .iter()
                .zip(mu.amplitudes())
                .map(|(l, m)| l.conj() * m)
                .sum();
            grad[p] += overlap.im;
        }
        phi.apply_gate_inverse(g, theta);
        lambda.apply_gate_inverse(g, theta);
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::DiagonalObservable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn expectation(ansatz: &Ansatz, theta: &[f64], initial: &StateVector, diag: &[f64]) -> f64 {
        let mut s = initial.clone();
        ansatz.apply(&mut s, theta).unwrap();
        s.born_probabilities().iter().zip(diag).map(|(p, d)| p * d).sum()
    }

    #[test]
    fn adjoint_shift_and_finite_differences_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let n = rng.random_range(1..=4);
            let layers = rng.random_range(1..=3);
            let ansatz = Ansatz::new(n, layers);
            let theta: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-3.2..3.2)).collect();
            let x: Vec<f64> = (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let init = StateVector::amplitude_encode(&x, n).unwrap();
            let pairs = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let diag = DiagonalObservable::new(pairs).unwrap().diagonal();

            let (value, adj) = adjoint_grad(&ansatz, &theta, &init, &diag).unwrap();
            assert!((value - expectation(&ansatz, &theta, &init, &diag)).abs() < 1e-12);
            let shift = param_shift_grad(&theta, |t| expectation(&ansatz, t, &init, &diag));
            let scale = adj.iter().map(|g| g.abs()).fold(1e-3, f64::max);
            for i in 0..theta.len() {
                let mut up = theta.clone();
                up[i] += h;
                let mut dn = theta.clone();
                dn[i] -= h;
                let fd = (expectation(&ansatz, &up, &init, &diag) - expectation(&ansatz, &dn, &init, &diag)) / (2.0 * h);
                assert!((adj[i] - shift[i]).abs() < 1e-10);
                worst = worst.max((fd - adj[i]).abs() / scale);
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst:e}");
    }

    #[test]
    fn vjp_matches_weighted_sum_of_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ansatz = Ansatz::new(3, 2);
        let theta: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let init = StateVector::zero(3).unwrap();
        let diags: Vec<Vec<f64>> = (0..3).map(|q| DiagonalObservable::single_z(3, q).diagonal()).collect();
        let cot = [0.5, -1.0, 2.0];
        let vjp = param_shift_vjp(
            &theta,
            |t| diags.iter().map(|d| expectation(&ansatz, t, &init, d)).collect(),
            &cot,
        );
        let mut combined = vec![0.0; 8];
        for (d, c) in diags.iter().zip(cot) {
            for (o, v) in combined.iter_mut().zip(d) {
                *o += c * v;
            }
        }
        let (_, adj) = adjoint_grad(&ansatz, &theta, &init, &combined).unwrap();
        for (a, b) in vjp.iter().zip(&adj) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn wrong_diagonal_length_is_rejected() {
        let ansatz = Ansatz::new(2, 1);
        let init = StateVector::zero(2).unwrap();
        assert!(matches!(
            adjoint_grad(&ansatz, &[0.0; 4], &init, &[1.0; 3]),
            Err(Error::Dimension { expected: 4, got: 3 })
        ));
    }
}
