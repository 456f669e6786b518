//! Training objectives, the temperature schedule and the optimizer.

mod mmd;
mod optim;
mod schedule;

pub use mmd::{hamming_kernel_matvec, median_bandwidth, mmd_exact, mmd_loss, mmd_samples, MmdConfig, MmdMode, ModelDistribution};
pub use optim::{Algorithm, Optimizer, OptimizerConfig};
pub use schedule::{Interpolation, TemperatureSchedule};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parity::WordLogits;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    /// Weight of the discriminative reward against MMD.
    pub lambda: f64,
    /// Diversity penalty weight in the sPQC objective.
    pub alpha: f64,
    /// Sparsity penalty weight.
    pub beta: f64,
    /// Class-separation penalty weight.
    pub gamma: f64,
    /// Diversity weight for native-binary runs.
    pub dw: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda: 1.0,
            alpha: 1.0,
            beta: 0.01,
            gamma: 2.0,
            dw: 5.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda, self.alpha, self.beta, self.gamma, self.dw];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("loss weights must be finite".into()));
        }
        Ok(())
    }
}

/// Per-class means of `features` over the classes that have samples.
/// Returns the means and, for each kept class, its id and count.
pub fn class_means(features: &[Vec<f64>], labels: &[usize], classes: usize) -> Result<(Vec<Vec<f64>>, Vec<(usize, usize)>)> {
    if features.len() != labels.len() {
        return Err(Error::dim(labels.len(), features.len()));
    }
    let k = features.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; k]; classes];
    let mut counts = vec![0usize; classes];
    for (row, &y) in features.iter().zip(labels) {
        if y >= classes {
            return Err(Error::Invalid(format!("label {y} out of range for {classes} classes")));
        }
        if row.len() != k {
            return Err(Error::dim(k, row.len()));
        }
        counts[y] += 1;
        for (s, v) in sums[y].iter_mut().zip(row) {
            *s += v;
        }
    }
    let mut means = Vec::new();
    let mut kept = Vec::new();
    for (c, (sum, count)) in sums.into_iter().zip(counts).enumerate() {
        if count > 0 {
            means.push(sum.into_iter().map(|s| s / count as f64).collect());
            kept.push((c, count));
        }
    }
    Ok((means, kept))
}

fn need_two_classes(means: &[Vec<f64>]) -> Result<()> {
    if means.len() < 2 {
        return Err(Error::Invalid(format!("need at least 2 classes, got {}", means.len())));
    }
    Ok(())
}

/// Average over words of the population variance, across classes, of the
/// class-mean feature. A reward: larger is more discriminative.
pub fn disc_loss(means: &[Vec<f64>]) -> Result<f64> {
    disc_loss_grad(means).map(|(v, _)| v)
}

/// `disc_loss` and its gradient with respect to each class mean.
pub fn disc_loss_grad(means: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    need_two_classes(means)?;
    let c = means.len() as f64;
    let k = means[0].len();
    if k == 0 {
        return Ok((0.0, vec![Vec::new(); means.len()]));
    }
    let mut grand = vec![0.0; k];
    for m in means {
        for (g, v) in grand.iter_mut().zip(m) {
            *g += v / c;
        }
    }
    let mut value = 0.0;
    let grad = means
        .iter()
        .map(|m| {
            m.iter()
                .zip(&grand)
                .map(|(v, g)| {
                    value += (v - g) * (v - g) / (c * k as f64);
                    2.0 * (v - g) / (c * k as f64)
                })
                .collect()
        })
        .collect();
    Ok((value, grad))
}

/// Minus the mean, over unordered class pairs, of the squared distance
/// between class means.
pub fn class_separation_penalty(means: &[Vec<f64>]) -> Result<f64> {
    class_separation_grad(means).map(|(v, _)| v)
}

pub fn class_separation_grad(means: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    need_two_classes(means)?;
    let c = means.len();
    let pairs = (c * (c - 1) / 2) as f64;
    let k = means[0].len();
    let mut value = 0.0;
    let mut grad = vec![vec![0.0; k]; c];
    for a in 0..c {
        for b in a + 1..c {
            for i in 0..k {
                let d = means[a][i] - means[b][i];
                value -= d * d / pairs;
                grad[a][i] -= 2.0 * d / pairs;
                grad[b][i] += 2.0 * d / pairs;
            }
        }
    }
    Ok((value, grad))
}

/// Sum over ordered pairs `k != k'` of the inner product of participation
/// vectors.
pub fn diversity_penalty(logits: &WordLogits) -> f64 {
    diversity_penalty_grad(logits).0
}

/// Value and gradient with respect to the logits.
pub fn diversity_penalty_grad(logits: &WordLogits) -> (f64, Vec<Vec<f64>>) {
    let p = logits.participation();
    let tau = logits.temperature;
    let n = logits.n();
    let mut total = vec![0.0; n];
    for row in &p {
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
    }
    // sum_{k != k'} <p_k, p_k'> = |sum_k p_k|^2 - sum_k |p_k|^2
    let mut value = total.iter().map(|t| t * t).sum::<f64>();
    let grad = p
        .iter()
        .map(|row| {
            value -= row.iter().map(|v| v * v).sum::<f64>();
            row.iter()
                .zip(&total)
                .map(|(v, t)| 2.0 * (t - v) * tau * v * (1.0 - v))
                .collect()
        })
        .collect();
    (value.max(0.0), grad)
}

/// Total participation mass.
pub fn sparsity_penalty(logits: &WordLogits) -> f64 {
    logits.participation().iter().flatten().sum()
}

pub fn sparsity_penalty_grad(logits: &WordLogits) -> (f64, Vec<Vec<f64>>) {
    let tau = logits.temperature;
    let p = logits.participation();
    let value = p.iter().flatten().sum();
    let grad = p
        .iter()
        .map(|row| row.iter().map(|v| tau * v * (1.0 - v)).collect())
        .collect();
    (value, grad)
}

/// Mean negative log-softmax of the true class.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> f64 {
    cross_entropy_grad(logits, labels).0
}

/// Value and gradient with respect to the class logits.
pub fn cross_entropy_grad(logits: &[Vec<f64>], labels: &[usize]) -> (f64, Vec<Vec<f64>>) {
    let n = logits.len().max(1) as f64;
    let mut value = 0.0;
    let grad = logits
        .iter()
        .zip(labels)
        .map(|(row, &y)| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            value += z.ln() + max - row[y];
            exps.iter()
                .enumerate()
                .map(|(c, e)| (e / z - if c == y { 1.0 } else { 0.0 }) / n)
                .collect()
        })
        .collect();
    (value / n, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disc_examples() {
        assert_eq!(disc_loss(&[vec![0.3], vec![0.3]]).unwrap(), 0.0);
        assert!((disc_loss(&[vec![1.0], vec![-1.0]]).unwrap() - 1.0).abs() < 1e-15);
        assert!((disc_loss(&[vec![1.0, 1.0], vec![-1.0, 1.0]]).unwrap() - 0.5).abs() < 1e-15);
        assert!(disc_loss(&[vec![1.0]]).is_err());
    }

    #[test]
    fn separation_examples() {
        assert_eq!(class_separation_penalty(&[vec![0.2], vec![0.2]]).unwrap(), 0.0);
        assert!((class_separation_penalty(&[vec![1.0], vec![-1.0]]).unwrap() + 4.0).abs() < 1e-15);
        // squared distances 4, 4, 0
        let m = [vec![1.0], vec![-1.0], vec![-1.0]];
        assert!((class_separation_penalty(&m).unwrap() + 8.0 / 3.0).abs() < 1e-15);
        assert!(class_separation_penalty(&[vec![1.0]]).is_err());
    }

    #[test]
    fn diversity_examples() {
        assert_eq!(diversity_penalty(&WordLogits::new(vec![vec![3.0, -1.0]], 1.0).unwrap()), 0.0);
        let same = WordLogits::new(vec![vec![100.0, -100.0, -100.0]; 2], 1.0).unwrap();
        assert!((diversity_penalty(&same) - 2.0).abs() < 1e-12);
        let disjoint = WordLogits::new(vec![vec![100.0, -100.0], vec![-100.0, 100.0]], 1.0).unwrap();
        assert!(diversity_penalty(&disjoint) < 1e-12);
    }

    #[test]
    fn sparsity_examples() {
        assert!(sparsity_penalty(&WordLogits::new(vec![vec![-100.0; 4]; 3], 1.0).unwrap()) < 1e-12);
        assert_eq!(sparsity_penalty(&WordLogits::zeros(3, 4)), 6.0);
        let one = WordLogits::new(vec![vec![100.0, -100.0, -100.0]], 1.0).unwrap();
        assert!((sparsity_penalty(&one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        let v = cross_entropy(&[vec![0.0, 0.0], vec![0.3, 0.3]], &[0, 1]);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-10);
        assert!(cross_entropy(&[vec![50.0, 0.0, 0.0]], &[0]) < 1e-20);
    }

    #[test]
    fn cross_entropy_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let c = rng.random_range(2..6);
            let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..c).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
            let labels: Vec<usize> = (0..5).map(|_| rng.random_range(0..c)).collect();
            let brute: f64 = rows
                .iter()
                .zip(&labels)
                .map(|(r, &y)| -(r[y].exp() / r.iter().map(|v| v.exp()).sum::<f64>()).ln())
                .sum::<f64>()
                / 5.0;
            assert!((cross_entropy(&rows, &labels) - brute).abs() < 1e-10);
        }
    }

    #[test]
    fn class_means_skip_empty_classes() {
        let (m, kept) = class_means(&[vec![1.0], vec![3.0], vec![5.0]], &[0, 0, 2], 3).unwrap();
        assert_eq!(m, vec![vec![2.0], vec![5.0]]);
        assert_eq!(kept, vec![(0, 2), (2, 1)]);
    }

    fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
        (a - b).abs() / scale.max(1e-3)
    }

    #[test]
    fn penalty_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..1000 {
            let k = rng.random_range(1..5);
            let n = rng.random_range(1..6);
            let tau = rng.random_range(0.5..3.0);
            let rows: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let logits = WordLogits::new(rows, tau).unwrap();
            type Penalty = fn(&WordLogits) -> (f64, Vec<Vec<f64>>);
            for f in [diversity_penalty_grad as Penalty, sparsity_penalty_grad] {
                let (_, g) = f(&logits);
                let scale = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                let flat = logits.flat();
                for j in 0..flat.len() {
                    let mut up = logits.clone();
                    let mut x = flat.clone();
                    x[j] += h;
                    up.set_flat(&x);
                    let mut dn = logits.clone();
                    x[j] -= 2.0 * h;
                    dn.set_flat(&x);
                    let fd = (f(&up).0 - f(&dn).0) / (2.0 * h);
                    assert!(rel_err(fd, g[j / n][j % n], scale) < 1e-5);
                }
            }

            let c = rng.random_range(2..5);
            let means: Vec<Vec<f64>> = (0..c).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            type Term = fn(&[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)>;
            for f in [disc_loss_grad as Term, class_separation_grad] {
                let (_, g) = f(&means).unwrap();
                let scale = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                for a in 0..c {
                    for i in 0..k {
                        let mut up = means.clone();
                        up[a][i] += h;
                        let mut dn = means.clone();
                        dn[a][i] -= h;
                        let fd = (f(&up).unwrap().0 - f(&dn).unwrap().0) / (2.0 * h);
                        assert!(rel_err(fd, g[a][i], scale) < 1e-5);
                    }
                }
            }

            let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..k)).collect();
            let (_, g) = cross_entropy_grad(&vec![means[0].clone(); 4], &labels);
            let scale = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let base = vec![means[0].clone(); 4];
            for r in 0..4 {
                for i in 0..k {
                    let mut up = base.clone();
                    up[r][i] += h;
                    let mut dn = base.clone();
                    dn[r][i] -= h;
                    let fd = (cross_entropy(&up, &labels) - cross_entropy(&dn, &labels)) / (2.0 * h);
                    assert!(rel_err(fd, g[r][i], scale) < 1e-5);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn penalty_signs(rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 4), 1..6),
                         means in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 2..5)) {
            let logits = WordLogits::new(rows, 1.0).unwrap();
            prop_assert!(diversity_penalty(&logits) >= 0.0);
            prop_assert!(sparsity_penalty(&logits) >= 0.0);
            prop_assert!(class_separation_penalty(&means).unwrap() <= 0.0);
            prop_assert!(disc_loss(&means).unwrap() >= 0.0);
        }
    }
}
