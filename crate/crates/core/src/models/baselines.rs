use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{train_linear_head, LinearHead};
use crate::error::{Error, Result};
use crate::losses::OptimizerConfig;

/// Multinomial logistic regression on raw features.
pub fn train_logistic_baseline(
    features: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    cfg: &OptimizerConfig,
    epochs: usize,
    l2: f64,
) -> Result<LinearHead> {
    train_linear_head(features, labels, classes, cfg, epochs, l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            epochs: 100,
            lr: 0.1,
            l2: 1e-3,
            seed: 0,
        }
    }
}

/// Hinge loss plus `l2 / 2 * |w|^2`, by shuffled per-sample subgradient
/// steps with rate `lr / (1 + lr * l2 * t)`. One-vs-rest for more than
/// two classes; a binary head keeps class 0's row at zero.
pub fn train_linear_svm_baseline(features: &[Vec<f64>], labels: &[usize], classes: usize, cfg: &SvmConfig) -> Result<LinearHead> {
    if features.len() != labels.len() {
        return Err(Error::dim(labels.len(), features.len()));
    }
    if classes < 2 {
        return Err(Error::Invalid(format!("SVM needs at least 2 classes, got {classes}")));
    }
    if !(cfg.lr > 0.0) || !(cfg.l2 >= 0.0) {
        return Err(Error::Config("SVM rate must be positive and l2 nonnegative".into()));
    }
    let k = features.first().map_or(0, Vec::len);
    let mut head = LinearHead::zeros(classes, k);
    let targets: Vec<usize> = if classes == 2 { vec![1] } else { (0..classes).collect() };
    for c in targets {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ c as u64);
        let mut order: Vec<usize> = (0..features.len()).collect();
        let (mut w, mut b) = (vec![0.0; k], 0.0);
        let mut t = 0usize;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let rate = cfg.lr / (1.0 + cfg.lr * cfg.l2 * t as f64);
                t += 1;
                let y = if labels[i] == c { 1.0 } else { -1.0 };
                let margin = y * (w.iter().zip(&features[i]).map(|(a, x)| a * x).sum::<f64>() + b);
                for wj in w.iter_mut() {
                    *wj *= 1.0 - rate * cfg.l2;
                }
                if margin < 1.0 {
                    for (wj, x) in w.iter_mut().zip(&features[i]) {
                        *wj += rate * y * x;
                    }
                    b += rate * y;
                }
            }
        }
        head.weights[c] = w;
        head.bias[c] = b;
    }
    Ok(head)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::generate_planted_parity;
    use crate::datasets::PlantedParitySpec;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64, classes: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let centers = [[3.0, 0.0], [-3.0, 0.0], [0.0, 4.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..300 {
            let c = i % classes;
            x.push(vec![centers[c][0] + noise.sample(&mut rng), centers[c][1] + noise.sample(&mut rng)]);
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs() {
        for classes in [2, 3] {
            let (x, y) = blobs(5, classes);
            let lr = train_logistic_baseline(&x, &y, classes, &OptimizerConfig::with_lr(0.1, 0), 300, 0.0).unwrap();
            let svm = train_linear_svm_baseline(&x, &y, classes, &SvmConfig::default()).unwrap();
            assert!(lr.accuracy(&x, &y).unwrap() >= 99.0);
            assert!(svm.accuracy(&x, &y).unwrap() >= 99.0);
        }
    }

    #[test]
    fn logistic_sees_no_linear_signal_in_parity5() {
        let data = generate_planted_parity(&PlantedParitySpec::exhaustive(5, vec![0, 1, 2, 3, 4]).unwrap(), 0).unwrap();
        let x = data.to_f64_rows();
        let head = train_logistic_baseline(&x, data.labels(), 2, &OptimizerConfig::with_lr(0.05, 0), 200, 0.0).unwrap();
        let acc = head.accuracy(&x, data.labels()).unwrap();
        assert!((acc - 50.0).abs() <= 12.5, "accuracy {acc}");
    }

    #[test]
    fn constant_labels_give_majority() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let y = vec![2; 50];
        let lr = train_logistic_baseline(&x, &y, 3, &OptimizerConfig::with_lr(0.1, 0), 100, 0.0).unwrap();
        let svm = train_linear_svm_baseline(&x, &y, 3, &SvmConfig::default()).unwrap();
        assert_eq!(lr.accuracy(&x, &y).unwrap(), 100.0);
        assert_eq!(svm.accuracy(&x, &y).unwrap(), 100.0);
    }
}
