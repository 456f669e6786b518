//! Linear heads, the deployable parity classifier, baselines and the
//! learned projection encoder.

mod baselines;
mod deployed;
mod projection;

pub use baselines::{train_linear_svm_baseline, train_logistic_baseline, SvmConfig};
pub use deployed::DeployedParityClassifier;
pub use projection::{train_projection_pipeline, EncodeMode, ProjectionConfig, ProjectionEncoder, ProjectionModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{cross_entropy_grad, Optimizer, OptimizerConfig};

/// `C x K` weights and `C` biases. Binary heads read the margin
/// `logit_1 - logit_0`, with a zero margin mapped to class 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearHead {
    pub fn zeros(classes: usize, k: usize) -> Self {
        LinearHead {
            weights: vec![vec![0.0; k]; classes],
            bias: vec![0.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn k(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(features).map(|(a, f)| a * f).sum::<f64>() + b)
            .collect()
    }

    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        if features.len() != self.k() {
            return Err(Error::dim(self.k(), features.len()));
        }
        Ok(self.predict_logits(&self.logits(features)))
    }

    pub fn predict_logits(&self, logits: &[f64]) -> usize {
        if logits.len() == 2 {
            return usize::from(logits[1] - logits[0] >= 0.0);
        }
        let mut best = 0;
        for (c, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = c;
            }
        }
        best
    }

    /// Largest absolute weight per feature, taken over classes (for binary
    /// heads, the margin weight).
    pub fn feature_importance(&self) -> Vec<f64> {
        if self.classes() == 2 {
            return self.weights[1].iter().zip(&self.weights[0]).map(|(a, b)| (a - b).abs()).collect();
        }
        (0..self.k())
            .map(|k| self.weights.iter().map(|w| w[k].abs()).fold(0.0, f64::max))
            .collect()
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        let mut hits = 0usize;
        for (f, &y) in features.iter().zip(labels) {
            hits += usize::from(self.predict(f)? == y);
        }
        Ok(100.0 * hits as f64 / labels.len().max(1) as f64)
    }
}

/// Full-batch multinomial logistic regression from a zero initialization,
/// with `l2 / 2 * |W|^2` on the weights.
pub fn train_linear_head(
    features: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    cfg: &OptimizerConfig,
    epochs: usize,
    l2: f64,
) -> Result<LinearHead> {
    if features.len() != labels.len() {
        return Err(Error::dim(labels.len(), features.len()));
    }
    if classes < 2 {
        return Err(Error::Invalid(format!("a head needs at least 2 classes, got {classes}")));
    }
    let k = features.first().map_or(0, Vec::len);
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite feature".into()));
    }
    cfg.validate()?;
    let mut head = LinearHead::zeros(classes, k);
    let mut w_opt = Optimizer::new(*cfg, "head.weights", classes * k);
    let mut b_opt = Optimizer::new(*cfg, "head.bias", classes);
    let mut w_flat = vec![0.0; classes * k];
    for epoch in 0..epochs {
        let logits: Vec<Vec<f64>> = features.iter().map(|f| head.logits(f)).collect();
        let (loss, d_logits) = cross_entropy_grad(&logits, labels);
        if !loss.is_finite() {
            return Err(Error::training("head", format!("non-finite loss at epoch {epoch}")));
        }
        let mut gw = vec![0.0; classes * k];
        let mut gb = vec![0.0; classes];
        for (f, d) in features.iter().zip(&d_logits) {
            for c in 0..classes {
                gb[c] += d[c];
                for (i, v) in f.iter().enumerate() {
                    gw[c * k + i] += d[c] * v;
                }
            }
        }
        for (g, w) in gw.iter_mut().zip(&w_flat) {
            *g += l2 * w;
        }
        w_opt.step(&mut w_flat, &gw)?;
        b_opt.step(&mut head.bias, &gb)?;
        for (c, row) in head.weights.iter_mut().enumerate() {
            row.copy_from_slice(&w_flat[c * k..(c + 1) * k]);
        }
    }
    Ok(head)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::with_lr(0.1, 0)
    }

    #[test]
    fn separable_one_dimensional() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let feats: Vec<Vec<f64>> = labels.iter().map(|&y| vec![if y == 1 { 1.0 } else { -1.0 }]).collect();
        let head = train_linear_head(&feats, &labels, 2, &cfg(), 50, 0.0).unwrap();
        assert_eq!(head.accuracy(&feats, &labels).unwrap(), 100.0);
    }

    #[test]
    fn duplicate_columns_do_not_change_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = x.iter().map(|v| usize::from(*v + rng.random_range(-0.3..0.3) > 0.1)).collect();
        let one: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let two: Vec<Vec<f64>> = x.iter().map(|v| vec![*v, *v]).collect();
        let h1 = train_linear_head(&one, &labels, 2, &cfg(), 200, 0.0).unwrap();
        let h2 = train_linear_head(&two, &labels, 2, &cfg(), 200, 0.0).unwrap();
        let a1 = h1.accuracy(&one, &labels).unwrap();
        let a2 = h2.accuracy(&two, &labels).unwrap();
        assert!((a1 - a2).abs() < 1e-6);
    }

    #[test]
    fn zero_epochs_gives_uniform_logits() {
        let head = train_linear_head(&[vec![1.0, 2.0]], &[1], 3, &cfg(), 0, 0.0).unwrap();
        assert_eq!(head.logits(&[1.0, 2.0]), vec![0.0; 3]);
        assert_eq!(head.predict(&[1.0, 2.0]).unwrap(), 0);
        let bin = LinearHead::zeros(2, 1);
        assert_eq!(bin.predict(&[3.0]).unwrap(), 1);
    }

    #[test]
    fn positive_scaling_keeps_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for c in [2, 3, 5] {
            let head = LinearHead {
                weights: (0..c).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
                bias: (0..c).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let scaled = LinearHead {
                weights: head.weights.iter().map(|r| r.iter().map(|v| v * 3.7).collect()).collect(),
                bias: head.bias.iter().map(|v| v * 3.7).collect(),
            };
            for _ in 0..100 {
                let f: Vec<f64> = (0..4).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                assert_eq!(head.predict(&f).unwrap(), scaled.predict(&f).unwrap());
            }
        }
    }

    #[test]
    fn matches_grid_search_on_one_dimensional_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..200).map(|_| rng.random_range(-2.0..2.0)).collect();
        let labels: Vec<usize> = x.iter().map(|v| usize::from(*v + rng.random_range(-0.8..0.8) > 0.3)).collect();
        let feats: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let head = train_linear_head(&feats, &labels, 2, &cfg(), 1000, 0.0).unwrap();
        let trained = head.accuracy(&feats, &labels).unwrap();
        // brute-force minimizer of the same logistic loss over the margin
        let loss = |w: f64, b: f64| -> f64 {
            x.iter()
                .zip(&labels)
                .map(|(v, &y)| {
                    let m = (w * v + b) * if y == 1 { 1.0 } else { -1.0 };
                    (1.0 + (-m).exp()).ln()
                })
                .sum()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for wi in 0..=400 {
            for bi in -250..=250 {
                let (w, b) = (wi as f64 * 0.025, bi as f64 * 0.02);
                let l = loss(w, b);
                if l < best.0 {
                    best = (l, w, b);
                }
            }
        }
        let grid_acc = 100.0
            * x.iter()
                .zip(&labels)
                .filter(|(v, &y)| usize::from(best.1 * *v + best.2 >= 0.0) == y)
                .count() as f64
            / 200.0;
        assert!((trained - grid_acc).abs() <= 0.5, "trained {trained} grid {grid_acc}");
    }

    #[test]
    fn multiclass_ties_take_lowest_index() {
        let head = LinearHead::zeros(4, 2);
        assert_eq!(head.predict_logits(&[0.5, 1.0, 1.0, 0.0]), 1);
    }
}
