use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ContinuousDataset;
use crate::error::Result;

/// Two classes at `+-u` with `u = (1, 1) / sqrt(2)` and correlated noise,
/// shaped so the total covariance is `diag(1.3, 0.825)`. Principal axes
/// are the coordinate axes, so sign-binarizing the PCA scores mixes the
/// classes, while the noise along `u` has std 0.25 and a projection onto
/// `u` separates them almost perfectly.
pub fn rotated_margin_task(count: usize, seed: u64) -> Result<ContinuousDataset> {
    // Cholesky factor of the within-class covariance [[0.8, -0.5], [-0.5, 0.325]].
    let l00 = 0.8f64.sqrt();
    let l10 = -0.5 / l00;
    let l11 = (0.325 - l10 * l10).sqrt();
    let u = std::f64::consts::FRAC_1_SQRT_2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let y = i % 2;
        let s = if y == 1 { 1.0 } else { -1.0 };
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        samples.push(vec![s * u + l00 * z0, s * u + l10 * z0 + l11 * z1]);
        labels.push(y);
    }
    ContinuousDataset::new(2, samples, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_is_diagonal_and_margin_is_wide() {
        let d = rotated_margin_task(20000, 1).unwrap();
        let n = d.len() as f64;
        let mean: Vec<f64> = (0..2).map(|j| d.samples().iter().map(|x| x[j]).sum::<f64>() / n).collect();
        let cov = |a: usize, b: usize| d.samples().iter().map(|x| (x[a] - mean[a]) * (x[b] - mean[b])).sum::<f64>() / n;
        assert!((cov(0, 0) - 1.3).abs() < 0.05);
        assert!((cov(1, 1) - 0.825).abs() < 0.05);
        assert!(cov(0, 1).abs() < 0.05);
        let correct = d
            .samples()
            .iter()
            .zip(d.labels())
            .filter(|(x, &y)| usize::from(x[0] + x[1] > 0.0) == y)
            .count();
        assert!(correct as f64 / n > 0.99);
    }
}
