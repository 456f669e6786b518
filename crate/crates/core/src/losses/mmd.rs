use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::datasets::LabeledBitDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MmdMode {
    /// Full Born probabilities against the empirical data distribution.
    #[default]
    Exact,
    /// Model samples against data samples.
    Sampled,
}

/// Kernel `k(b, b') = exp(-d_H(b, b') / h)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmdConfig {
    /// `None` means `n / 4`.
    pub bandwidth: Option<f64>,
    pub mode: MmdMode,
}

impl MmdConfig {
    pub fn bandwidth_for(&self, n: usize) -> Result<f64> {
        let h = self.bandwidth.unwrap_or(n as f64 / 4.0);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Invalid(format!("MMD bandwidth must be positive, got {h}")));
        }
        Ok(h)
    }
}

/// Median pairwise Hamming distance of the samples (at least 1).
pub fn median_bandwidth(samples: &[BitString]) -> f64 {
    let mut d: Vec<usize> = Vec::new();
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            d.push(a.xor(b).count_ones());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_unstable();
    (d[d.len() / 2] as f64).max(1.0)
}

/// `K v` over `{0,1}^n`. The kernel factorizes over bits, so this is one
/// 2x2 butterfly per bit.
pub fn hamming_kernel_matvec(v: &[f64], n: usize, h: f64) -> Vec<f64> {
    debug_assert_eq!(v.len(), 1 << n);
    let e = (-1.0 / h).exp();
    let mut out = v.to_vec();
    for q in 0..n {
        let stride = 1usize << q;
        for chunk in out.chunks_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + e * y;
                *b = e * x + y;
            }
        }
    }
    out
}

/// Squared MMD between two probability vectors over `{0,1}^n` and its
/// gradient with respect to `p`.
pub fn mmd_exact(p: &[f64], q: &[f64], n: usize, h: f64) -> Result<(f64, Vec<f64>)> {
    if p.len() != 1 << n || q.len() != 1 << n {
        return Err(Error::dim(1 << n, if p.len() != 1 << n { p.len() } else { q.len() }));
    }
    let d: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
    let kd = hamming_kernel_matvec(&d, n, h);
    let value: f64 = d.iter().zip(&kd).map(|(a, b)| a * b).sum();
    Ok((value.max(0.0), kd.into_iter().map(|v| 2.0 * v).collect()))
}

fn mean_kernel(x: &[BitString], y: &[BitString], h: f64) -> f64 {
    let mut s = 0.0;
    for a in x {
        for b in y {
            s += (-(a.xor(b).count_ones() as f64) / h).exp();
        }
    }
    s / (x.len() * y.len()) as f64
}

/// Biased (V-statistic) squared MMD between two sample sets.
pub fn mmd_samples(x: &[BitString], y: &[BitString], h: f64) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Invalid("MMD needs nonempty sample sets".into()));
    }
    let v = mean_kernel(x, x, h) + mean_kernel(y, y, h) - 2.0 * mean_kernel(x, y, h);
    Ok(v.max(0.0))
}

pub enum ModelDistribution<'a> {
    Probabilities(&'a [f64]),
    Samples(&'a [BitString]),
}

pub fn mmd_loss(model: ModelDistribution<'_>, data: &LabeledBitDataset, cfg: &MmdConfig) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Invalid("MMD against an empty dataset".into()));
    }
    let n = data.n();
    let h = cfg.bandwidth_for(n)?;
    match (cfg.mode, model) {
        (MmdMode::Exact, ModelDistribution::Probabilities(p)) => {
            let q = data.empirical_distribution()?;
            Ok(mmd_exact(p, &q, n, h)?.0)
        }
        (MmdMode::Sampled, ModelDistribution::Samples(s)) => mmd_samples(s, data.samples(), h),
        _ => Err(Error::Invalid("MMD mode does not match the model distribution kind".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn identical_sets_are_zero() {
        let x = vec![bits("0110"), bits("1111"), bits("0000")];
        assert!(mmd_samples(&x, &x, 1.0).unwrap() <= 1e-12);
        let p = [0.1, 0.2, 0.3, 0.4];
        assert!(mmd_exact(&p, &p, 2, 0.5).unwrap().0 <= 1e-12);
    }

    #[test]
    fn singletons_at_distance_one() {
        let v = mmd_samples(&[bits("000")], &[bits("100")], 1.0).unwrap();
        assert!((v - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let mut p = vec![0.0; 8];
        let mut q = vec![0.0; 8];
        p[0] = 1.0;
        q[1] = 1.0;
        assert!((mmd_exact(&p, &q, 3, 1.0).unwrap().0 - 1.264241117657115).abs() < 1e-12);
    }

    #[test]
    fn matvec_matches_dense_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 5;
        let v: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = hamming_kernel_matvec(&v, n, 1.3);
        for i in 0..32usize {
            let dense: f64 = (0..32usize).map(|j| (-((i ^ j).count_ones() as f64) / 1.3).exp() * v[j]).sum();
            assert!((dense - fast[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_and_sampled_agree_on_empirical_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 4;
        let draw = |rng: &mut ChaCha8Rng| -> Vec<BitString> { (0..30).map(|_| BitString::from_index(rng.random_range(0..16), n)).collect() };
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let hist = |s: &[BitString]| {
            let mut p = vec![0.0; 16];
            for b in s {
                p[b.to_index()] += 1.0 / s.len() as f64;
            }
            p
        };
        let exact = mmd_exact(&hist(&x), &hist(&y), n, 1.0).unwrap().0;
        assert!((exact - mmd_samples(&x, &y, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_nonnegative_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let q: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let (a, g) = mmd_exact(&p, &q, 3, 0.75).unwrap();
            let (b, _) = mmd_exact(&q, &p, 3, 0.75).unwrap();
            assert!(a >= 0.0 && (a - b).abs() < 1e-12);
            for j in 0..8 {
                let mut up = p.clone();
                up[j] += 1e-6;
                let mut dn = p.clone();
                dn[j] -= 1e-6;
                let fd = (mmd_exact(&up, &q, 3, 0.75).unwrap().0 - mmd_exact(&dn, &q, 3, 0.75).unwrap().0) / 2e-6;
                assert!((fd - g[j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_data_is_rejected() {
        assert!(mmd_samples(&[], &[bits("0")], 1.0).is_err());
    }
}
