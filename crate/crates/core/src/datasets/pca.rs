use serde::{Deserialize, Serialize};

use super::ContinuousDataset;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Leading eigenvectors of the training covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn fit(train: &ContinuousDataset, k: usize) -> Result<Self> {
        let d = train.d();
        if k == 0 || k > d {
            return Err(Error::Invalid(format!("PCA rank {k} must be in 1..={d}")));
        }
        if train.len() < 2 {
            return Err(Error::Fit("PCA needs at least two samples".into()));
        }
        let n = train.len() as f64;
        let mut mean = vec![0.0; d];
        for x in train.samples() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut cov = vec![0.0; d * d];
        let mut centered = vec![0.0; d];
        for x in train.samples() {
            for (c, (v, m)) in centered.iter_mut().zip(x.iter().zip(&mean)) {
                *c = v - m;
            }
            for i in 0..d {
                let ci = centered[i];
                if ci == 0.0 {
                    continue;
                }
                let row = &mut cov[i * d..(i + 1) * d];
                for j in i..d {
                    row[j] += ci * centered[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] / (n - 1.0);
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }

        let (values, vectors) = jacobi_eigen(cov, d)?;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let components = order[..k]
            .iter()
            .map(|&c| {
                let mut v: Vec<f64> = (0..d).map(|r| vectors[r * d + c]).collect();
                // Sign convention: largest-magnitude entry positive.
                let pivot = v
                    .iter()
                    .copied()
                    .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                    .unwrap_or(1.0);
                if pivot < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Ok(PcaModel {
            mean,
            components,
            explained_variance: order[..k].iter().map(|&c| values[c]).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn d(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d() {
            return Err(Error::dim(self.d(), x.len()));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x.iter().zip(&self.mean)).map(|(w, (v, m))| w * (v - m)).sum())
            .collect())
    }

    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.k() {
            return Err(Error::dim(self.k(), z.len()));
        }
        let mut x = self.mean.clone();
        for (c, &zi) in self.components.iter().zip(z) {
            for (xj, w) in x.iter_mut().zip(c) {
                *xj += zi * w;
            }
        }
        Ok(x)
    }

    pub fn transform_dataset(&self, data: &ContinuousDataset) -> Result<ContinuousDataset> {
        let samples = data.samples().iter().map(|x| self.transform(x)).collect::<Result<Vec<_>>>()?;
        ContinuousDataset::new(self.k(), samples, data.labels().to_vec(), data.classes())
    }
}

/// Cyclic Jacobi rotations on a dense symmetric matrix (row-major `d x d`).
/// Returns eigenvalues and the eigenvector matrix (eigenvectors as columns).
fn jacobi_eigen(mut a: Vec<f64>, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok((vec![0.0; d], v));
    }
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                s += a[p * d + q] * a[p * d + q];
            }
        }
        s.sqrt()
    };
    for _sweep in 0..MAX_SWEEPS {
        if off_norm(&a) <= 1e-15 * scale {
            let values = (0..d).map(|i| a[i * d + i]).collect();
            return Ok((values, v));
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * d + p] -= t * apq;
                a[q * d + q] += t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for r in 0..d {
                    if r != p && r != q {
                        let arp = a[r * d + p];
                        let arq = a[r * d + q];
                        let np = c * arp - s * arq;
                        let nq = c * arq + s * arp;
                        a[r * d + p] = np;
                        a[p * d + r] = np;
                        a[r * d + q] = nq;
                        a[q * d + r] = nq;
                    }
                    let vrp = v[r * d + p];
                    let vrq = v[r * d + q];
                    v[r * d + p] = c * vrp - s * vrq;
                    v[r * d + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    Err(Error::Numerical {
        iterations: MAX_SWEEPS,
        residual: off_norm(&a),
    })
}
