use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DeployedParityClassifier, LinearHead};
use crate::bits::BitString;
use crate::datasets::{ContinuousDataset, PcaModel};
use crate::error::{Error, Result};
use crate::losses::{cross_entropy_grad, Optimizer, OptimizerConfig, TemperatureSchedule};
use crate::parity::{sigmoid, soft_parity_grad, threshold_words, ParityWord, WordLogits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodeMode {
    Soft,
    Hard,
    /// Hard values forward; gradients are taken through the soft relaxation.
    StraightThrough,
}

/// `z = P x + offset`, then each `z_j` becomes `M` bits (most significant
/// first) by counting how many of the `2^M - 1` unit-spaced, zero-centered
/// thresholds it exceeds. For `M = 1` the single threshold is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEncoder {
    pub projection: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub bits_per_output: usize,
    pub temperature: f64,
}

impl ProjectionEncoder {
    pub fn new(projection: Vec<Vec<f64>>, offset: Vec<f64>, bits_per_output: usize, temperature: f64) -> Result<Self> {
        if bits_per_output == 0 || bits_per_output > 8 {
            return Err(Error::Invalid(format!("bits per output must be in 1..=8, got {bits_per_output}")));
        }
        if !(temperature > 0.0) {
            return Err(Error::Invalid("quantization temperature must be positive".into()));
        }
        if projection.len() != offset.len() {
            return Err(Error::dim(projection.len(), offset.len()));
        }
        if let Some(first) = projection.first() {
            if let Some(r) = projection.iter().find(|r| r.len() != first.len()) {
                return Err(Error::dim(first.len(), r.len()));
            }
        }
        Ok(ProjectionEncoder {
            projection,
            offset,
            bits_per_output,
            temperature,
        })
    }

    pub fn outputs(&self) -> usize {
        self.projection.len()
    }

    pub fn d(&self) -> usize {
        self.projection.first().map_or(0, Vec::len)
    }

    pub fn width(&self) -> usize {
        self.outputs() * self.bits_per_output
    }

    pub fn thresholds(&self) -> Vec<f64> {
        let count = (1usize << self.bits_per_output) - 1;
        let center = (count as f64 - 1.0) / 2.0;
        (0..count).map(|j| j as f64 - center).collect()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d() {
            return Err(Error::dim(self.d(), x.len()));
        }
        Ok(self
            .projection
            .iter()
            .zip(&self.offset)
            .map(|(row, o)| row.iter().zip(x).map(|(p, v)| p * v).sum::<f64>() + o)
            .collect())
    }

    fn code_bit(&self, level: usize, m: usize) -> f64 {
        ((level >> (self.bits_per_output - 1 - m)) & 1) as f64
    }

    fn hard_bits_of(&self, z: &[f64], thresholds: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for &zj in z {
            let level = thresholds.iter().filter(|&&t| zj > t).count();
            out.extend((0..self.bits_per_output).map(|m| self.code_bit(level, m)));
        }
        out
    }

    /// Soft bits and `d bit / d z_j` for each bit.
    fn soft_bits_of(&self, z: &[f64], thresholds: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = self.temperature;
        let mut bits = vec![0.0; self.width()];
        let mut grads = vec![0.0; self.width()];
        for (j, &zj) in z.iter().enumerate() {
            for (level, &th) in thresholds.iter().enumerate() {
                let s = sigmoid((zj - th) / t);
                let ds = s * (1.0 - s) / t;
                for m in 0..self.bits_per_output {
                    let step = self.code_bit(level + 1, m) - self.code_bit(level, m);
                    if step != 0.0 {
                        let idx = j * self.bits_per_output + m;
                        bits[idx] += step * s;
                        grads[idx] += step * ds;
                    }
                }
            }
        }
        (bits, grads)
    }

    pub fn encode(&self, x: &[f64], mode: EncodeMode) -> Result<Vec<f64>> {
        let z = self.project(x)?;
        let th = self.thresholds();
        Ok(match mode {
            EncodeMode::Soft => self.soft_bits_of(&z, &th).0,
            EncodeMode::Hard | EncodeMode::StraightThrough => self.hard_bits_of(&z, &th),
        })
    }

    pub fn encode_hard(&self, x: &[f64]) -> Result<BitString> {
        let bits = self.encode(x, EncodeMode::Hard)?;
        Ok(BitString::from_bools(&bits.iter().map(|&b| b == 1.0).collect::<Vec<_>>()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionConfig {
    /// Projected outputs `p`; the word width is `p * bits_per_output`.
    pub outputs: usize,
    pub bits_per_output: usize,
    pub k: usize,
    pub optimizer: OptimizerConfig,
    pub schedule: TemperatureSchedule,
    pub quant_temperature: f64,
    pub l2: f64,
    /// `false` freezes the PCA initialization (the fixed-binarization
    /// baseline).
    pub train_projection: bool,
    /// Accepted for config compatibility; has no effect.
    pub post_select: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            outputs: 14,
            bits_per_output: 1,
            k: 64,
            optimizer: OptimizerConfig::with_lr(0.05, 0),
            schedule: TemperatureSchedule::default(),
            quant_temperature: 0.5,
            l2: 1e-4,
            train_projection: true,
            post_select: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    pub encoder: ProjectionEncoder,
    pub words: Vec<ParityWord>,
    pub head: LinearHead,
    /// Accuracy of the last training epoch's forward pass (hard once the
    /// schedule reaches its second phase).
    pub final_train_accuracy: f64,
}

impl ProjectionModel {
    pub fn classifier(&self) -> Result<DeployedParityClassifier> {
        DeployedParityClassifier::new(self.encoder.width(), self.words.clone(), self.head.clone())
    }

    pub fn accuracy(&self, data: &ContinuousDataset) -> Result<f64> {
        let clf = self.classifier()?;
        let mut hits = 0usize;
        for (x, &y) in data.samples().iter().zip(data.labels()) {
            hits += usize::from(clf.predict(&self.encoder.encode_hard(x)?)? == y);
        }
        Ok(100.0 * hits as f64 / data.len().max(1) as f64)
    }
}

fn init_encoder(train: &ContinuousDataset, cfg: &ProjectionConfig) -> Result<ProjectionEncoder> {
    if cfg.outputs == 0 || cfg.outputs > train.d() {
        return Err(Error::Config(format!(
            "projection outputs must be in 1..={}, got {}",
            train.d(),
            cfg.outputs
        )));
    }
    let pca = PcaModel::fit(train, cfg.outputs)?;
    let projection: Vec<Vec<f64>> = pca
        .components
        .iter()
        .zip(&pca.explained_variance)
        .map(|(row, var)| {
            let s = 1.0 / var.max(1e-12).sqrt();
            row.iter().map(|v| v * s).collect()
        })
        .collect();
    let offset = projection
        .iter()
        .map(|row| -row.iter().zip(&pca.mean).map(|(p, m)| p * m).sum::<f64>())
        .collect();
    ProjectionEncoder::new(projection, offset, cfg.bits_per_output, cfg.quant_temperature)
}

/// Order-1 words on each bit first (logits `+-2`), then standard normal
/// rows.
fn init_logits(k: usize, n: usize, rng: &mut ChaCha8Rng) -> WordLogits {
    let rows = (0..k)
        .map(|r| {
            if r < n {
                (0..n).map(|i| if i == r { 2.0 } else { -2.0 }).collect()
            } else {
                (0..n).map(|_| StandardNormal.sample(rng)).collect()
            }
        })
        .collect();
    WordLogits::new(rows, 1.0).expect("finite init")
}

/// Trains projection, word logits and head jointly by cross-entropy on
/// relaxed parity features of the encoded bits, following the
/// temperature schedule (hard forward passes in its second phase).
pub fn train_projection_pipeline(train: &ContinuousDataset, cfg: &ProjectionConfig, seed: u64) -> Result<ProjectionModel> {
    if train.classes() < 2 {
        return Err(Error::Invalid("projection pipeline needs at least 2 classes".into()));
    }
    cfg.optimizer.validate()?;
    cfg.schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut enc = init_encoder(train, cfg)?;
    let (p, d, mbits) = (enc.outputs(), enc.d(), enc.bits_per_output);
    let n = enc.width();
    let k = cfg.k;
    let c = train.classes();
    let mut logits = init_logits(k, n, &mut rng);
    let mut head = LinearHead::zeros(c, k);

    let mut opt_p = Optimizer::new(cfg.optimizer, "projection", p * d);
    let mut opt_o = Optimizer::new(cfg.optimizer, "offset", p);
    let mut opt_l = Optimizer::new(cfg.optimizer, "logits", k * n);
    let mut opt_w = Optimizer::new(cfg.optimizer, "head.weights", c * k);
    let mut opt_b = Optimizer::new(cfg.optimizer, "head.bias", c);
    let thresholds = enc.thresholds();
    let mut final_acc = 0.0;

    for epoch in 0..cfg.schedule.total_epochs() {
        let (tau, hard) = cfg.schedule.step(epoch);
        logits.temperature = tau;
        let hard_words = threshold_words(&logits);

        let mut feats = Vec::with_capacity(train.len());
        let mut cache = Vec::with_capacity(train.len());
        for x in train.samples() {
            let z = enc.project(x)?;
            let (soft, dsoft) = enc.soft_bits_of(&z, &thresholds);
            let hard_bits = hard.then(|| enc.hard_bits_of(&z, &thresholds));
            let grads: Vec<_> = logits.rows().iter().map(|row| soft_parity_grad(row, tau, &soft)).collect();
            let f: Vec<f64> = match &hard_bits {
                Some(hb) => {
                    let b = BitString::from_bools(&hb.iter().map(|&v| v == 1.0).collect::<Vec<_>>());
                    hard_words.iter().map(|w| w.eval(&b)).collect()
                }
                None => grads.iter().map(|g| g.value).collect(),
            };
            feats.push(f);
            cache.push((dsoft, grads));
        }
        let class_logits: Vec<Vec<f64>> = feats.iter().map(|f| head.logits(f)).collect();
        let (loss, d_logits) = cross_entropy_grad(&class_logits, train.labels());
        if !loss.is_finite() {
            return Err(Error::training("projection", format!("non-finite loss at epoch {epoch}")));
        }
        final_acc = 100.0
            * class_logits
                .iter()
                .zip(train.labels())
                .filter(|(l, &y)| head.predict_logits(l) == y)
                .count() as f64
            / train.len() as f64;

        let mut gw = vec![0.0; c * k];
        let mut gb = vec![0.0; c];
        let mut gl = vec![0.0; k * n];
        let mut gp = vec![0.0; p * d];
        let mut go = vec![0.0; p];
        for (((x, f), dl), (dsoft, grads)) in train.samples().iter().zip(&feats).zip(&d_logits).zip(&cache) {
            let mut df = vec![0.0; k];
            for cc in 0..c {
                gb[cc] += dl[cc];
                for kk in 0..k {
                    gw[cc * k + kk] += dl[cc] * f[kk];
                    df[kk] += dl[cc] * head.weights[cc][kk];
                }
            }
            let mut dbits = vec![0.0; n];
            for (kk, g) in grads.iter().enumerate() {
                if df[kk] == 0.0 {
                    continue;
                }
                for i in 0..n {
                    gl[kk * n + i] += df[kk] * g.d_logits[i];
                    dbits[i] += df[kk] * g.d_input[i];
                }
            }
            if cfg.train_projection {
                for j in 0..p {
                    let dz: f64 = (0..mbits).map(|m| dbits[j * mbits + m] * dsoft[j * mbits + m]).sum();
                    go[j] += dz;
                    for (g, v) in gp[j * d..(j + 1) * d].iter_mut().zip(x) {
                        *g += dz * v;
                    }
                }
            }
        }
        let mut w_flat: Vec<f64> = head.weights.iter().flatten().copied().collect();
        for (g, w) in gw.iter_mut().zip(&w_flat) {
            *g += cfg.l2 * w;
        }
        opt_w.step(&mut w_flat, &gw)?;
        opt_b.step(&mut head.bias, &gb)?;
        for (cc, row) in head.weights.iter_mut().enumerate() {
            row.copy_from_slice(&w_flat[cc * k..(cc + 1) * k]);
        }
        let mut l_flat = logits.flat();
        opt_l.step(&mut l_flat, &gl)?;
        logits.set_flat(&l_flat);
        if cfg.train_projection {
            let mut p_flat: Vec<f64> = enc.projection.iter().flatten().copied().collect();
            opt_p.step(&mut p_flat, &gp)?;
            for (j, row) in enc.projection.iter_mut().enumerate() {
                row.copy_from_slice(&p_flat[j * d..(j + 1) * d]);
            }
            opt_o.step(&mut enc.offset, &go)?;
        }
    }

    let words = threshold_words(&logits);
    Ok(ProjectionModel {
        encoder: enc,
        words,
        head,
        final_train_accuracy: final_acc,
    })
}
