use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiversityNorm;
use crate::datasets::{ContinuousDataset, LabeledBitDataset, PcaModel};
use crate::error::{Error, Result};
use crate::losses::{
    class_means, class_separation_grad, cross_entropy_grad, diversity_penalty_grad, sparsity_penalty_grad, LossWeights, Optimizer,
    OptimizerConfig, TemperatureSchedule,
};
use crate::models::LinearHead;
use crate::parity::{threshold_words, ParityWord, WordLogits};
use crate::simulator::{adjoint_grad, Ansatz, DiagonalObservable, SoftForm, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpqcConfig {
    pub n_qubits: usize,
    pub layers: usize,
    pub k: usize,
    pub weights: LossWeights,
    pub diversity_norm: DiversityNorm,
    pub schedule: TemperatureSchedule,
    pub optimizer: OptimizerConfig,
    pub soft_form: SoftForm,
    /// Samples per optimizer step; 0 means full batch.
    pub batch_size: usize,
    /// Subsample the training set to at most this many rows.
    pub max_train: Option<usize>,
    pub test_fraction: f64,
}

impl Default for SpqcConfig {
    fn default() -> Self {
        SpqcConfig {
            n_qubits: 14,
            layers: 6,
            k: 128,
            weights: LossWeights::default(),
            diversity_norm: DiversityNorm::PairMean,
            schedule: TemperatureSchedule::default(),
            optimizer: OptimizerConfig::with_lr(0.01, 0),
            soft_form: SoftForm::Cosine,
            batch_size: 64,
            max_train: None,
            test_fraction: 0.3,
        }
    }
}

/// The four terms of the sPQC objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub cross_entropy: f64,
    pub diversity: f64,
    pub sparsity: f64,
    pub separation: f64,
}

impl LossTerms {
    pub fn total(&self, w: &LossWeights) -> f64 {
        self.cross_entropy + w.alpha * self.diversity + w.beta * self.sparsity + w.gamma * self.separation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpqcModel {
    pub ansatz: Ansatz,
    pub theta: Vec<f64>,
    pub logits: WordLogits,
    /// Z-strings over the qubits.
    pub words: Vec<ParityWord>,
    pub head: LinearHead,
    pub pca: Option<PcaModel>,
    /// Training rows that could not be amplitude-encoded.
    pub skipped: usize,
    pub final_loss: f64,
}

fn encode(x: &[f64], pca: Option<&PcaModel>, n: usize) -> Result<Option<StateVector>> {
    let v = match pca {
        Some(p) => p.transform(x)?,
        None => x.to_vec(),
    };
    match StateVector::amplitude_encode(&v, n) {
        Ok(s) => Ok(Some(s)),
        Err(Error::Encoding(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

impl SpqcModel {
    /// Hard-word expectations of the encoded sample; `None` for rows that
    /// cannot be encoded.
    pub fn features(&self, b: &[f64]) -> Result<Option<Vec<f64>>> {
        let Some(mut s) = encode(b, self.pca.as_ref(), self.ansatz.n_qubits)? else {
            return Ok(None);
        };
        self.ansatz.apply(&mut s, &self.theta)?;
        let probs = s.born_probabilities();
        Ok(Some(self.words.iter().map(|w| DiagonalObservable::hard(w).expect_probs(&probs)).collect()))
    }

    /// Unencodable rows fall back to the head's bias.
    pub fn predict(&self, b: &[f64]) -> Result<usize> {
        let f = self.features(b)?.unwrap_or_else(|| vec![0.0; self.words.len()]);
        Ok(self.head.predict_logits(&self.head.logits(&f)))
    }

    pub fn accuracy(&self, data: &LabeledBitDataset) -> Result<f64> {
        let rows = data.to_f64_rows();
        let preds: Vec<usize> = rows.par_iter().map(|r| self.predict(r)).collect::<Result<_>>()?;
        let hits = preds.iter().zip(data.labels()).filter(|(p, y)| p == y).count();
        Ok(100.0 * hits as f64 / data.len().max(1) as f64)
    }
}

struct Forward {
    features: Vec<f64>,
    /// Per word, the contraction with each qubit pinned.
    pinned: Vec<Vec<[f64; 2]>>,
}

/// Amplitude-encodes each sample, runs the circuit and reads relaxed
/// Z-string expectations; trains angles, word logits and a linear head
/// under the two-phase temperature schedule.
pub fn train_spqc(train: &LabeledBitDataset, cfg: &SpqcConfig, seed: u64) -> Result<SpqcModel> {
    cfg.optimizer.validate()?;
    cfg.schedule.validate()?;
    cfg.weights.validate()?;
    if cfg.k == 0 {
        return Err(Error::Config("K must be positive".into()));
    }
    let nq = cfg.n_qubits;
    let dim = 1usize << nq;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows = train.to_f64_rows();
    let mut labels = train.labels().to_vec();
    if let Some(m) = cfg.max_train.filter(|&m| m < rows.len()) {
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(m);
        idx.sort_unstable();
        rows = idx.iter().map(|&i| rows[i].clone()).collect();
        labels = idx.iter().map(|&i| labels[i]).collect();
    }
    let pca = if train.n() > dim {
        let cont = ContinuousDataset::new(train.n(), rows.clone(), labels.clone(), train.classes())?;
        Some(PcaModel::fit(&cont, dim)?)
    } else {
        None
    };
    let mut states = Vec::with_capacity(rows.len());
    let mut kept_labels = Vec::with_capacity(rows.len());
    let mut skipped = 0;
    for (r, &y) in rows.iter().zip(&labels) {
        match encode(r, pca.as_ref(), nq)? {
            Some(s) => {
                states.push(s);
                kept_labels.push(y);
            }
            None => skipped += 1,
        }
    }
    if states.is_empty() {
        return Err(Error::training("spqc", "no encodable training rows"));
    }

    let classes = train.classes();
    let k = cfg.k;
    let ansatz = Ansatz::new(nq, cfg.layers);
    let mut theta: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-0.1..0.1)).collect();
    let mut logits = WordLogits::new(
        (0..k).map(|_| (0..nq).map(|_| rng.sample(StandardNormal)).collect()).collect(),
        cfg.schedule.tau_start,
    )?;
    let mut head = LinearHead::zeros(classes, k);

    let batch = if cfg.batch_size == 0 { states.len() } else { cfg.batch_size.min(states.len()) };
    let steps_per_epoch = states.len().div_ceil(batch);
    let horizon = cfg.schedule.total_epochs() * steps_per_epoch;
    let opt_cfg = OptimizerConfig { horizon, ..cfg.optimizer };
    let mut opt_t = Optimizer::new(opt_cfg, "theta", theta.len());
    let mut opt_l = Optimizer::new(opt_cfg, "logits", k * nq);
    let mut opt_w = Optimizer::new(opt_cfg, "head.weights", classes * k);
    let mut opt_b = Optimizer::new(opt_cfg, "head.bias", classes);
    let w = cfg.weights;
    let div_scale = cfg.diversity_norm.scale(k, nq);

    let mut order: Vec<usize> = (0..states.len()).collect();
    let mut final_loss = f64::NAN;
    for epoch in 0..cfg.schedule.total_epochs() {
        let (tau, hard) = cfg.schedule.step(epoch);
        logits.temperature = tau;
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let soft_obs: Vec<DiagonalObservable> = logits.rows().iter().map(|r| DiagonalObservable::soft(r, tau, cfg.soft_form)).collect();
            let hard_obs: Vec<DiagonalObservable> = threshold_words(&logits).iter().map(DiagonalObservable::hard).collect();
            let soft_diags: Vec<Vec<f64>> = soft_obs.par_iter().map(|o| o.diagonal()).collect();

            let fwd: Vec<Forward> = chunk
                .par_iter()
                .map(|&j| {
                    let mut s = states[j].clone();
                    ansatz.apply(&mut s, &theta)?;
                    let probs = s.born_probabilities();
                    let mut features = Vec::with_capacity(k);
                    let mut pinned = Vec::with_capacity(k);
                    for (so, ho) in soft_obs.iter().zip(&hard_obs) {
                        let (v, p) = so.expect_with_pinned(&probs);
                        features.push(if hard { ho.expect_probs(&probs) } else { v });
                        pinned.push(p);
                    }
                    Ok(Forward { features, pinned })
                })
                .collect::<Result<_>>()?;
            let batch_labels: Vec<usize> = chunk.iter().map(|&j| kept_labels[j]).collect();
            let feats: Vec<Vec<f64>> = fwd.iter().map(|f| f.features.clone()).collect();
            let class_logits: Vec<Vec<f64>> = feats.iter().map(|f| head.logits(f)).collect();
            let (ce, d_logits) = cross_entropy_grad(&class_logits, &batch_labels);

            // dL/dfeature per sample
            let mut df: Vec<Vec<f64>> = d_logits
                .iter()
                .map(|dl| (0..k).map(|kk| (0..classes).map(|c| dl[c] * head.weights[c][kk]).sum()).collect())
                .collect();
            let (means, kept) = class_means(&feats, &batch_labels, classes)?;
            let separation = if means.len() >= 2 && w.gamma != 0.0 {
                let (sep, d_means) = class_separation_grad(&means)?;
                for (row, &y) in df.iter_mut().zip(&batch_labels) {
                    let i = kept.iter().position(|&(c, _)| c == y).expect("class present");
                    let count = kept[i].1 as f64;
                    for (d, g) in row.iter_mut().zip(&d_means[i]) {
                        *d += w.gamma * g / count;
                    }
                }
                sep
            } else {
                0.0
            };
            let (div, d_div) = diversity_penalty_grad(&logits);
            let (sparse, d_sparse) = sparsity_penalty_grad(&logits);
            let terms = LossTerms {
                cross_entropy: ce,
                diversity: div * div_scale,
                sparsity: sparse,
                separation,
            };
            final_loss = terms.total(&w);
            if !final_loss.is_finite() {
                return Err(Error::training("spqc", format!("non-finite loss at epoch {epoch}")));
            }

            // head
            let mut gw = vec![0.0; classes * k];
            let mut gb = vec![0.0; classes];
            for (f, dl) in feats.iter().zip(&d_logits) {
                for c in 0..classes {
                    gb[c] += dl[c];
                    for kk in 0..k {
                        gw[c * k + kk] += dl[c] * f[kk];
                    }
                }
            }
            // logits, through the soft observables
            let mut gl = vec![0.0; k * nq];
            for (f, row) in fwd.iter().zip(&df) {
                for kk in 0..k {
                    for i in 0..nq {
                        let l = logits.rows()[kk][i];
                        gl[kk * nq + i] += row[kk] * f.pinned[kk][i][1] * cfg.soft_form.entry_grad(l, tau);
                    }
                }
            }
            for (g, (a, b)) in gl.iter_mut().zip(d_div.iter().flatten().zip(d_sparse.iter().flatten())) {
                *g += w.alpha * div_scale * a + w.beta * b;
            }
            // angles, by one adjoint sweep per sample on the weighted diagonal
            let gt = chunk
                .par_iter()
                .zip(&df)
                .map(|(&j, row)| {
                    let mut diag = vec![0.0; dim];
                    for (d, coef) in soft_diags.iter().zip(row) {
                        if *coef != 0.0 {
                            for (o, v) in diag.iter_mut().zip(d) {
                                *o += coef * v;
                            }
                        }
                    }
                    adjoint_grad(&ansatz, &theta, &states[j], &diag).map(|(_, g)| g)
                })
                .try_reduce(|| vec![0.0; theta.len()], |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    Ok(a)
                })?;

            let mut w_flat: Vec<f64> = head.weights.iter().flatten().copied().collect();
            opt_w.step(&mut w_flat, &gw)?;
            for (c, r) in head.weights.iter_mut().enumerate() {
                r.copy_from_slice(&w_flat[c * k..(c + 1) * k]);
            }
            opt_b.step(&mut head.bias, &gb)?;
            let mut l_flat = logits.flat();
            opt_l.step(&mut l_flat, &gl)?;
            logits.set_flat(&l_flat);
            opt_t.step(&mut theta, &gt)?;
        }
    }

    let words = threshold_words(&logits);
    Ok(SpqcModel {
        ansatz,
        theta,
        logits,
        words,
        head,
        pca,
        skipped,
        final_loss,
    })
}
