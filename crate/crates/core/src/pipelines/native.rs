use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HeadConfig;
use crate::datasets::LabeledBitDataset;
use crate::error::{Error, Result};
use crate::losses::{class_means, disc_loss_grad, diversity_penalty_grad, mmd_exact, MmdConfig, Optimizer, OptimizerConfig};
use crate::models::{DeployedParityClassifier, LinearHead};
use crate::parity::{empirical_parity_features, enumerate_words, soft_parity_grad, threshold_words, variance_rank, ParityWord, WordLogits, DEFAULT_ENUMERATION_CAP};
use crate::simulator::{adjoint_grad, param_shift_vjp, Ansatz, GradientMethod, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolInit {
    /// Standard normal logits.
    #[default]
    Random,
    /// Logits at `+-c` on the best variance-ranked words of order <= 3;
    /// leftover rows random.
    TopKClassical,
}

/// Scaling of the diversity penalty in the logit objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiversityNorm {
    /// Raw sum over ordered pairs.
    Sum,
    /// Sum divided by the number of ordered pairs `K(K-1)`.
    PairMean,
    /// Sum divided by `K(K-1) n`: the mean overlap per pair and qubit.
    #[default]
    PairQubitMean,
}

impl DiversityNorm {
    /// Multiplier on the raw penalty for `k` words over `n` qubits.
    pub fn scale(self, k: usize, n: usize) -> f64 {
        match self {
            _ if k < 2 => 0.0,
            DiversityNorm::Sum => 1.0,
            DiversityNorm::PairMean => 1.0 / (k * (k - 1)) as f64,
            DiversityNorm::PairQubitMean => 1.0 / (k * (k - 1) * n.max(1)) as f64,
        }
    }
}

/// How per-word class-mean variances combine into the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscReduction {
    /// Average over pool words.
    Mean,
    /// Sum over pool words, so each word's reward does not shrink as the
    /// pool grows.
    #[default]
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NativeBinaryConfig {
    pub k: usize,
    pub k_pool: usize,
    pub epochs: usize,
    pub layers: usize,
    pub lr: f64,
    pub dw: f64,
    pub lambda: f64,
    pub diversity_norm: DiversityNorm,
    pub disc_reduction: DiscReduction,
    pub pool_init: PoolInit,
    pub init_scale: f64,
    pub init_max_order: usize,
    pub tau: f64,
    /// Selected words must reach this fraction of the best variance score.
    pub min_score: f64,
    pub mmd: MmdConfig,
    pub gradient: GradientMethod,
    /// Skip circuit training (Q moments then use the initial angles).
    pub train_theta: bool,
    pub head: HeadConfig,
    pub test_fraction: f64,
}

impl Default for NativeBinaryConfig {
    fn default() -> Self {
        NativeBinaryConfig {
            k: 128,
            k_pool: 256,
            epochs: 200,
            layers: 8,
            lr: 0.01,
            dw: 5.0,
            lambda: 1.0,
            diversity_norm: DiversityNorm::PairQubitMean,
            disc_reduction: DiscReduction::Sum,
            pool_init: PoolInit::Random,
            init_scale: 4.0,
            init_max_order: 3,
            tau: 1.0,
            min_score: 0.5,
            mmd: MmdConfig::default(),
            gradient: GradientMethod::Adjoint,
            train_theta: true,
            head: HeadConfig::default(),
            test_fraction: 0.3,
        }
    }
}

impl NativeBinaryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.k_pool {
            return Err(Error::Config(format!("need 0 < K <= K_pool, got K={} K_pool={}", self.k, self.k_pool)));
        }
        if !(self.tau > 0.0) || !self.dw.is_finite() || !self.lambda.is_finite() {
            return Err(Error::Config("tau must be positive and weights finite".into()));
        }
        if !(0.0..=1.0).contains(&self.min_score) {
            return Err(Error::Config(format!("min_score {} not in [0,1]", self.min_score)));
        }
        OptimizerConfig::with_lr(self.lr, self.epochs).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeBinaryModel {
    pub ansatz: Ansatz,
    pub theta: Vec<f64>,
    pub logits: WordLogits,
    /// Selected words, strongest first.
    pub words: Vec<ParityWord>,
    pub head: LinearHead,
    pub final_mmd: f64,
    pub final_disc: f64,
    pub warnings: Vec<String>,
}

impl NativeBinaryModel {
    pub fn classifier(&self, n: usize) -> Result<DeployedParityClassifier> {
        DeployedParityClassifier::new(n, self.words.clone(), self.head.clone())
    }
}

fn init_pool(train: &LabeledBitDataset, cfg: &NativeBinaryConfig, rng: &mut ChaCha8Rng) -> Result<WordLogits> {
    let n = train.n();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cfg.k_pool);
    if cfg.pool_init == PoolInit::TopKClassical {
        let candidates = enumerate_words(n, cfg.init_max_order, DEFAULT_ENUMERATION_CAP)?;
        let ranked = variance_rank(train, &candidates)?;
        let words: Vec<ParityWord> = ranked.into_iter().take(cfg.k_pool).map(|s| s.word).collect();
        rows.extend(WordLogits::from_words(&words, cfg.init_scale).rows().iter().cloned());
    }
    while rows.len() < cfg.k_pool {
        rows.push((0..n).map(|_| rng.sample(StandardNormal)).collect());
    }
    WordLogits::new(rows, cfg.tau)
}

/// Soft features of every pool word on every sample, plus gradients of the
/// logit objective `-lambda * disc + dw * div`.
fn logit_step(
    logits: &WordLogits,
    inputs: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    cfg: &NativeBinaryConfig,
) -> Result<(f64, Vec<f64>)> {
    let tau = logits.temperature;
    let k = logits.k();
    let n = logits.n();
    // per word: feature column and per-sample logit gradients
    let per_word: Vec<(Vec<f64>, Vec<Vec<f64>>)> = logits
        .rows()
        .par_iter()
        .map(|row| {
            let mut vals = Vec::with_capacity(inputs.len());
            let mut grads = Vec::with_capacity(inputs.len());
            for b in inputs {
                let g = soft_parity_grad(row, tau, b);
                vals.push(g.value);
                grads.push(g.d_logits);
            }
            (vals, grads)
        })
        .collect();
    let features: Vec<Vec<f64>> = (0..inputs.len()).map(|j| per_word.iter().map(|(v, _)| v[j]).collect()).collect();
    let (means, kept) = class_means(&features, labels, classes)?;
    let (disc, d_means) = disc_loss_grad(&means)?;
    let reduction = match cfg.disc_reduction {
        DiscReduction::Mean => 1.0,
        DiscReduction::Sum => k as f64,
    };

    // dL/dfeature for a sample of class c is -lambda * dmu_c / n_c
    let mut slot = vec![None; classes];
    for (i, &(c, count)) in kept.iter().enumerate() {
        slot[c] = Some((i, count as f64));
    }
    let mut grad = vec![0.0; k * n];
    for (kk, (_, grads)) in per_word.iter().enumerate() {
        for (j, g) in grads.iter().enumerate() {
            let (i, count) = slot[labels[j]].expect("class has samples");
            let df = -cfg.lambda * reduction * d_means[i][kk] / count;
            for (acc, d) in grad[kk * n..(kk + 1) * n].iter_mut().zip(g) {
                *acc += df * d;
            }
        }
    }
    let (_, d_div) = diversity_penalty_grad(logits);
    let scale = cfg.diversity_norm.scale(k, n);
    for (acc, d) in grad.iter_mut().zip(d_div.iter().flatten()) {
        *acc += cfg.dw * scale * d;
    }
    Ok((disc * reduction, grad))
}

/// The `k` best words by variance score, dropping any below `min_score`.
pub(crate) fn select_top(data: &LabeledBitDataset, words: &[ParityWord], k: usize, min_score: f64) -> Result<Vec<ParityWord>> {
    Ok(variance_rank(data, words)?
        .into_iter()
        .take(k)
        .filter(|s| s.score >= min_score)
        .map(|s| s.word)
        .collect())
}

fn born(ansatz: &Ansatz, theta: &[f64]) -> Result<Vec<f64>> {
    let mut s = StateVector::zero(ansatz.n_qubits)?;
    ansatz.apply(&mut s, theta)?;
    Ok(s.born_probabilities())
}

/// Value and gradient of the MMD between the circuit's Born distribution
/// (from `|0...0>`) and `target`.
fn mmd_step(ansatz: &Ansatz, theta: &[f64], target: &[f64], h: f64, method: GradientMethod) -> Result<(f64, Vec<f64>)> {
    let n = ansatz.n_qubits;
    let p = born(ansatz, theta)?;
    let (value, dp) = mmd_exact(&p, target, n, h)?;
    let grad = match method {
        GradientMethod::Adjoint => adjoint_grad(ansatz, theta, &StateVector::zero(n)?, &dp)?.1,
        GradientMethod::ParameterShift => {
            // MMD is quadratic in the probabilities: shift each probability
            // and contract with dMMD/dp.
            let mut failure = None;
            let g = param_shift_vjp(
                theta,
                |t| {
                    born(ansatz, t).unwrap_or_else(|e| {
                        failure = Some(e);
                        vec![f64::NAN; dp.len()]
                    })
                },
                &dp,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            g
        }
    };
    Ok((value, grad))
}

/// Trains the circuit angles against the data marginal and the word pool
/// against the discriminative reward, then thresholds the pool, keeps the
/// `K` best distinct nonempty words by data-moment variance and fits a
/// linear head on their empirical parities.
pub fn train_native_binary(train: &LabeledBitDataset, cfg: &NativeBinaryConfig, seed: u64) -> Result<NativeBinaryModel> {
    cfg.validate()?;
    let n = train.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut logits = init_pool(train, cfg, &mut rng)?;
    let ansatz = Ansatz::new(n, cfg.layers);
    let mut theta: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-PI..PI)).collect();

    let opt_cfg = OptimizerConfig::with_lr(cfg.lr, cfg.epochs);
    let mut opt_l = Optimizer::new(opt_cfg, "logits", logits.k() * n);
    let mut opt_t = Optimizer::new(opt_cfg, "theta", theta.len());
    let inputs = train.to_f64_rows();
    let target = if cfg.train_theta { train.empirical_distribution()? } else { Vec::new() };
    let h = cfg.mmd.bandwidth_for(n)?;

    let (mut final_mmd, mut final_disc) = (f64::NAN, f64::NAN);
    for epoch in 0..cfg.epochs {
        let (disc, g_l) = logit_step(&logits, &inputs, train.labels(), train.classes(), cfg)?;
        if !disc.is_finite() {
            return Err(Error::training("logits", format!("non-finite reward at epoch {epoch}")));
        }
        final_disc = disc;
        let mut flat = logits.flat();
        opt_l.step(&mut flat, &g_l)?;
        logits.set_flat(&flat);

        if cfg.train_theta {
            let (mmd, g_t) = mmd_step(&ansatz, &theta, &target, h, cfg.gradient)?;
            if !mmd.is_finite() {
                return Err(Error::training("theta", format!("non-finite MMD at epoch {epoch}")));
            }
            final_mmd = mmd;
            opt_t.step(&mut theta, &g_t)?;
        }
    }

    let mut warnings = Vec::new();
    let mut pool: Vec<ParityWord> = threshold_words(&logits).into_iter().filter(|w| w.order() > 0).collect();
    pool.sort();
    pool.dedup();
    let words: Vec<ParityWord> = if pool.is_empty() {
        warnings.push("empty selection: every pool word thresholded to zero".to_string());
        Vec::new()
    } else {
        select_top(train, &pool, cfg.k, cfg.min_score)?
    };
    let features = empirical_parity_features(train, &words)?;
    let head = cfg.head.train(&features, train.labels(), train.classes())?;
    Ok(NativeBinaryModel {
        ansatz,
        theta,
        logits,
        words,
        head,
        final_mmd,
        final_disc,
        warnings,
    })
}
