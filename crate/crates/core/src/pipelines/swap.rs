use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::native::select_top;
use super::{aggregate, train_native_binary, HeadConfig, NativeBinaryConfig};
use crate::datasets::{split, LabeledBitDataset};
use crate::error::{Error, Result};
use crate::parity::{empirical_parity_features, sample_word_pool, ParityWord, DEFAULT_ENUMERATION_CAP};
use crate::simulator::{Ansatz, DiagonalObservable, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisSource {
    D,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MomentSource {
    D,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwapCell {
    pub basis: BasisSource,
    pub moments: MomentSource,
}

impl SwapCell {
    pub const ALL: [SwapCell; 4] = [
        SwapCell { basis: BasisSource::D, moments: MomentSource::D },
        SwapCell { basis: BasisSource::D, moments: MomentSource::Q },
        SwapCell { basis: BasisSource::Q, moments: MomentSource::D },
        SwapCell { basis: BasisSource::Q, moments: MomentSource::Q },
    ];

    pub fn label(self) -> String {
        format!("{:?}+{:?}", self.basis, self.moments)
    }
}

/// Feature matrix for `words` on `dataset`. `D`: hard parities of the raw
/// strings. `Q`: for each sample, `U(theta)|b>` followed by `<Z^s>` per
/// word.
pub fn compute_moments(
    moments: MomentSource,
    words: &[ParityWord],
    dataset: &LabeledBitDataset,
    circuit: Option<(&Ansatz, &[f64])>,
) -> Result<Vec<Vec<f64>>> {
    match moments {
        MomentSource::D => empirical_parity_features(dataset, words),
        MomentSource::Q => {
            let (ansatz, theta) = circuit.ok_or_else(|| Error::Invalid("Q moments need circuit angles".into()))?;
            if ansatz.n_qubits != dataset.n() {
                return Err(Error::dim(dataset.n(), ansatz.n_qubits));
            }
            if let Some(w) = words.iter().find(|w| w.len() != dataset.n()) {
                return Err(Error::dim(dataset.n(), w.len()));
            }
            let observables: Vec<DiagonalObservable> = words.iter().map(DiagonalObservable::hard).collect();
            dataset
                .samples()
                .par_iter()
                .map(|b| {
                    let mut s = StateVector::basis_state(b)?;
                    ansatz.apply(&mut s, theta)?;
                    let probs = s.born_probabilities();
                    Ok(observables.iter().map(|o| o.expect_probs(&probs)).collect())
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwapConfig {
    pub native: NativeBinaryConfig,
    /// Highest order in the restricted D pool.
    pub d_max_order: usize,
}

impl Default for SwapConfig {
    fn default() -> Self {
        SwapConfig {
            native: NativeBinaryConfig::default(),
            d_max_order: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapSeedResult {
    pub seed: u64,
    /// Test accuracy per cell, in `SwapCell::ALL` order.
    pub accuracies: [f64; 4],
    pub d_words: Vec<ParityWord>,
    pub q_words: Vec<ParityWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub seeds: Vec<SwapSeedResult>,
    /// Mean test accuracy per cell, in `SwapCell::ALL` order.
    pub means: [f64; 4],
    pub stds: [f64; 4],
}

impl SwapReport {
    pub fn mean(&self, cell: SwapCell) -> f64 {
        self.means[SwapCell::ALL.iter().position(|c| *c == cell).expect("valid cell")]
    }
}

fn fit_and_score(
    head: &HeadConfig,
    moments: MomentSource,
    words: &[ParityWord],
    train: &LabeledBitDataset,
    test: &LabeledBitDataset,
    circuit: (&Ansatz, &[f64]),
) -> Result<f64> {
    let ftr = compute_moments(moments, words, train, Some(circuit))?;
    let fte = compute_moments(moments, words, test, Some(circuit))?;
    let h = head.train(&ftr, train.labels(), train.classes())?;
    h.accuracy(&fte, test.labels())
}

fn run_seed(dataset: &LabeledBitDataset, cfg: &SwapConfig, seed: u64) -> Result<SwapSeedResult> {
    let (train, test) = split(dataset, cfg.native.test_fraction, seed, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x000d_b0a5);
    let pool = sample_word_pool(dataset.n(), cfg.d_max_order, cfg.native.k_pool, DEFAULT_ENUMERATION_CAP, &mut rng)?;
    let d_words: Vec<ParityWord> = select_top(&train, &pool, cfg.native.k, cfg.native.min_score)?;
    let model = train_native_binary(&train, &cfg.native, seed)?;
    let circuit = (&model.ansatz, model.theta.as_slice());
    let mut accuracies = [0.0; 4];
    for (slot, cell) in accuracies.iter_mut().zip(SwapCell::ALL) {
        let words = match cell.basis {
            BasisSource::D => &d_words,
            BasisSource::Q => &model.words,
        };
        *slot = fit_and_score(&cfg.native.head, cell.moments, words, &train, &test, circuit)?;
    }
    Ok(SwapSeedResult {
        seed,
        accuracies,
        d_words,
        q_words: model.words,
    })
}

/// Trains both bases per seed and scores all four basis/moment cells with
/// the same head trainer.
pub fn run_swap(dataset: &LabeledBitDataset, cfg: &SwapConfig, seeds: &[u64]) -> Result<SwapReport> {
    let seeds: Vec<SwapSeedResult> = seeds.par_iter().map(|&s| run_seed(dataset, cfg, s)).collect::<Result<_>>()?;
    let mut means = [0.0; 4];
    let mut stds = [0.0; 4];
    for c in 0..4 {
        let accs: Vec<f64> = seeds.iter().map(|s| s.accuracies[c]).collect();
        let (m, s, _) = aggregate(&accs);
        means[c] = m;
        stds[c] = s;
    }
    Ok(SwapReport { seeds, means, stds })
}
