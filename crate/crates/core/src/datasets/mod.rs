//! Dataset types, generators, file ingestion and fixed encodings.

mod binarize;
mod io;
mod onehot;
mod pca;
mod planted;
mod split;
mod synthetic;

pub use binarize::{BinarizationMode, BinarizationModel};
pub use io::{
    load_bit_dataset, load_categorical_csv, load_continuous_binary, load_continuous_csv, write_bit_csv, BitCsvSchema,
};
pub use onehot::{CategoricalTable, OneHotEncoder};
pub use pca::PcaModel;
pub use planted::{generate_planted_parity, Preset, PlantedParitySpec, Sampling};
pub use split::{split, split_indices};
pub use synthetic::rotated_margin_task;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Binary samples with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBitDataset {
    n: usize,
    samples: Vec<BitString>,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledBitDataset {
    pub fn new(n: usize, samples: Vec<BitString>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Invalid(format!("class count must be at least 2, got {classes}")));
        }
        if samples.len() != labels.len() {
            return Err(Error::dim(samples.len(), labels.len()));
        }
        if let Some(s) = samples.iter().find(|s| s.len() != n) {
            return Err(Error::dim(n, s.len()));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Invalid(format!("label {l} out of range for {classes} classes")));
        }
        Ok(LabeledBitDataset {
            n,
            samples,
            labels,
            classes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn samples(&self) -> &[BitString] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledBitDataset {
            n: self.n,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.n, self.samples.clone(), labels, self.classes)
    }

    /// Samples as 0.0/1.0 rows.
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(BitString::to_f64).collect()
    }

    /// Empirical distribution over `{0,1}^n`, indexed little-endian.
    pub fn empirical_distribution(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::Invalid("empirical distribution of an empty dataset".into()));
        }
        if self.n > 20 {
            return Err(Error::Capacity {
                what: "dense distribution width",
                count: self.n as u128,
                limit: 20,
            });
        }
        let mut dist = vec![0.0; 1 << self.n];
        let w = 1.0 / self.len() as f64;
        for s in &self.samples {
            dist[s.to_index()] += w;
        }
        Ok(dist)
    }
}

/// Real-valued feature vectors with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDataset {
    d: usize,
    samples: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: usize,
}

impl ContinuousDataset {
    pub fn new(d: usize, samples: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Invalid(format!("class count must be at least 2, got {classes}")));
        }
        if samples.len() != labels.len() {
            return Err(Error::dim(samples.len(), labels.len()));
        }
        for s in &samples {
            if s.len() != d {
                return Err(Error::dim(d, s.len()));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("non-finite feature value".into()));
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Invalid(format!("label {l} out of range for {classes} classes")));
        }
        Ok(ContinuousDataset {
            d,
            samples,
            labels,
            classes,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        ContinuousDataset {
            d: self.d,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.d, self.samples.clone(), labels, self.classes)
    }
}

/// Anything with labels that [`split`] can partition.
pub trait Labeled: Sized {
    fn labels(&self) -> &[usize];
    fn classes(&self) -> usize;
    fn subset(&self, indices: &[usize]) -> Self;
}

impl Labeled for LabeledBitDataset {
    fn labels(&self) -> &[usize] {
        &self.labels
    }
    fn classes(&self) -> usize {
        self.classes
    }
    fn subset(&self, indices: &[usize]) -> Self {
        LabeledBitDataset::subset(self, indices)
    }
}

impl Labeled for ContinuousDataset {
    fn labels(&self) -> &[usize] {
        &self.labels
    }
    fn classes(&self) -> usize {
        self.classes
    }
    fn subset(&self, indices: &[usize]) -> Self {
        ContinuousDataset::subset(self, indices)
    }
}
