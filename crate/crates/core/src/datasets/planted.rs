use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledBitDataset;
use crate::bits::BitString;
use crate::error::{Error, Result};

/// Largest width accepted for exhaustive enumeration.
pub const EXHAUSTIVE_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Every string of `{0,1}^n` exactly once, in index order.
    Exhaustive,
    /// Independent fair bits.
    Uniform { count: usize },
}

/// A labelling rule `y = XOR of the bits in planted_subset`, plus sampling
/// and label noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedParitySpec {
    pub n: usize,
    pub planted_subset: Vec<usize>,
    pub sampling: Sampling,
    pub label_noise: f64,
}

impl PlantedParitySpec {
    pub fn exhaustive(n: usize, planted_subset: Vec<usize>) -> Result<Self> {
        let spec = PlantedParitySpec {
            n,
            planted_subset,
            sampling: Sampling::Exhaustive,
            label_noise: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(n: usize, planted_subset: Vec<usize>, count: usize) -> Result<Self> {
        let spec = PlantedParitySpec {
            n,
            planted_subset,
            sampling: Sampling::Uniform { count },
            label_noise: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.planted_subset.is_empty() {
            return Err(Error::Invalid("planted subset must be nonempty".into()));
        }
        if let Some(&p) = self.planted_subset.iter().find(|&&p| p >= self.n) {
            return Err(Error::Invalid(format!("planted position {p} out of range for n={}", self.n)));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::Invalid(format!("label noise {} not in [0,1)", self.label_noise)));
        }
        if self.sampling == Sampling::Exhaustive && self.n > EXHAUSTIVE_MAX_N {
            return Err(Error::Capacity {
                what: "exhaustive enumeration width",
                count: self.n as u128,
                limit: EXHAUSTIVE_MAX_N as u128,
            });
        }
        Ok(())
    }

    pub fn planted_word(&self) -> BitString {
        BitString::from_positions(self.n, &self.planted_subset).expect("validated subset")
    }
}

pub fn generate_planted_parity(spec: &PlantedParitySpec, seed: u64) -> Result<LabeledBitDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = spec.planted_word();
    let samples: Vec<BitString> = match spec.sampling {
        Sampling::Exhaustive => (0..1usize << spec.n).map(|i| BitString::from_index(i, spec.n)).collect(),
        Sampling::Uniform { count } => (0..count)
            .map(|_| {
                let mut b = BitString::zeros(spec.n);
                for i in 0..spec.n {
                    if rng.random::<bool>() {
                        b.set(i, true);
                    }
                }
                b
            })
            .collect(),
    };
    let labels = samples
        .iter()
        .map(|b| {
            let y = word.and_parity(b) as usize;
            if spec.label_noise > 0.0 && rng.random::<f64>() < spec.label_noise {
                1 - y
            } else {
                y
            }
        })
        .collect();
    LabeledBitDataset::new(spec.n, samples, labels, 2)
}

/// Named benchmark generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// All 32 strings of length 5, label = XOR of every bit.
    Parity5,
    /// n = 10, label = XOR of bits {1,2,3,5,7}; 1124 uniform samples.
    #[serde(rename = "parity5_5")]
    Parity5Plus5,
    /// n = 10, label = XOR of a seeded random subset of 4 bits (three XOR
    /// gates); 1000 uniform samples.
    #[serde(rename = "synthetic_3xor")]
    Synthetic3Xor,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Parity5, Preset::Parity5Plus5, Preset::Synthetic3Xor];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Parity5 => "parity5",
            Preset::Parity5Plus5 => "parity5_5",
            Preset::Synthetic3Xor => "synthetic_3xor",
        }
    }

    /// The generating spec. `seed` only affects presets whose planted
    /// subset is drawn at random.
    pub fn spec(self, seed: u64) -> PlantedParitySpec {
        match self {
            Preset::Parity5 => PlantedParitySpec::exhaustive(5, (0..5).collect()).unwrap(),
            Preset::Parity5Plus5 => PlantedParitySpec::uniform(10, vec![1, 2, 3, 5, 7], 1124).unwrap(),
            Preset::Synthetic3Xor => synthetic_xor_spec(10, 4, 1000, seed),
        }
    }

    pub fn generate(self, seed: u64) -> Result<LabeledBitDataset> {
        generate_planted_parity(&self.spec(seed), seed)
    }
}

/// Planted subset = first `order` positions of a seeded shuffle of `0..n`.
pub fn synthetic_xor_spec(n: usize, order: usize, count: usize, seed: u64) -> PlantedParitySpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_3a0e);
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut rng);
    let mut subset = positions[..order.min(n)].to_vec();
    subset.sort_unstable();
    PlantedParitySpec {
        n,
        planted_subset: subset,
        sampling: Sampling::Uniform { count },
        label_noise: 0.0,
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown dataset generator `{s}`")))
    }
}
