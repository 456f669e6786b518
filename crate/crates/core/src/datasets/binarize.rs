use serde::{Deserialize, Serialize};

use super::ContinuousDataset;
use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinarizationMode {
    /// Threshold every feature at zero. Only defined for one bit per feature.
    Sign,
    /// Equal-mass quantile cuts fitted on training data; with one bit per
    /// feature this is the median.
    Median,
}

/// Fixed per-feature thresholds. A value equal to a cut point falls below
/// it (strict `>`). With `M` bits per feature the bin index counts the
/// `2^M - 1` cuts exceeded and is written as an `M`-bit binary code, most
/// significant bit first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarizationModel {
    pub mode: BinarizationMode,
    pub bits_per_feature: usize,
    /// `cuts[j]` holds the ascending cut points of feature `j`.
    pub cuts: Vec<Vec<f64>>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BinarizationModel {
    pub fn fit(train: &ContinuousDataset, mode: BinarizationMode, bits_per_feature: usize) -> Result<Self> {
        if bits_per_feature == 0 {
            return Err(Error::Invalid("bits per feature must be at least 1".into()));
        }
        if bits_per_feature > 8 {
            return Err(Error::Invalid("at most 8 bits per feature".into()));
        }
        if train.is_empty() {
            return Err(Error::Fit("cannot fit a binarizer on an empty dataset".into()));
        }
        let cuts = match mode {
            BinarizationMode::Sign => {
                if bits_per_feature != 1 {
                    return Err(Error::Invalid("sign binarization emits exactly one bit per feature".into()));
                }
                vec![vec![0.0]; train.d()]
            }
            BinarizationMode::Median => {
                let bins = 1usize << bits_per_feature;
                (0..train.d())
                    .map(|j| {
                        let mut col: Vec<f64> = train.samples().iter().map(|x| x[j]).collect();
                        col.sort_by(f64::total_cmp);
                        (1..bins).map(|b| quantile(&col, b as f64 / bins as f64)).collect()
                    })
                    .collect()
            }
        };
        Ok(BinarizationModel {
            mode,
            bits_per_feature,
            cuts,
        })
    }

    pub fn output_width(&self) -> usize {
        self.cuts.len() * self.bits_per_feature
    }

    pub fn apply(&self, x: &[f64]) -> Result<BitString> {
        if x.len() != self.cuts.len() {
            return Err(Error::dim(self.cuts.len(), x.len()));
        }
        let m = self.bits_per_feature;
        let mut out = BitString::zeros(self.output_width());
        for (j, (&v, cuts)) in x.iter().zip(&self.cuts).enumerate() {
            let level = cuts.iter().filter(|&&c| v > c).count();
            for bit in 0..m {
                if (level >> (m - 1 - bit)) & 1 == 1 {
                    out.set(j * m + bit, true);
                }
            }
        }
        Ok(out)
    }

    pub fn apply_dataset(&self, data: &ContinuousDataset) -> Result<super::LabeledBitDataset> {
        let samples = data.samples().iter().map(|x| self.apply(x)).collect::<Result<Vec<_>>>()?;
        super::LabeledBitDataset::new(self.output_width(), samples, data.labels().to_vec(), data.classes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[&[f64]]) -> ContinuousDataset {
        let d = rows[0].len();
        ContinuousDataset::new(d, rows.iter().map(|r| r.to_vec()).collect(), vec![0; rows.len()], 2).unwrap()
    }

    #[test]
    fn sign_mode() {
        let m = BinarizationModel::fit(&data(&[&[1.0, 1.0]]), BinarizationMode::Sign, 1).unwrap();
        assert_eq!(m.apply(&[-0.2, 3.1]).unwrap().to_string(), "01");
    }

    #[test]
    fn median_tie_maps_to_zero() {
        let m = BinarizationModel::fit(&data(&[&[0.0], &[2.0], &[4.0]]), BinarizationMode::Median, 1).unwrap();
        assert_eq!(m.cuts[0], vec![2.0]);
        assert_eq!(m.apply(&[2.0]).unwrap().to_string(), "0");
        assert_eq!(m.apply(&[2.5]).unwrap().to_string(), "1");
    }

    #[test]
    fn constant_feature_always_zero() {
        let m = BinarizationModel::fit(&data(&[&[3.0], &[3.0]]), BinarizationMode::Median, 1).unwrap();
        assert_eq!(m.apply(&[3.0]).unwrap().to_string(), "0");
    }

    #[test]
    fn two_bit_quantile_codes() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let ds = ContinuousDataset::new(1, rows, vec![0; 100], 2).unwrap();
        let m = BinarizationModel::fit(&ds, BinarizationMode::Median, 2).unwrap();
        assert_eq!(m.cuts[0].len(), 3);
        assert_eq!(m.apply(&[0.0]).unwrap().to_string(), "00");
        assert_eq!(m.apply(&[30.0]).unwrap().to_string(), "01");
        assert_eq!(m.apply(&[60.0]).unwrap().to_string(), "10");
        assert_eq!(m.apply(&[99.0]).unwrap().to_string(), "11");
    }

    #[test]
    fn sign_mode_rejects_multibit() {
        assert!(BinarizationModel::fit(&data(&[&[1.0]]), BinarizationMode::Sign, 2).is_err());
    }
}
