use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Labeled;
use crate::error::{Error, Result};

/// Index partition `(train, test)`, each sorted ascending.
pub fn split_indices(
    labels: &[usize],
    classes: usize,
    test_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!("test fraction {test_fraction} must be in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if stratified {
        for c in 0..classes {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            if idx.is_empty() {
                continue;
            }
            if idx.len() < 2 {
                return Err(Error::Split(format!("class {c} has fewer than 2 samples")));
            }
            idx.shuffle(&mut rng);
            let k = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
            test.extend_from_slice(&idx[..k]);
            train.extend_from_slice(&idx[k..]);
        }
    } else {
        if labels.len() < 2 {
            return Err(Error::Split("need at least 2 samples".into()));
        }
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split<D: Labeled>(dataset: &D, test_fraction: f64, seed: u64, stratified: bool) -> Result<(D, D)> {
    let (train, test) = split_indices(dataset.labels(), dataset.classes(), test_fraction, seed, stratified)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Preset;

    #[test]
    fn stratified_quarter_of_parity5() {
        let ds = Preset::Parity5.generate(0).unwrap();
        let (train, test) = split(&ds, 0.25, 1, true).unwrap();
        assert_eq!(test.len(), 8);
        assert_eq!(test.class_counts(), vec![4, 4]);
        assert_eq!(train.len(), 24);
    }

    #[test]
    fn same_seed_same_split() {
        let ds = Preset::Parity5Plus5.generate(0).unwrap();
        let a = split_indices(ds.labels(), 2, 0.3, 5, true).unwrap();
        let b = split_indices(ds.labels(), 2, 0.3, 5, true).unwrap();
        assert_eq!(a, b);
        let (train, test) = a;
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
    }

    #[test]
    fn zero_fraction_is_error() {
        assert!(matches!(split_indices(&[0, 1, 0, 1], 2, 0.0, 0, true), Err(Error::Split(_))));
        assert!(split_indices(&[0, 1, 0, 1], 2, 1.0, 0, false).is_err());
    }

    #[test]
    fn singleton_class_cannot_stratify() {
        assert!(matches!(split_indices(&[0, 0, 0, 1], 2, 0.5, 0, true), Err(Error::Split(_))));
    }

    #[test]
    fn stratified_proportions_within_one_sample() {
        let labels: Vec<usize> = (0..97).map(|i| usize::from(i % 3 == 0)).collect();
        let (_, test) = split_indices(&labels, 2, 0.3, 9, true).unwrap();
        for c in 0..2 {
            let total = labels.iter().filter(|&&l| l == c).count() as f64;
            let got = test.iter().filter(|&&i| labels[i] == c).count() as f64;
            assert!((got - total * 0.3).abs() <= 1.0);
        }
    }
}
