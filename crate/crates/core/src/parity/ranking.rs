use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{enumerate_words, ParityWord};
use crate::datasets::LabeledBitDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub word: ParityWord,
    /// Normalized so the best word in the ranking scores 1.
    pub score: f64,
    /// Unnormalized population variance of the class-mean parity.
    pub raw: f64,
}

/// Per-class mean of `(-1)^(s . b)`; classes with no samples are skipped.
fn class_means(dataset: &LabeledBitDataset, word: &ParityWord, counts: &[usize]) -> Vec<f64> {
    let mut sums = vec![0i64; counts.len()];
    for (b, &y) in dataset.samples().iter().zip(dataset.labels()) {
        sums[y] += if word.0.and_parity(b) { -1 } else { 1 };
    }
    sums.iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&s, &c)| s as f64 / c as f64)
        .collect()
}

fn population_variance(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64
}

/// Ranks words by the population variance, across classes, of the
/// class-mean parity. Ties go to lower order, then lexicographic order.
pub fn variance_rank(dataset: &LabeledBitDataset, words: &[ParityWord]) -> Result<Vec<WordScore>> {
    let counts = dataset.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Ranking("variance ranking needs at least two populated classes".into()));
    }
    if let Some(w) = words.iter().find(|w| w.len() != dataset.n()) {
        return Err(Error::dim(dataset.n(), w.len()));
    }
    let mut scored: Vec<WordScore> = words
        .iter()
        .map(|w| {
            let raw = population_variance(&class_means(dataset, w, &counts));
            WordScore {
                word: w.clone(),
                score: raw,
                raw,
            }
        })
        .collect();
    let max = scored.iter().map(|s| s.raw).fold(0.0, f64::max);
    if max > 0.0 {
        for s in &mut scored {
            s.score = s.raw / max;
        }
    }
    scored.sort_by(|a, b| {
        b.raw
            .total_cmp(&a.raw)
            .then_with(|| a.word.rank_key().cmp(&b.word.rank_key()))
    });
    Ok(scored)
}

/// Words of order `<= max_order` whose class-mean difference is significant
/// at family-wise level `alpha` after Bonferroni correction. The statistic
/// is the largest one-vs-rest two-sample z score; returned strongest first.
pub fn bonferroni_select(
    dataset: &LabeledBitDataset,
    max_order: usize,
    alpha: f64,
    cap: u128,
) -> Result<Vec<(ParityWord, f64)>> {
    let candidates = enumerate_words(dataset.n(), max_order, cap)?;
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let threshold = alpha / candidates.len() as f64;
    let counts = dataset.class_counts();
    let total = dataset.len() as f64;
    let mut kept: Vec<(ParityWord, f64)> = candidates
        .into_iter()
        .filter_map(|w| {
            let mut sums = vec![0i64; counts.len()];
            for (b, &y) in dataset.samples().iter().zip(dataset.labels()) {
                sums[y] += if w.0.and_parity(b) { -1 } else { 1 };
            }
            let all: i64 = sums.iter().sum();
            let mut best = 0.0f64;
            for (c, &nc) in counts.iter().enumerate() {
                let nr = total - nc as f64;
                if nc == 0 || nr <= 0.0 {
                    continue;
                }
                let mc = sums[c] as f64 / nc as f64;
                let mr = (all - sums[c]) as f64 / nr;
                // pooled variance under the null of equal means
                let ma = all as f64 / total;
                let se = ((1.0 - ma * ma) * (1.0 / nc as f64 + 1.0 / nr)).sqrt();
                let diff = (mc - mr).abs();
                let z = if se > 0.0 {
                    diff / se
                } else if diff > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                best = best.max(z);
            }
            let p = erfc(best / std::f64::consts::SQRT_2);
            (p < threshold).then_some((w, best))
        })
        .collect();
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.rank_key().cmp(&b.0.rank_key())));
    Ok(kept)
}

/// `size` distinct nonzero words of order `<= max_order`, drawn uniformly
/// without replacement (all of them when fewer exist), sorted by rank key.
pub fn sample_word_pool<R: Rng>(
    n: usize,
    max_order: usize,
    size: usize,
    cap: u128,
    rng: &mut R,
) -> Result<Vec<ParityWord>> {
    let mut all = enumerate_words(n, max_order, cap)?;
    if size < all.len() {
        all.shuffle(rng);
        all.truncate(size);
        all.sort_by(|a, b| a.rank_key().cmp(&b.rank_key()));
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::datasets::{generate_planted_parity, PlantedParitySpec, Preset};
    use crate::parity::DEFAULT_ENUMERATION_CAP;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_parity_word_has_unit_variance() {
        let ds = Preset::Parity5.generate(0).unwrap();
        let words = enumerate_words(5, 5, DEFAULT_ENUMERATION_CAP).unwrap();
        let ranked = variance_rank(&ds, &words).unwrap();
        assert_eq!(ranked[0].word.to_string(), "11111");
        assert_eq!(ranked[0].raw, 1.0);
        assert_eq!(ranked[0].score, 1.0);
        assert!(ranked[1..].iter().all(|s| s.raw == 0.0));
    }

    #[test]
    fn empty_word_scores_zero() {
        let ds = Preset::Parity5Plus5.generate(0).unwrap();
        let ranked = variance_rank(&ds, &[ParityWord::empty(10)]).unwrap();
        assert_eq!(ranked[0].raw, 0.0);
        assert_eq!(ranked[0].score, 0.0);
    }

    #[test]
    fn single_class_is_error() {
        let ds = Preset::Parity5.generate(0).unwrap();
        let zeros: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i] == 0).collect();
        assert!(matches!(
            variance_rank(&ds.subset(&zeros), &[ParityWord::empty(5)]),
            Err(Error::Ranking(_))
        ));
    }

    #[test]
    fn planted_word_ranks_first_on_exhaustive_data() {
        for subset in [vec![0, 2], vec![1, 3, 4, 6], vec![0, 1, 2, 3, 4, 5, 6, 7]] {
            let ds = generate_planted_parity(&PlantedParitySpec::exhaustive(8, subset.clone()).unwrap(), 0).unwrap();
            let words = enumerate_words(8, 8, DEFAULT_ENUMERATION_CAP).unwrap();
            let ranked = variance_rank(&ds, &words).unwrap();
            assert_eq!(ranked[0].word, ParityWord::from_positions(8, &subset).unwrap());
            assert_eq!(ranked[0].score, 1.0);
        }
    }

    #[test]
    fn bonferroni_excludes_high_order() {
        let ds = Preset::Parity5Plus5.generate(0).unwrap();
        let sel = bonferroni_select(&ds, 3, 0.05, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(sel.iter().all(|(w, _)| w.order() <= 3));
        let planted: ParityWord = "0111010100".parse().unwrap();
        assert!(!sel.iter().any(|(w, _)| *w == planted));
    }

    #[test]
    fn bonferroni_finds_copied_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<BitString> = (0..200)
            .map(|_| BitString::from_index(rng.random_range(0..64), 6))
            .collect();
        let labels = samples.iter().map(|b| usize::from(b.get(0))).collect();
        let ds = LabeledBitDataset::new(6, samples, labels, 2).unwrap();
        let sel = bonferroni_select(&ds, 1, 0.05, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(sel[0].0.to_string(), "100000");
        assert!(sel[0].1 > 10.0);
    }

    #[test]
    fn bonferroni_controls_false_selection_on_noise() {
        let mut empty = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<BitString> = (0..200)
                .map(|_| BitString::from_index(rng.random_range(0..256), 8))
                .collect();
            let labels = (0..200).map(|_| usize::from(rng.random::<bool>())).collect();
            let ds = LabeledBitDataset::new(8, samples, labels, 2).unwrap();
            if bonferroni_select(&ds, 2, 0.05, DEFAULT_ENUMERATION_CAP).unwrap().is_empty() {
                empty += 1;
            }
        }
        assert!(empty >= 95, "only {empty} of 100 noise trials selected nothing");
    }

    #[test]
    fn bonferroni_family_wise_rate_is_at_most_nominal() {
        let trials = 2000u64;
        let mut hits = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(50_000 + seed);
            let samples: Vec<BitString> = (0..100)
                .map(|_| BitString::from_index(rng.random_range(0..64), 6))
                .collect();
            let labels = (0..100).map(|_| usize::from(rng.random::<bool>())).collect();
            let ds = LabeledBitDataset::new(6, samples, labels, 2).unwrap();
            if !bonferroni_select(&ds, 2, 0.05, DEFAULT_ENUMERATION_CAP).unwrap().is_empty() {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        let slack = 3.0 * (0.05f64 * 0.95 / trials as f64).sqrt();
        assert!(rate <= 0.05 + slack, "family-wise rate {rate}");
    }

    #[test]
    fn pool_sampling_is_bounded_and_low_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pool = sample_word_pool(12, 3, 100, DEFAULT_ENUMERATION_CAP, &mut rng).unwrap();
        assert_eq!(pool.len(), 100);
        assert!(pool.iter().all(|w| (1..=3).contains(&w.order())));
        let mut dedup = pool.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 100);
        let all = sample_word_pool(10, 3, 256, DEFAULT_ENUMERATION_CAP, &mut rng).unwrap();
        assert_eq!(all.len(), 175);
    }
}
