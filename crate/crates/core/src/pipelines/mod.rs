//! End-to-end training procedures, the basis/moment swap harness, the
//! sPQC-Parity trainer and the FGSM/rounding robustness harness.

mod native;
mod robustness;
mod spqc;
mod swap;

pub use native::{train_native_binary, DiscReduction, DiversityNorm, NativeBinaryConfig, NativeBinaryModel, PoolInit};
pub use robustness::{
    fgsm_attack, real_input_logits, robustness_curve, round_to_grid, write_curve_csv, AttackConfig, CurveRow, Defense, RobustnessRun,
    Surrogate,
};
pub use spqc::{train_spqc, SpqcConfig, SpqcModel};
pub use swap::{compute_moments, run_swap, BasisSource, MomentSource, SwapCell, SwapConfig, SwapReport, SwapSeedResult};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::OptimizerConfig;
use crate::models::{train_linear_head, LinearHead};

/// Settings for every linear head trained on parity features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            epochs: 300,
            lr: 0.05,
            l2: 1e-3,
        }
    }
}

impl HeadConfig {
    pub fn train(&self, features: &[Vec<f64>], labels: &[usize], classes: usize) -> Result<LinearHead> {
        train_linear_head(
            features,
            labels,
            classes,
            &OptimizerConfig::with_lr(self.lr, self.epochs),
            self.epochs,
            self.l2,
        )
    }
}

/// Mean, population std and maximum.
pub fn aggregate(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, var.sqrt(), best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub accuracy: f64,
    pub words: Vec<String>,
    /// Head weights, one row per class.
    pub head_weights: Vec<Vec<f64>>,
    pub head_bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    pub format_version: u32,
    pub timestamp: String,
}

impl Metadata {
    pub fn now() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Metadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: RESULT_FORMAT_VERSION,
            timestamp: format!("{secs}"),
        }
    }
}

pub const RESULT_FORMAT_VERSION: u32 = 1;

/// One run of one pipeline over a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub pipeline: String,
    pub dataset: String,
    pub config: serde_json::Value,
    pub runs: Vec<SeedRun>,
    pub mean: f64,
    pub std: f64,
    pub best: f64,
    #[serde(default)]
    pub notes: Vec<String>,
    /// Extra tables (for example the swap grid), keyed by name.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    pub fn new(pipeline: &str, dataset: &str, config: serde_json::Value, runs: Vec<SeedRun>) -> Self {
        let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let (mean, std, best) = aggregate(&accs);
        ExperimentResult {
            pipeline: pipeline.to_string(),
            dataset: dataset.to_string(),
            config,
            runs,
            mean,
            std,
            best,
            notes: Vec::new(),
            extra: serde_json::Map::new(),
            metadata: Metadata::now(),
        }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.accuracy).collect()
    }

    /// Checks the stored aggregates against the per-seed values.
    pub fn verify(&self) -> Result<()> {
        let (mean, std, best) = aggregate(&self.accuracies());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 || (a.is_nan() && b.is_nan());
        if !(close(mean, self.mean) && close(std, self.std) && close(best, self.best)) {
            return Err(Error::Schema(format!(
                "aggregates do not match per-seed accuracies in `{}` result",
                self.pipeline
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let r: ExperimentResult = serde_json::from_str(&text)?;
        r.verify()?;
        Ok(r)
    }
}

/// Writes `contents` to a sibling temporary file and renames it over
/// `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_use_population_std() {
        let (m, s, b) = aggregate(&[100.0, 90.0]);
        assert_eq!((m, s, b), (95.0, 5.0, 100.0));
    }

    #[test]
    fn result_roundtrip_and_verification() {
        let runs = [42u64, 123]
            .iter()
            .zip([100.0, 87.5])
            .map(|(&seed, accuracy)| SeedRun {
                seed,
                accuracy,
                words: vec!["11111".into()],
                head_weights: vec![vec![0.0], vec![-1.0]],
                head_bias: vec![0.0, 0.0],
                warnings: vec![],
            })
            .collect();
        let r = ExperimentResult::new("native", "parity5", serde_json::json!({"k": 128}), runs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/result.json");
        write_atomic(&path, r.to_json().unwrap().as_bytes()).unwrap();
        let back = ExperimentResult::read(&path).unwrap();
        assert_eq!(back, r);
        let mut tampered = r.clone();
        tampered.mean = 1.0;
        assert!(tampered.verify().is_err());
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
