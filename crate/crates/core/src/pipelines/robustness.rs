use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::aggregate;
use crate::bits::BitString;
use crate::datasets::LabeledBitDataset;
use crate::error::{Error, Result};
use crate::losses::cross_entropy_grad;
use crate::models::{DeployedParityClassifier, LinearHead};
use crate::parity::{soft_parity_grad, WordLogits};

/// `x + eps * sign(grad)`, with `sign(0) = 0`.
pub fn fgsm_attack(grad: &[f64], x: &[f64], eps: f64) -> Vec<f64> {
    x.iter()
        .zip(grad)
        .map(|(v, g)| {
            let s = if *g > 0.0 {
                1.0
            } else if *g < 0.0 {
                -1.0
            } else {
                0.0
            };
            v + eps * s
        })
        .collect()
}

/// Nearest multiple of `step`, halves rounding up; `binary` clamps to
/// `{0, 1}`.
pub fn round_to_grid(x: &[f64], step: f64, binary: bool) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let r = (v / step + 0.5).floor() * step;
            if binary {
                r.clamp(0.0, 1.0)
            } else {
                r
            }
        })
        .collect()
}

/// Differentiable stand-in used to pick the attack direction.
#[derive(Debug, Clone, PartialEq)]
pub enum Surrogate {
    /// Relaxed parity features at the given logits, then the head.
    SoftParity { logits: WordLogits, head: LinearHead },
    /// A linear head on the raw inputs.
    Linear { head: LinearHead },
}

impl Surrogate {
    /// Gradient of the cross-entropy of class `y` with respect to `x`.
    pub fn input_gradient(&self, x: &[f64], y: usize) -> Vec<f64> {
        match self {
            Surrogate::Linear { head } => {
                let (_, d) = cross_entropy_grad(&[head.logits(x)], &[y]);
                (0..x.len())
                    .map(|i| head.weights.iter().zip(&d[0]).map(|(w, dl)| w[i] * dl).sum())
                    .collect()
            }
            Surrogate::SoftParity { logits, head } => {
                let grads: Vec<_> = logits.rows().iter().map(|r| soft_parity_grad(r, logits.temperature, x)).collect();
                let f: Vec<f64> = grads.iter().map(|g| g.value).collect();
                let (_, d) = cross_entropy_grad(&[head.logits(&f)], &[y]);
                let mut dx = vec![0.0; x.len()];
                for (k, g) in grads.iter().enumerate() {
                    let df: f64 = head.weights.iter().zip(&d[0]).map(|(w, dl)| w[k] * dl).sum();
                    for (acc, di) in dx.iter_mut().zip(&g.d_input) {
                        *acc += df * di;
                    }
                }
                dx
            }
        }
    }
}

/// Head logits with each parity factor `(-1)^{b_i}` replaced by
/// `cos(pi x_i)`, which agrees with the deployed model on bit inputs.
pub fn real_input_logits(clf: &DeployedParityClassifier, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != clf.n {
        return Err(Error::dim(clf.n, x.len()));
    }
    let f: Vec<f64> = clf
        .words
        .iter()
        .map(|w| w.bits().ones().map(|i| (PI * x[i]).cos()).product())
        .collect();
    Ok(clf.head.logits(&f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Defense {
    None,
    #[default]
    Round,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub epsilons: Vec<f64>,
    pub defense: Defense,
    pub step: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            epsilons: vec![0.0, 0.1, 0.2, 0.3, 0.49],
            defense: Defense::Round,
            step: 1.0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::Config("attack budgets must be finite and nonnegative".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config("grid step must be positive".into()));
        }
        Ok(())
    }
}

/// One trained model (typically one seed) with its surrogate and test set.
#[derive(Debug, Clone)]
pub struct RobustnessRun {
    pub classifier: DeployedParityClassifier,
    pub surrogate: Surrogate,
    pub test: LabeledBitDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epsilon: f64,
    pub defended_acc: f64,
    pub undefended_acc: f64,
    pub std_defended: f64,
    pub std_undefended: f64,
}

/// `(defended, undefended)` accuracy of one run at one budget.
fn attack_run(run: &RobustnessRun, eps: f64, step: f64) -> Result<(f64, f64)> {
    let mut hits = (0usize, 0usize);
    for (b, &y) in run.test.samples().iter().zip(run.test.labels()) {
        let x = b.to_f64();
        let adv = fgsm_attack(&run.surrogate.input_gradient(&x, y), &x, eps);
        let rounded = round_to_grid(&adv, step, true);
        let bits = BitString::from_bools(&rounded.iter().map(|&v| v >= 0.5).collect::<Vec<_>>());
        hits.0 += usize::from(run.classifier.predict(&bits)? == y);
        let logits = real_input_logits(&run.classifier, &adv)?;
        hits.1 += usize::from(run.classifier.head.predict_logits(&logits) == y);
    }
    let n = run.test.len().max(1) as f64;
    Ok((100.0 * hits.0 as f64 / n, 100.0 * hits.1 as f64 / n))
}

/// Accuracy under FGSM per budget, averaged over runs, with and without
/// rounding back to the grid.
pub fn robustness_curve(runs: &[RobustnessRun], atk: &AttackConfig) -> Result<Vec<CurveRow>> {
    atk.validate()?;
    atk.epsilons
        .iter()
        .map(|&eps| {
            let mut def = Vec::with_capacity(runs.len());
            let mut und = Vec::with_capacity(runs.len());
            for run in runs {
                let (d, u) = attack_run(run, eps, atk.step)?;
                def.push(d);
                und.push(u);
            }
            let (dm, ds, _) = aggregate(&def);
            let (um, us, _) = aggregate(&und);
            Ok(CurveRow {
                epsilon: eps,
                defended_acc: dm,
                undefended_acc: um,
                std_defended: ds,
                std_undefended: us,
            })
        })
        .collect()
}

pub fn write_curve_csv(rows: &[CurveRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "defended_acc", "undefended_acc", "std_defended", "std_undefended"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record(
            [r.epsilon, r.defended_acc, r.undefended_acc, r.std_defended, r.std_undefended].map(|v| v.to_string()),
        )
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
