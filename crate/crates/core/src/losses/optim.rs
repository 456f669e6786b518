use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Adam,
    #[default]
    AdamW,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Steps over which the rate decays to 0 along a half cosine. 0 keeps
    /// the rate constant.
    pub horizon: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            algorithm: Algorithm::AdamW,
            lr: 0.01,
            weight_decay: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            horizon: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_lr(lr: f64, horizon: usize) -> Self {
        OptimizerConfig {
            lr,
            horizon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config("eps must be positive and weight decay nonnegative".into()));
        }
        Ok(())
    }

    /// Rate at zero-based step `t`.
    pub fn rate_at(&self, t: usize) -> f64 {
        if self.horizon == 0 {
            return self.lr;
        }
        let frac = t.min(self.horizon) as f64 / self.horizon as f64;
        0.5 * self.lr * (1.0 + (PI * frac).cos())
    }
}

/// Adam/AdamW moments for one named parameter block.
#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    block: String,
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, block: impl Into<String>, len: usize) -> Self {
        Optimizer {
            cfg,
            block: block.into(),
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim(self.m.len(), if params.len() != self.m.len() { params.len() } else { grads.len() }));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::training(&self.block, format!("non-finite gradient at entry {i}, step {}", self.t)));
        }
        let c = self.cfg;
        let rate = c.rate_at(self.t);
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let mut g = grads[i];
            if c.algorithm == Algorithm::Adam {
                g += c.weight_decay * params[i];
            }
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let update = (self.m[i] / bc1) / ((self.v[i] / bc2).sqrt() + c.eps);
            if c.algorithm == Algorithm::AdamW {
                params[i] -= rate * c.weight_decay * params[i];
            }
            params[i] -= rate * update;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = Optimizer::new(OptimizerConfig::default(), "w", 3);
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..10 {
            opt.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_is_rate_times_almost_one() {
        let cfg = OptimizerConfig::with_lr(0.1, 0);
        let mut opt = Optimizer::new(cfg, "w", 1);
        let mut p = vec![0.0];
        opt.step(&mut p, &[1.0]).unwrap();
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-12);
    }

    #[test]
    fn rate_reaches_zero_at_horizon() {
        let cfg = OptimizerConfig::with_lr(0.1, 5);
        assert!(cfg.rate_at(5).abs() < 1e-18);
        assert!((cfg.rate_at(0) - 0.1).abs() < 1e-18);
        let mut opt = Optimizer::new(cfg, "w", 1);
        let mut p = vec![0.0];
        for _ in 0..5 {
            opt.step(&mut p, &[1.0]).unwrap();
        }
        let frozen = p[0];
        for _ in 0..5 {
            opt.step(&mut p, &[1.0]).unwrap();
        }
        assert_eq!(p[0], frozen);
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let mut opt = Optimizer::new(OptimizerConfig::default(), "theta", 2);
        let err = opt.step(&mut [0.0, 0.0], &[0.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("theta"));
    }

    #[test]
    fn adamw_decays_independently_of_gradient() {
        let cfg = OptimizerConfig {
            weight_decay: 0.5,
            ..OptimizerConfig::with_lr(0.1, 0)
        };
        let mut opt = Optimizer::new(cfg, "w", 1);
        let mut p = vec![2.0];
        opt.step(&mut p, &[0.0]).unwrap();
        assert!((p[0] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(OptimizerConfig::with_lr(0.0, 0).validate().is_err());
        assert!(OptimizerConfig { beta1: 1.0, ..Default::default() }.validate().is_err());
    }
}
