use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    #[default]
    Geometric,
}

/// Phase 1 raises the temperature with soft forward passes; phase 2 holds
/// it at `tau_end` with hard forward passes and soft gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemperatureSchedule {
    pub phase1: usize,
    pub phase2: usize,
    pub tau_start: f64,
    pub tau_end: f64,
    pub interpolation: Interpolation,
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule {
            phase1: 100,
            phase2: 100,
            tau_start: 1.0,
            tau_end: 10.0,
            interpolation: Interpolation::Geometric,
        }
    }
}

impl TemperatureSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_start > 0.0 && self.tau_start <= self.tau_end && self.tau_end.is_finite()) {
            return Err(Error::Config(format!(
                "temperature schedule needs 0 < tau_start <= tau_end, got {} and {}",
                self.tau_start, self.tau_end
            )));
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.phase1 + self.phase2
    }

    /// `(tau, hard_forward)` at `epoch`; epochs past the end clamp to the
    /// final state.
    pub fn step(&self, epoch: usize) -> (f64, bool) {
        if epoch >= self.phase1 {
            return (self.tau_end, true);
        }
        let t = epoch as f64 / self.phase1 as f64;
        let tau = match self.interpolation {
            Interpolation::Linear => self.tau_start + (self.tau_end - self.tau_start) * t,
            Interpolation::Geometric => self.tau_start * (self.tau_end / self.tau_start).powf(t),
        };
        (tau, false)
    }
}
