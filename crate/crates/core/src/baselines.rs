//! Sample-selection baselines: Co-teaching and self-paced learning.

use serde::{Deserialize, Serialize};

use crate::error::{AptfError, Result};
use crate::numeric::argsort_ascending;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoteachingConfig {
    /// Final fraction of each batch a model discards.
    pub forget_rate: f64,
    /// Epochs over which the discard fraction ramps up linearly from 0.
    pub ramp_epochs: usize,
}

impl Default for CoteachingConfig {
    fn default() -> Self {
        Self {
            forget_rate: 0.2,
            ramp_epochs: 10,
        }
    }
}

impl CoteachingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.forget_rate) {
            return Err(AptfError::BadSpec(format!(
                "forget_rate {} outside [0, 0.5]",
                self.forget_rate
            )));
        }
        Ok(())
    }

    /// Discard fraction during `epoch` (1-based).
    pub fn rate_at(&self, epoch: usize) -> f64 {
        if self.ramp_epochs == 0 {
            return self.forget_rate;
        }
        let t = (epoch.saturating_sub(1) as f64 / self.ramp_epochs as f64).min(1.0);
        self.forget_rate * t
    }
}

/// Indices (ascending) of the samples kept when `rate` of the batch with
/// the largest `peer_losses` is dropped. Always keeps at least one.
pub fn coteaching_keep(peer_losses: &[f64], rate: f64) -> Result<Vec<usize>> {
    let n = peer_losses.len();
    let order = argsort_ascending(peer_losses)?;
    let drop = ((rate * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let keep_n = n.saturating_sub(drop).max(1).min(n);
    let mut keep = order[..keep_n].to_vec();
    keep.sort_unstable();
    Ok(keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfPacedConfig {
    /// Loss threshold during stage 1.
    pub initial_threshold: f64,
    /// Factor applied to the threshold at every stage boundary.
    pub growth: f64,
}

impl Default for SelfPacedConfig {
    fn default() -> Self {
        Self {
            initial_threshold: 1.0,
            growth: 1.3,
        }
    }
}

impl SelfPacedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_threshold > 0.0) || !(self.growth >= 1.0) {
            return Err(AptfError::BadSpec(
                "self-paced threshold must be positive and growth >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// 1 for samples whose loss is below `threshold`, else 0.
pub fn self_paced_weights(losses: &[f64], threshold: f64) -> Vec<f64> {
    losses
        .iter()
        .map(|&l| if l < threshold { 1.0 } else { 0.0 })
        .collect()
}
