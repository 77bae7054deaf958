use serde::{Deserialize, Serialize};

use crate::error::{AptfError, Result};

/// How bucket groups evolve across stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BucketMode {
    /// One group of `initial_buckets` for the whole run.
    Fixed,
    /// One group per stage, shrinking by `bucket_decrement` buckets.
    Evolving,
    /// Stage `s` averages groups `1..=s`.
    #[default]
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StagePlan {
    /// Epochs per stage (the stage advances after epoch `e` when `e % interval == 0`).
    pub epoch_interval: usize,
    pub initial_buckets: usize,
    pub bucket_decrement: usize,
    /// Upper bound on the stage index; `None` means `epochs / epoch_interval`.
    pub max_stages: Option<usize>,
    pub mode: BucketMode,
    /// Later groups use the first group's schedule with its largest weights
    /// removed instead of their own base schedule.
    pub trim_leading: bool,
}

impl Default for StagePlan {
    fn default() -> Self {
        Self {
            epoch_interval: 2,
            initial_buckets: 9,
            bucket_decrement: 1,
            max_stages: None,
            mode: BucketMode::Hierarchical,
            trim_leading: false,
        }
    }
}

impl StagePlan {
    pub fn validate(&self) -> Result<()> {
        if self.epoch_interval == 0 {
            return Err(AptfError::BadSpec("epoch_interval must be >= 1".into()));
        }
        if self.initial_buckets < 2 {
            return Err(AptfError::GroupTooSmall { k: self.initial_buckets });
        }
        if self.max_stages == Some(0) {
            return Err(AptfError::BadSpec("max_stages must be >= 1".into()));
        }
        Ok(())
    }

    /// Bucket count of group `g` (1-based); may fall below 2.
    pub fn buckets_for_group(&self, g: usize) -> usize {
        self.initial_buckets
            .saturating_sub((g - 1) * self.bucket_decrement)
    }

    pub fn max_stages_for(&self, epochs: usize) -> usize {
        self.max_stages
            .unwrap_or_else(|| (epochs / self.epoch_interval).max(1))
    }

    /// Largest stage whose newest group still has at least two buckets and,
    /// when `batch_size` is given, at least two samples per bucket.
    pub fn feasible_stages(&self, batch_size: Option<usize>) -> usize {
        if self.mode == BucketMode::Fixed || self.bucket_decrement == 0 {
            return usize::MAX;
        }
        let mut best = 1;
        let mut s = 1;
        while self.buckets_for_group(s) >= 2 {
            let k = self.buckets_for_group(s);
            if batch_size.is_none_or(|n| n / k >= 2) {
                best = s;
            }
            s += 1;
        }
        best
    }

    /// Stage cap combining the configured maximum and bucket feasibility.
    pub fn stage_cap(&self, epochs: usize, batch_size: Option<usize>) -> usize {
        self.max_stages_for(epochs)
            .min(self.feasible_stages(batch_size))
            .max(1)
    }
}

/// 1 when `epoch % interval == 0`, else 0.
pub fn stage_indicator(epoch: usize, interval: usize) -> u8 {
    u8::from(epoch.is_multiple_of(interval))
}

/// Stage for the epoch after `epoch`, given the stage used during it.
pub fn advance_stage(plan: &StagePlan, stage: usize, epoch: usize, cap: usize) -> usize {
    if stage_indicator(epoch, plan.epoch_interval) == 1 {
        (stage + 1).min(cap).max(stage)
    } else {
        stage
    }
}

/// Tracks the current stage across epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTracker {
    plan: StagePlan,
    stage: usize,
    cap: usize,
}

impl StageTracker {
    pub fn new(plan: StagePlan, cap: usize) -> Self {
        Self {
            plan,
            stage: 1,
            cap: cap.max(1),
        }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Call after `epoch` (1-based) finishes; returns the new stage.
    pub fn end_epoch(&mut self, epoch: usize) -> usize {
        self.stage = advance_stage(&self.plan, self.stage, epoch, self.cap);
        self.stage
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_examples() {
        assert_eq!(stage_indicator(4, 2), 1);
        assert_eq!(stage_indicator(3, 2), 0);
        assert_eq!(stage_indicator(75, 75), 1);
    }

    #[test]
    fn trace_interval_two() {
        let plan = StagePlan {
            max_stages: Some(3),
            ..StagePlan::default()
        };
        let mut t = StageTracker::new(plan, plan.stage_cap(6, None));
        let mut used = Vec::new();
        for epoch in 1..=6 {
            used.push(t.stage());
            t.end_epoch(epoch);
        }
        assert_eq!(used, vec![1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn single_stage_is_pinned() {
        let plan = StagePlan {
            max_stages: Some(1),
            epoch_interval: 1,
            ..StagePlan::default()
        };
        let mut t = StageTracker::new(plan, plan.stage_cap(10, None));
        for e in 1..=10 {
            assert_eq!(t.end_epoch(e), 1);
        }
    }

    #[test]
    fn bucket_feasibility_cap() {
        let plan = StagePlan {
            initial_buckets: 3,
            epoch_interval: 1,
            max_stages: Some(50),
            ..StagePlan::default()
        };
        assert_eq!(plan.stage_cap(100, None), 2);
        let nine = StagePlan::default();
        assert_eq!(nine.stage_cap(30, None), 8);
        // 8 samples: 4 buckets give 2 per bucket, 5 buckets only 1.
        assert_eq!(nine.feasible_stages(Some(8)), 8);
    }
}
