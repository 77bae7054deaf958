use serde::{Deserialize, Serialize};

use super::buckets::{partition_buckets, partition_with_sizes, BucketPartition};
use super::schedule::{build_weight_schedule, BucketGroup, WeightSchedule};
use super::stage::{BucketMode, StagePlan};
use crate::error::{shape_err, AptfError, Result};

/// Scalar objective plus the per-sample weights `w` with
/// `loss == sum_i w[i] * losses[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PalOutput {
    pub loss: f64,
    pub weights: Vec<f64>,
}

impl PalOutput {
    /// Plain mean loss.
    pub fn uniform(losses: &[f64]) -> Self {
        let n = losses.len().max(1) as f64;
        Self {
            loss: losses.iter().sum::<f64>() / n,
            weights: vec![1.0 / n; losses.len()],
        }
    }
}

/// Sum over buckets of `W_j * mean(losses in B_j)`. Empty buckets
/// contribute nothing.
pub fn basic_pal(group: &BucketGroup, losses: &[f64]) -> Result<PalOutput> {
    bucket_weighted_loss(&group.partition, group.schedule.weights(), losses)
}

/// [`basic_pal`] with arbitrary bucket weights (no ordering requirement).
pub fn bucket_weighted_loss(
    partition: &BucketPartition,
    bucket_weights: &[f64],
    losses: &[f64],
) -> Result<PalOutput> {
    if partition.k() != bucket_weights.len() {
        return Err(shape_err(
            format!("{} bucket weights", partition.k()),
            format!("{}", bucket_weights.len()),
        ));
    }
    if partition.n() != losses.len() {
        return Err(shape_err(
            format!("{} losses", partition.n()),
            format!("{}", losses.len()),
        ));
    }
    let mut loss = 0.0;
    let mut weights = vec![0.0; losses.len()];
    for (bucket, &w) in partition.buckets().iter().zip(bucket_weights) {
        if bucket.is_empty() {
            continue;
        }
        let size = bucket.len() as f64;
        let mean = bucket.iter().map(|&i| losses[i]).sum::<f64>() / size;
        loss += w * mean;
        for &i in bucket {
            weights[i] = w / size;
        }
    }
    Ok(PalOutput { loss, weights })
}

/// `(bucket count, schedule)` for every group active at `stage`.
pub fn stage_groups(plan: &StagePlan, stage: usize) -> Result<Vec<(usize, WeightSchedule)>> {
    if stage == 0 {
        return Err(AptfError::BadSpec("stages are 1-based".into()));
    }
    let group_ids: Vec<usize> = match plan.mode {
        BucketMode::Fixed => vec![1],
        BucketMode::Evolving => vec![stage],
        BucketMode::Hierarchical => (1..=stage).collect(),
    };
    group_ids
        .into_iter()
        .map(|g| {
            let k = plan.buckets_for_group(g);
            if k < 2 {
                return Err(AptfError::GroupTooSmall { k });
            }
            let schedule = if plan.trim_leading && g > 1 {
                build_weight_schedule(plan.initial_buckets, plan.initial_buckets - k)?
            } else {
                build_weight_schedule(k, 0)?
            };
            Ok((k, schedule))
        })
        .collect()
}

/// Averages [`basic_pal`] over `groups`. Partitions come from `ranking`;
/// the objective is evaluated on `losses`. The two coincide except when a
/// peer model supplies the ranking.
pub fn grouped_pal(
    groups: &[(usize, WeightSchedule)],
    ranking: &[f64],
    losses: &[f64],
) -> Result<PalOutput> {
    if ranking.len() != losses.len() {
        return Err(shape_err(format!("{} losses", ranking.len()), format!("{}", losses.len())));
    }
    let g = groups.len() as f64;
    let mut loss = 0.0;
    let mut weights = vec![0.0; losses.len()];
    for (k, schedule) in groups {
        let partition = partition_buckets(ranking, *k)?;
        let out = basic_pal(&BucketGroup::new(partition, schedule.clone())?, losses)?;
        loss += out.loss;
        for (acc, w) in weights.iter_mut().zip(out.weights) {
            *acc += w;
        }
    }
    weights.iter_mut().for_each(|w| *w /= g);
    Ok(PalOutput { loss: loss / g, weights })
}

/// Predictability-aware loss for `plan.mode` at `stage`, with a possibly
/// foreign ranking.
pub fn predictability_loss(
    plan: &StagePlan,
    stage: usize,
    ranking: &[f64],
    losses: &[f64],
) -> Result<PalOutput> {
    grouped_pal(&stage_groups(plan, stage)?, ranking, losses)
}

/// Hierarchical loss: mean of the basic loss over groups `1..=stage`.
pub fn hierarchical_pal(stage: usize, plan: &StagePlan, losses: &[f64]) -> Result<PalOutput> {
    let plan = StagePlan {
        mode: BucketMode::Hierarchical,
        ..*plan
    };
    predictability_loss(&plan, stage, losses, losses)
}

/// Only the stage's own group, no averaging over earlier groups.
pub fn evolving_pal(stage: usize, plan: &StagePlan, losses: &[f64]) -> Result<PalOutput> {
    let plan = StagePlan {
        mode: BucketMode::Evolving,
        ..*plan
    };
    predictability_loss(&plan, stage, losses, losses)
}

/// Like [`predictability_loss`] but tolerant of short batches: bucket
/// counts are clamped to the batch size, and batches of fewer than two
/// samples fall back to the plain mean.
pub fn batch_pal(
    plan: &StagePlan,
    stage: usize,
    ranking: &[f64],
    losses: &[f64],
) -> Result<PalOutput> {
    let n = losses.len();
    if n < 2 {
        return Ok(PalOutput::uniform(losses));
    }
    let mut groups = stage_groups(plan, stage)?;
    for (k, schedule) in groups.iter_mut() {
        if *k > n {
            log::warn!("batch of {n} samples cannot fill {k} buckets; clamping to {n}");
            *k = n;
            *schedule = build_weight_schedule(n, 0)?;
        }
    }
    grouped_pal(&groups, ranking, losses)
}

/// Two-bucket split used for classification: the highest-loss fraction of
/// each batch is down-weighted, and the fraction grows per stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TscBucketConfig {
    pub low_weight: f64,
    pub initial_fraction: f64,
    pub growth_rate: f64,
}

impl Default for TscBucketConfig {
    fn default() -> Self {
        Self {
            low_weight: 0.1,
            initial_fraction: 0.0,
            growth_rate: 0.025,
        }
    }
}

impl TscBucketConfig {
    pub const MAX_FRACTION: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=Self::MAX_FRACTION).contains(&self.initial_fraction) {
            return Err(AptfError::BadSpec(format!(
                "initial_fraction {} outside [0, 0.5]",
                self.initial_fraction
            )));
        }
        if !(self.low_weight >= 0.0 && self.low_weight < 1.0) {
            return Err(AptfError::BadSpec(format!(
                "low_weight {} outside [0, 1)",
                self.low_weight
            )));
        }
        if !(self.growth_rate >= 0.0) {
            return Err(AptfError::BadSpec("growth_rate must be >= 0".into()));
        }
        Ok(())
    }

    pub fn fraction_at(&self, stage: usize) -> f64 {
        (stage.saturating_sub(1) as f64 * self.growth_rate + self.initial_fraction)
            .min(Self::MAX_FRACTION)
    }

    /// Number of penalized samples in a batch of `n`.
    pub fn penalized_count(&self, stage: usize, n: usize) -> usize {
        // the epsilon absorbs representation error in e.g. 3 * 0.025 * 40
        let raw = self.fraction_at(stage) * n as f64;
        ((raw - 1e-9).ceil().max(0.0) as usize).min(n.saturating_sub(1))
    }

    pub fn partition(&self, stage: usize, ranking: &[f64]) -> Result<BucketPartition> {
        let n = ranking.len();
        let low = self.penalized_count(stage, n);
        partition_with_sizes(ranking, &[n - low, low])
    }
}

pub fn tsc_two_bucket_pal(losses: &[f64], cfg: &TscBucketConfig, stage: usize) -> Result<PalOutput> {
    tsc_two_bucket_pal_ranked(losses, losses, cfg, stage)
}

pub fn tsc_two_bucket_pal_ranked(
    ranking: &[f64],
    losses: &[f64],
    cfg: &TscBucketConfig,
    stage: usize,
) -> Result<PalOutput> {
    if losses.len() < 2 {
        return Ok(PalOutput::uniform(losses));
    }
    if ranking.len() != losses.len() {
        return Err(shape_err(format!("{} losses", ranking.len()), format!("{}", losses.len())));
    }
    cfg.validate()?;
    let partition = cfg.partition(stage, ranking)?;
    let schedule = WeightSchedule::new(vec![1.0, cfg.low_weight])?;
    basic_pal(&BucketGroup::new(partition, schedule)?, losses)
}
