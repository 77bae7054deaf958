//! Predictability-aware loss weighting.
//!
//! A batch's per-sample losses are sorted and cut into buckets; low-loss
//! buckets get large weights, high-loss buckets small ones. As training
//! advances through stages, coarser bucket groups are added and the loss
//! is averaged across all active groups.

mod buckets;
mod loss;
mod schedule;
mod stage;

pub use buckets::{partition_buckets, partition_with_sizes, BucketPartition, ModelRole};
pub use loss::{
    basic_pal, batch_pal, bucket_weighted_loss, evolving_pal, grouped_pal, hierarchical_pal, predictability_loss,
    stage_groups, tsc_two_bucket_pal, tsc_two_bucket_pal_ranked, PalOutput, TscBucketConfig,
};
pub use schedule::{build_weight_schedule, BucketGroup, WeightSchedule};
pub use stage::{advance_stage, stage_indicator, BucketMode, StagePlan, StageTracker};
