use crate::error::{shape_err, AptfError, Result};

use super::buckets::BucketPartition;

/// Per-bucket loss multipliers, strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    weights: Vec<f64>,
}

impl WeightSchedule {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(AptfError::BadSpec(format!("weights must be finite and >= 0: {weights:?}")));
        }
        if weights.windows(2).any(|w| w[1] >= w[0]) {
            return Err(AptfError::BadSpec(format!("weights not strictly decreasing: {weights:?}")));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Base schedule for `k` buckets: `1 - (j-1)/(k-1)` for `j < k`, the last
/// bucket half of its predecessor. `trim` drops that many leading (largest)
/// weights.
pub fn build_weight_schedule(k: usize, trim: usize) -> Result<WeightSchedule> {
    if k < 2 {
        return Err(AptfError::GroupTooSmall { k });
    }
    if trim >= k {
        return Err(AptfError::BadTrim { k, trim });
    }
    let step = (k - 1) as f64;
    let mut weights: Vec<f64> = (0..k - 1).map(|j| 1.0 - j as f64 / step).collect();
    let last = weights[k - 2] / 2.0;
    weights.push(last);
    WeightSchedule::new(weights.split_off(trim))
}

/// A partition paired with one weight per bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketGroup {
    pub partition: BucketPartition,
    pub schedule: WeightSchedule,
}

impl BucketGroup {
    pub fn new(partition: BucketPartition, schedule: WeightSchedule) -> Result<Self> {
        if partition.k() != schedule.len() {
            return Err(shape_err(
                format!("{} weights", partition.k()),
                format!("{}", schedule.len()),
            ));
        }
        Ok(Self { partition, schedule })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_bucket_schedule() {
        let s = build_weight_schedule(9, 0).unwrap();
        assert_eq!(
            s.weights(),
            &[1.0, 0.875, 0.75, 0.625, 0.5, 0.375, 0.25, 0.125, 0.0625]
        );
    }

    #[test]
    fn two_bucket_schedule() {
        assert_eq!(build_weight_schedule(2, 0).unwrap().weights(), &[1.0, 0.5]);
    }

    #[test]
    fn trimming_drops_leading_weights() {
        let full = build_weight_schedule(9, 0).unwrap();
        let trimmed = build_weight_schedule(9, 1).unwrap();
        assert_eq!(trimmed.weights(), &full.weights()[1..]);
        assert!(matches!(build_weight_schedule(3, 3), Err(AptfError::BadTrim { .. })));
    }

    #[test]
    fn rejects_non_decreasing() {
        assert!(WeightSchedule::new(vec![1.0, 1.0]).is_err());
        assert!(WeightSchedule::new(vec![1.0, -0.5]).is_err());
    }
}
