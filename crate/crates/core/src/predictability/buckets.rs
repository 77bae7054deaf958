use serde::{Deserialize, Serialize};

use crate::error::{shape_err, AptfError, Result};
use crate::numeric::argsort_ascending;

/// Which model's losses produced a partition's ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    #[default]
    Source,
    Amortization,
}

/// Batch indices grouped into buckets of ascending loss. Bucket 0 holds the
/// most predictable (lowest-loss) samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketPartition {
    buckets: Vec<Vec<usize>>,
    n: usize,
    source: ModelRole,
}

impl BucketPartition {
    pub fn k(&self) -> usize {
        self.buckets.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(Vec::len).collect()
    }

    pub fn source(&self) -> ModelRole {
        self.source
    }

    pub fn with_source(mut self, source: ModelRole) -> Self {
        self.source = source;
        self
    }

    /// `assignment[i]` is the bucket holding sample `i`.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (j, bucket) in self.buckets.iter().enumerate() {
            for &i in bucket {
                out[i] = j;
            }
        }
        out
    }
}

/// Splits `losses` into `k` buckets: the first `k - 1` hold `floor(N / k)`
/// samples each and the last holds the remainder.
pub fn partition_buckets(losses: &[f64], k: usize) -> Result<BucketPartition> {
    if k < 2 {
        return Err(AptfError::GroupTooSmall { k });
    }
    let n = losses.len();
    if n < k {
        return Err(AptfError::TooFewSamples { n, k });
    }
    let per = n / k;
    let mut sizes = vec![per; k];
    sizes[k - 1] = n - (k - 1) * per;
    partition_with_sizes(losses, &sizes)
}

/// Splits the ascending order of `losses` into consecutive runs of the
/// given sizes. Sizes may be zero.
pub fn partition_with_sizes(losses: &[f64], sizes: &[usize]) -> Result<BucketPartition> {
    let n = losses.len();
    if sizes.iter().sum::<usize>() != n {
        return Err(shape_err(format!("bucket sizes summing to {n}"), format!("{sizes:?}")));
    }
    let order = argsort_ascending(losses)?;
    let mut buckets = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &size in sizes {
        buckets.push(order[offset..offset + size].to_vec());
        offset += size;
    }
    Ok(BucketPartition {
        buckets,
        n,
        source: ModelRole::Source,
    })
}
