//! Series tables, windowed samples and chronological splits.

mod csv_io;
mod synthetic;
mod window;

pub use csv_io::{load_csv, write_csv, CsvSchema};
pub use synthetic::{
    generate_classification, generate_synthetic, ClassificationSpec, Process, SyntheticSpec,
};
pub use window::{
    build_forecast_split, normalize_train_stats, split_chrono, windowize, windowize_with,
    CorruptionScope, Normalizer, PipelineSpec, SplitSpec, WindowSpec,
};

use serde::{Deserialize, Serialize};

use crate::error::{AptfError, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Forecast,
    Classify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampFormat {
    Integer,
    Iso8601,
}

/// A multivariate series: `t` rows by `v` variables, strictly increasing
/// timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    timestamps: Vec<i64>,
    format: TimestampFormat,
    columns: Vec<String>,
    values: Matrix,
    /// Per-row corruption flags (synthetic data only).
    mask: Option<Vec<bool>>,
    /// Values before corruption was injected (synthetic data only).
    clean: Option<Matrix>,
}

impl SeriesTable {
    pub fn new(
        timestamps: Vec<i64>,
        format: TimestampFormat,
        columns: Vec<String>,
        values: Matrix,
    ) -> Result<Self> {
        if timestamps.len() != values.rows() {
            return Err(AptfError::ShapeMismatch {
                expected: format!("{} timestamps", values.rows()),
                got: format!("{}", timestamps.len()),
            });
        }
        if columns.len() != values.cols() {
            return Err(AptfError::ShapeMismatch {
                expected: format!("{} column names", values.cols()),
                got: format!("{}", columns.len()),
            });
        }
        if let Some(pos) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(AptfError::NonMonotonicTimestamps { row: pos + 1 });
        }
        Ok(Self {
            timestamps,
            format,
            columns,
            values,
            mask: None,
            clean: None,
        })
    }

    /// Attaches ground-truth corruption: `mask[t]` marks corrupted rows and
    /// `clean` holds the uncorrupted values.
    pub fn with_corruption(mut self, mask: Vec<bool>, clean: Matrix) -> Result<Self> {
        if mask.len() != self.len() || clean.shape() != self.values.shape() {
            return Err(AptfError::ShapeMismatch {
                expected: format!("mask of {} and clean {:?}", self.len(), self.values.shape()),
                got: format!("mask of {} and clean {:?}", mask.len(), clean.shape()),
            });
        }
        self.mask = Some(mask);
        self.clean = Some(clean);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn variables(&self) -> usize {
        self.values.cols()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn timestamp_format(&self) -> TimestampFormat {
        self.format
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn clean_values(&self) -> Option<&Matrix> {
        self.clean.as_ref()
    }

    /// The same table with the uncorrupted values and an all-false mask.
    pub fn clean_table(&self) -> Option<SeriesTable> {
        let clean = self.clean.clone()?;
        Some(SeriesTable {
            timestamps: self.timestamps.clone(),
            format: self.format,
            columns: self.columns.clone(),
            values: clean.clone(),
            mask: Some(vec![false; self.len()]),
            clean: Some(clean),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// `horizon x variables` future values.
    Forecast(Matrix),
    /// Zero-based class index.
    Class(usize),
}

/// One training example cut from a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// `lookback x variables`.
    pub input: Matrix,
    pub target: Target,
    /// Ground-truth low-predictability flag (synthetic data only).
    pub corrupted: bool,
    /// Index of the first timestep covered by the sample.
    pub start: usize,
    /// Number of consecutive timesteps covered (input plus target).
    pub span: usize,
}

impl Sample {
    pub fn end(&self) -> usize {
        self.start + self.span
    }

    pub fn forecast_target(&self) -> Option<&Matrix> {
        match &self.target {
            Target::Forecast(m) => Some(m),
            Target::Class(_) => None,
        }
    }

    pub fn class(&self) -> Option<usize> {
        match self.target {
            Target::Class(c) => Some(c),
            Target::Forecast(_) => None,
        }
    }
}

/// Train/validation/test samples for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub task: Task,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl SplitData {
    pub fn has_ground_truth(&self) -> bool {
        self.train.iter().any(|s| s.corrupted)
    }
}
