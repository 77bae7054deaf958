use serde::{Deserialize, Serialize};

use super::{Sample, SeriesTable, SplitData, Target, Task};
use crate::error::{AptfError, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lookback: usize,
    /// Forecast horizon; ignored for classification windows.
    pub horizon: usize,
    pub task: Task,
}

impl WindowSpec {
    pub fn forecast(lookback: usize, horizon: usize) -> Self {
        Self {
            lookback,
            horizon,
            task: Task::Forecast,
        }
    }

    pub fn span(&self) -> usize {
        match self.task {
            Task::Forecast => self.lookback + self.horizon,
            Task::Classify => self.lookback,
        }
    }
}

/// Which part of a window is exposed to injected corruption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionScope {
    /// Inputs and targets both come from the observed (corrupted) series.
    #[default]
    Window,
    /// Inputs come from the clean series, targets from the observed one.
    TargetsOnly,
}

/// Stride-1 windows over `table`.
pub fn windowize(
    table: &SeriesTable,
    spec: WindowSpec,
    labels: Option<&[usize]>,
) -> Result<Vec<Sample>> {
    windowize_with(table, spec, labels, CorruptionScope::Window)
}

pub fn windowize_with(
    table: &SeriesTable,
    spec: WindowSpec,
    labels: Option<&[usize]>,
    scope: CorruptionScope,
) -> Result<Vec<Sample>> {
    if spec.lookback == 0 || (spec.task == Task::Forecast && spec.horizon == 0) {
        return Err(AptfError::BadSpec("lookback and horizon must be positive".into()));
    }
    let span = spec.span();
    let length = table.len();
    if length < span {
        return Err(AptfError::TooShort {
            length,
            lookback: spec.lookback,
            horizon: if spec.task == Task::Forecast { spec.horizon } else { 0 },
        });
    }
    let count = length - span + 1;
    if spec.task == Task::Classify {
        match labels {
            Some(l) if l.len() == count => {}
            Some(l) => {
                return Err(AptfError::ShapeMismatch {
                    expected: format!("{count} window labels"),
                    got: format!("{}", l.len()),
                })
            }
            None => return Err(AptfError::BadSpec("classification windows need labels".into())),
        }
    }

    let observed = table.values();
    let input_src = match scope {
        CorruptionScope::Window => observed,
        CorruptionScope::TargetsOnly => table.clean_values().ok_or_else(|| {
            AptfError::BadSpec("targets-only corruption needs a clean series".into())
        })?,
    };
    let mask = table.mask();
    let flagged = |from: usize, to: usize| mask.is_some_and(|m| m[from..to].iter().any(|&b| b));

    let mut samples = Vec::with_capacity(count);
    for start in 0..count {
        let input_end = start + spec.lookback;
        let input = input_src.slice_rows(start, input_end);
        let (target, corrupted) = match spec.task {
            Task::Forecast => {
                let target = observed.slice_rows(input_end, input_end + spec.horizon);
                let corrupted = match scope {
                    CorruptionScope::Window => flagged(start, start + span),
                    CorruptionScope::TargetsOnly => flagged(input_end, start + span),
                };
                (Target::Forecast(target), corrupted)
            }
            Task::Classify => (
                Target::Class(labels.expect("checked above")[start]),
                flagged(start, start + span),
            ),
        };
        samples.push(Sample {
            input,
            target,
            corrupted,
            start,
            span,
        });
    }
    Ok(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.7,
            val_frac: 0.1,
            test_frac: 0.2,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train_frac, self.val_frac, self.test_frac];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(AptfError::BadSpec(format!("split fractions {parts:?} out of range")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(AptfError::BadSpec(format!("split fractions {parts:?} do not sum to 1")));
        }
        Ok(())
    }
}

/// Contiguous chronological split. Samples are assumed ordered by `start`.
/// Samples at the head of val/test whose windows overlap an earlier split
/// are dropped.
pub fn split_chrono(
    samples: Vec<Sample>,
    spec: SplitSpec,
) -> Result<(Vec<Sample>, Vec<Sample>, Vec<Sample>)> {
    spec.validate()?;
    let n = samples.len();
    let n_train = (spec.train_frac * n as f64).round() as usize;
    let n_train_val = (((spec.train_frac + spec.val_frac) * n as f64).round() as usize).min(n);

    let mut rest = samples;
    let mut tail = rest.split_off(n_train_val);
    let val_raw = rest.split_off(n_train.min(rest.len()));
    let train = rest;

    if train.is_empty() {
        return Err(AptfError::EmptySplit("train"));
    }
    let train_end = train.iter().map(Sample::end).max().unwrap_or(0);
    let val: Vec<Sample> = val_raw.into_iter().filter(|s| s.start >= train_end).collect();
    if val.is_empty() {
        return Err(AptfError::EmptySplit("val"));
    }
    let val_end = val.iter().map(Sample::end).max().unwrap_or(0).max(train_end);
    tail.retain(|s| s.start >= val_end);
    if tail.is_empty() {
        return Err(AptfError::EmptySplit("test"));
    }
    Ok((train, val, tail))
}

/// Per-variable affine normalization fitted on training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub const STD_FLOOR: f64 = 1e-8;

    /// Fits on every input row of `samples`.
    pub fn fit(samples: &[Sample]) -> Result<Self> {
        let first = samples.first().ok_or(AptfError::EmptySplit("train"))?;
        let v = first.input.cols();
        let mut sum = vec![0.0; v];
        let mut count = 0usize;
        for s in samples {
            for r in 0..s.input.rows() {
                for (acc, x) in sum.iter_mut().zip(s.input.row(r)) {
                    *acc += x;
                }
            }
            count += s.input.rows();
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = vec![0.0; v];
        for s in samples {
            for r in 0..s.input.rows() {
                for ((acc, x), m) in sq.iter_mut().zip(s.input.row(r)).zip(&mean) {
                    *acc += (x - m).powi(2);
                }
            }
        }
        let std = sq
            .iter()
            .map(|s| (s / count as f64).sqrt().max(Self::STD_FLOOR))
            .collect();
        Ok(Self { mean, std })
    }

    pub fn normalize(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        let cols = m.cols();
        for (i, x) in out.as_mut_slice().iter_mut().enumerate() {
            let c = i % cols;
            *x = (*x - self.mean[c]) / self.std[c];
        }
        out
    }

    pub fn denormalize(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        let cols = m.cols();
        for (i, x) in out.as_mut_slice().iter_mut().enumerate() {
            let c = i % cols;
            *x = *x * self.std[c] + self.mean[c];
        }
        out
    }

    pub fn apply(&self, samples: &[Sample]) -> Vec<Sample> {
        samples
            .iter()
            .map(|s| Sample {
                input: self.normalize(&s.input),
                target: match &s.target {
                    Target::Forecast(t) => Target::Forecast(self.normalize(t)),
                    Target::Class(c) => Target::Class(*c),
                },
                ..s.clone()
            })
            .collect()
    }
}

type NormalizedSplits = (Vec<Sample>, Vec<Sample>, Vec<Sample>, Normalizer);

/// Normalizes all three splits with statistics from `train` only.
pub fn normalize_train_stats(
    train: &[Sample],
    val: &[Sample],
    test: &[Sample],
) -> Result<NormalizedSplits> {
    let norm = Normalizer::fit(train)?;
    Ok((norm.apply(train), norm.apply(val), norm.apply(test), norm))
}

/// Everything needed to turn a series table into train/val/test samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub window: WindowSpec,
    pub split: SplitSpec,
    pub scope: CorruptionScope,
    /// Evaluate val/test on the uncorrupted series when the table has one.
    pub clean_eval: bool,
    pub normalize: bool,
}

/// Windows, splits and (optionally) normalizes `table` for forecasting.
pub fn build_forecast_split(table: &SeriesTable, spec: &PipelineSpec) -> Result<SplitData> {
    let samples = windowize_with(table, spec.window, None, spec.scope)?;
    let (train, mut val, mut test) = split_chrono(samples, spec.split)?;
    if spec.clean_eval {
        if let Some(clean) = table.clean_table() {
            let clean_samples = windowize(&clean, spec.window, None)?;
            let (_, v, t) = split_chrono(clean_samples, spec.split)?;
            val = v;
            test = t;
        }
    }
    if spec.normalize {
        let (train, val, test, _) = normalize_train_stats(&train, &val, &test)?;
        return Ok(SplitData { task: Task::Forecast, train, val, test });
    }
    Ok(SplitData { task: Task::Forecast, train, val, test })
}
