//! Forecast and classification metrics, plus per-seed aggregation and the
//! report CSV formats.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, AptfError, Result};
use crate::numeric::Matrix;

fn check_len(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(shape_err(
            format!("{} nonempty values", target.len()),
            format!("{}", pred.len()),
        ));
    }
    Ok(())
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// `100 * sum|pred - target| / sum|target|`.
pub fn wmape(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len(pred, target)?;
    let denom: f64 = target.iter().map(|t| t.abs()).sum();
    if denom == 0.0 {
        return Err(AptfError::ZeroDenominator);
    }
    let num: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum();
    Ok(100.0 * num / denom)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(logits: &[Matrix], labels: &[usize]) -> Result<f64> {
    if logits.len() != labels.len() || logits.is_empty() {
        return Err(shape_err(
            format!("{} nonempty labels", logits.len()),
            format!("{}", labels.len()),
        ));
    }
    let hits = logits
        .iter()
        .zip(labels)
        .filter(|(z, &y)| argmax(z.as_slice()) == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// One measured value for one (dataset, model, mode, horizon, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub dataset: String,
    pub model: String,
    pub mode: String,
    pub horizon: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub dataset: String,
    pub model: String,
    pub mode: String,
    pub horizon: usize,
    pub metric: String,
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub std: f64,
    pub n: usize,
}

impl AggregateEntry {
    pub fn key(&self) -> (&str, &str, &str, usize, &str) {
        (&self.dataset, &self.model, &self.mode, self.horizon, &self.metric)
    }
}

/// Mean and population std per (dataset, model, mode, horizon, metric), in
/// first-seen order.
pub fn aggregate(entries: &[ReportEntry]) -> Vec<AggregateEntry> {
    let mut out: Vec<(AggregateEntry, f64)> = Vec::new();
    for e in entries {
        let pos = out.iter().position(|(a, _)| {
            a.dataset == e.dataset
                && a.model == e.model
                && a.mode == e.mode
                && a.horizon == e.horizon
                && a.metric == e.metric
        });
        let (agg, m2) = match pos {
            Some(p) => &mut out[p],
            None => {
                out.push((
                    AggregateEntry {
                        dataset: e.dataset.clone(),
                        model: e.model.clone(),
                        mode: e.mode.clone(),
                        horizon: e.horizon,
                        metric: e.metric.clone(),
                        mean: 0.0,
                        std: 0.0,
                        n: 0,
                    },
                    0.0,
                ));
                out.last_mut().expect("just pushed")
            }
        };
        // Welford
        agg.n += 1;
        let delta = e.value - agg.mean;
        agg.mean += delta / agg.n as f64;
        *m2 += delta * (e.value - agg.mean);
    }
    out.into_iter()
        .map(|(mut a, m2)| {
            a.std = (m2 / a.n as f64).max(0.0).sqrt();
            a
        })
        .collect()
}

pub const AGGREGATE_HEADER_NOTE: &str = "# std is the population standard deviation (divisor n)";

pub fn write_report_csv<W: Write>(entries: &[ReportEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<ReportEntry>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    r.deserialize().map(|e| e.map_err(AptfError::from)).collect()
}

pub fn write_aggregate_csv<W: Write>(entries: &[AggregateEntry], mut out: W) -> Result<()> {
    writeln!(out, "{AGGREGATE_HEADER_NOTE}")?;
    let mut w = csv::Writer::from_writer(out);
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<AggregateEntry>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    r.deserialize().map(|e| e.map_err(AptfError::from)).collect()
}
