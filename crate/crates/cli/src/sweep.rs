//! One run per value of a single config key.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::runner::{apply_overrides, run_experiment, write_atomic, RunOutput};

pub const SUMMARY_FILE: &str = "summary.csv";

fn param_err(param: &str, message: impl ToString) -> CliError {
    CliError::Config {
        key: param.into(),
        message: message.to_string(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Parses `raw` as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Returns a copy of `cfg` with the dotted key `param` set to `raw`.
pub fn with_param(cfg: &ExperimentConfig, param: &str, raw: &str) -> Result<ExperimentConfig> {
    let mut root = toml::Value::try_from(cfg).map_err(|e| param_err(param, e))?;
    let parts: Vec<&str> = param.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(param_err(param, "not a dotted config key"));
    }
    let (leaf, parents) = parts.split_last().expect("split yields at least one part");
    let mut table = root.as_table_mut().expect("config serializes to a table");
    for p in parents {
        table = table
            .get_mut(*p)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| param_err(param, format!("unknown config section `{p}`")))?;
    }
    table.insert((*leaf).to_string(), parse_value(raw));
    let text = toml::to_string(&root).map_err(|e| param_err(param, e))?;
    let out: ExperimentConfig = toml::from_str(&text).map_err(|e| param_err(param, e.message()))?;
    out.validate().map_err(|e| param_err(param, e))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub mode: String,
    /// Last-epoch validation metric, averaged over seeds.
    pub final_val_metric: f64,
    pub test_metric: String,
    pub test_mean: f64,
    /// Stage in effect during the last epoch.
    pub final_stage: usize,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub dir: PathBuf,
    pub runs: Vec<RunOutput>,
    pub rows: Vec<SweepRow>,
}

fn summarize(param: &str, value: &str, run: &RunOutput) -> Vec<SweepRow> {
    let mut modes: Vec<&str> = Vec::new();
    for c in &run.cells {
        if !modes.contains(&c.mode.name()) {
            modes.push(c.mode.name());
        }
    }
    modes
        .into_iter()
        .map(|mode| {
            let cells: Vec<_> = run.cells.iter().filter(|c| c.mode.name() == mode).collect();
            let last = |c: &&crate::runner::CellResult| c.log.epochs.last().expect("at least one epoch").clone();
            let vals: Vec<f64> = cells.iter().map(|c| last(c).val_metric).collect();
            let metric = if cells[0].test.mse.is_some() { "mse" } else { "accuracy" };
            let tests: Vec<f64> = cells.iter().map(|c| c.test.mse.or(c.test.accuracy).unwrap_or(f64::NAN)).collect();
            SweepRow {
                param: param.into(),
                value: value.into(),
                mode: mode.into(),
                final_val_metric: mean(&vals),
                test_metric: metric.into(),
                test_mean: mean(&tests),
                final_stage: cells.iter().map(|c| last(c).stage).max().unwrap_or(1),
            }
        })
        .collect()
}

/// Runs `config_path` once per value under `<out>/<name>_sweep/<param>=<value>`
/// and writes `summary.csv` next to the runs.
pub fn sweep(
    config_path: &Path,
    param: &str,
    values: &[String],
    out: Option<&Path>,
    seeds: Option<&[u64]>,
) -> Result<SweepOutput> {
    let values: Vec<&String> = values.iter().filter(|v| !v.trim().is_empty()).collect();
    if values.is_empty() {
        return Err(param_err("--values", "needs at least one value"));
    }
    let mut base = ExperimentConfig::load(config_path)?;
    apply_overrides(&mut base, config_path, seeds)?;
    // fail on a bad key before any run starts
    let variants: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| with_param(&base, param, v))
        .collect::<Result<_>>()?;

    let dir = base.out_root(out).join(format!("{}_sweep", base.name));
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for (raw, mut cfg) in values.iter().zip(variants) {
        cfg.name = format!("{param}={raw}");
        let run = run_experiment(&cfg, &dir.join(&cfg.name))?;
        rows.extend(summarize(param, raw, &run));
        runs.push(run);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).map_err(aptf::AptfError::from)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(&dir, e.into_error()))?;
    write_atomic(&dir.join(SUMMARY_FILE), &bytes)?;
    Ok(SweepOutput { dir, runs, rows })
}
