//! Executes every (mode, seed) cell of an experiment and writes the run
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use aptf::datasets::{
    build_forecast_split, generate_classification, generate_synthetic, load_csv,
    normalize_train_stats, split_chrono, PipelineSpec, SplitData, Task, WindowSpec,
};
use aptf::metrics::{aggregate, write_aggregate_csv, write_report_csv, ReportEntry};
use aptf::models::{init_model, save_checkpoint, ModelState};
use aptf::trainer::{
    evaluate, track_separation, train_amortized, train_coteaching, train_single, Evaluation,
    TrainLog, TrainMode,
};
use aptf::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{CliError, Result};

const DATA_STREAM: u64 = 1;
const SOURCE_INIT_STREAM: u64 = 2;
const PEER_INIT_STREAM: u64 = 3;

pub const CONFIG_FILE: &str = "config.toml";
pub const REPORT_FILE: &str = "report.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const PLOT_FILE: &str = "plot_data.csv";

/// Builds the train/val/test samples for one data seed.
pub fn prepare_data(cfg: &ExperimentConfig, seed: u64) -> Result<SplitData> {
    let d = &cfg.dataset;
    let mut rng = Rng::new(d.seed.unwrap_or(seed)).fork(DATA_STREAM);
    let pipeline = PipelineSpec {
        window: WindowSpec::forecast(d.lookback, d.horizon),
        split: d.split,
        scope: d.scope,
        clean_eval: d.clean_eval,
        normalize: d.normalize,
    };
    let data = match &d.source {
        DataSource::Synthetic(spec) => {
            build_forecast_split(&generate_synthetic(&mut rng, spec)?, &pipeline)?
        }
        DataSource::Csv { path, schema } => build_forecast_split(&load_csv(path, schema)?, &pipeline)?,
        DataSource::Classification(spec) => {
            let samples = generate_classification(&mut rng, spec)?;
            let (train, val, test) = split_chrono(samples, d.split)?;
            let (train, val, test) = if d.normalize {
                let (a, b, c, _) = normalize_train_stats(&train, &val, &test)?;
                (a, b, c)
            } else {
                (train, val, test)
            };
            SplitData {
                task: Task::Classify,
                train,
                val,
                test,
            }
        }
    };
    Ok(data)
}

/// Outcome of one (mode, seed) cell. Only the source model is reported.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub mode: TrainMode,
    pub seed: u64,
    pub model: ModelState,
    pub log: TrainLog,
    pub test: Evaluation,
}

pub fn run_cell(cfg: &ExperimentConfig, mode: TrainMode, seed: u64, data: &SplitData) -> Result<CellResult> {
    let variables = data.train[0].input.cols();
    let classes = match &cfg.dataset.source {
        DataSource::Classification(c) => c.classes,
        _ => 0,
    };
    let (lookback, horizon) = (cfg.dataset.lookback, cfg.dataset.horizon);
    let source_spec = cfg.model.source.spec(lookback, horizon, variables, classes);
    let peer_spec = cfg
        .model
        .amortization
        .unwrap_or(cfg.model.source)
        .spec(lookback, horizon, variables, classes);
    let rng = Rng::new(seed);
    let source = init_model(source_spec, &mut rng.fork(SOURCE_INIT_STREAM))?;
    let tcfg = cfg.trainer.for_cell(mode, seed);

    let (model, mut log) = match mode {
        TrainMode::HplAmortized | TrainMode::Coteaching => {
            let peer = init_model(peer_spec, &mut rng.fork(PEER_INIT_STREAM))?;
            let pair = if mode == TrainMode::Coteaching {
                train_coteaching(source, peer, data, &tcfg)?
            } else {
                train_amortized(source, peer, data, &tcfg)?
            };
            (pair.source, pair.source_log)
        }
        _ => train_single(source, data, &tcfg)?,
    };
    if cfg.trainer.track_separation {
        match track_separation(&log, &data.train) {
            Ok(scores) => {
                for (rec, score) in log.epochs.iter_mut().zip(scores) {
                    rec.separation = score;
                }
            }
            Err(e) => log::warn!("{mode} seed {seed}: separation not tracked: {e}"),
        }
    }
    let test = evaluate(&model, &data.test)?;
    Ok(CellResult {
        mode,
        seed,
        model,
        log,
        test,
    })
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub cells: Vec<CellResult>,
    pub report: Vec<ReportEntry>,
}

pub fn report_entries(cfg: &ExperimentConfig, cells: &[CellResult]) -> Vec<ReportEntry> {
    let task = cfg.dataset.source.task();
    let horizon = if task == Task::Forecast { cfg.dataset.horizon } else { 0 };
    let mut out = Vec::new();
    for cell in cells {
        let metrics = [
            ("mse", cell.test.mse),
            ("mae", cell.test.mae),
            ("wmape", cell.test.wmape),
            ("accuracy", cell.test.accuracy),
        ];
        for (metric, value) in metrics {
            if let Some(value) = value {
                out.push(ReportEntry {
                    dataset: cfg.dataset.name.clone(),
                    model: cell.model.spec.name().into(),
                    mode: cell.mode.name().into(),
                    horizon,
                    seed: cell.seed,
                    metric: metric.into(),
                    value,
                });
            }
        }
    }
    out
}

#[derive(Serialize)]
struct PlotRow<'a> {
    mode: &'a str,
    seed: u64,
    epoch: usize,
    stage: usize,
    train_loss: f64,
    val_metric: f64,
    separation: Option<f64>,
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn cell_stem(mode: TrainMode, seed: u64) -> String {
    format!("{mode}_seed{seed}")
}

/// Runs all cells of `cfg` and writes the run directory `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let modes = cfg.parsed_modes()?;
    create_dir(&dir.join("logs"))?;
    if cfg.trainer.save_checkpoints {
        create_dir(&dir.join("checkpoints"))?;
    }
    write_atomic(&dir.join(CONFIG_FILE), cfg.to_toml().as_bytes())?;

    let datasets: Vec<SplitData> = cfg
        .seeds
        .par_iter()
        .map(|&seed| prepare_data(cfg, seed))
        .collect::<Result<_>>()?;
    let jobs: Vec<(TrainMode, usize)> = modes
        .iter()
        .flat_map(|&m| (0..cfg.seeds.len()).map(move |i| (m, i)))
        .collect();
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(mode, i)| {
            log::info!("running {mode} seed {}", cfg.seeds[i]);
            run_cell(cfg, mode, cfg.seeds[i], &datasets[i])
        })
        .collect::<Result<_>>()?;

    let mut plot = csv::Writer::from_writer(Vec::new());
    for (cell, &(_, i)) in cells.iter().zip(&jobs) {
        let stem = cell_stem(cell.mode, cell.seed);
        write_atomic(
            &dir.join("logs").join(format!("{stem}.jsonl")),
            cell.log.to_jsonl()?.as_bytes(),
        )?;
        if cfg.trainer.save_checkpoints {
            let path = dir.join("checkpoints").join(format!("{stem}.ckpt"));
            let steps = cfg.trainer.epochs as u64 * datasets[i].train.len().div_ceil(cfg.trainer.batch_size) as u64;
            save_checkpoint(&path, &cell.model, steps)?;
        }
        for rec in &cell.log.epochs {
            plot.serialize(PlotRow {
                mode: cell.mode.name(),
                seed: cell.seed,
                epoch: rec.epoch,
                stage: rec.stage,
                train_loss: rec.train_loss,
                val_metric: rec.val_metric,
                separation: rec.separation,
            })
            .map_err(aptf::AptfError::from)?;
        }
    }
    let plot = plot.into_inner().map_err(|e| CliError::io(dir, e.into_error()))?;
    write_atomic(&dir.join(PLOT_FILE), &plot)?;

    let report = report_entries(cfg, &cells);
    let mut buf = Vec::new();
    write_report_csv(&report, &mut buf)?;
    write_atomic(&dir.join(REPORT_FILE), &buf)?;
    let mut buf = Vec::new();
    write_aggregate_csv(&aggregate(&report), &mut buf)?;
    write_atomic(&dir.join(AGGREGATE_FILE), &buf)?;

    Ok(RunOutput {
        dir: dir.to_path_buf(),
        cells,
        report,
    })
}

/// Loads a config file, applies command-line overrides and runs it under
/// `<out root>/<name>`.
pub fn run_config_file(
    path: &Path,
    out: Option<&Path>,
    seed_override: Option<&[u64]>,
) -> Result<RunOutput> {
    let mut cfg = ExperimentConfig::load(path)?;
    apply_overrides(&mut cfg, path, seed_override)?;
    let dir = cfg.out_root(out).join(&cfg.name);
    run_experiment(&cfg, &dir)
}

/// Seed override plus resolution of relative CSV paths against the config
/// file's directory, so the copied config stays valid.
pub fn apply_overrides(cfg: &mut ExperimentConfig, config_path: &Path, seeds: Option<&[u64]>) -> Result<()> {
    if let Some(seeds) = seeds {
        if seeds.is_empty() {
            return Err(CliError::Config {
                key: "--seed-override".into(),
                message: "needs at least one seed".into(),
            });
        }
        cfg.seeds = seeds.to_vec();
    }
    if let DataSource::Csv { path, .. } = &mut cfg.dataset.source {
        if path.is_relative() {
            let base = config_path.parent().unwrap_or(Path::new("."));
            *path = base.join(&*path);
        }
    }
    cfg.validate()
}
