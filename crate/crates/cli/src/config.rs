//! Experiment configuration file (TOML).

use std::path::{Path, PathBuf};

use aptf::baselines::{CoteachingConfig, SelfPacedConfig};
use aptf::datasets::{
    ClassificationSpec, CorruptionScope, CsvSchema, SplitSpec, SyntheticSpec, Task,
};
use aptf::models::{ModelSpec, OptimizerSpec};
use aptf::predictability::{StagePlan, TscBucketConfig};
use aptf::trainer::{TrainMode, TrainerConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "APTF_OUT";
pub const DEFAULT_OUT: &str = "runs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run directory name under the output root.
    pub name: String,
    pub seeds: Vec<u64>,
    pub modes: Vec<String>,
    /// Output root; overridden by `--out`, falls back to `$APTF_OUT`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub trainer: TrainerSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seeds: vec![0, 1, 2, 3],
            modes: vec!["plain".into(), "hpl".into()],
            output: None,
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            trainer: TrainerSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Label used in reports.
    pub name: String,
    pub lookback: usize,
    pub horizon: usize,
    pub split: SplitSpec,
    pub scope: CorruptionScope,
    /// Score val/test against the uncorrupted series when available.
    pub clean_eval: bool,
    pub normalize: bool,
    /// Fixed data seed; when absent each training seed gets its own draw.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub source: DataSource,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            lookback: 8,
            horizon: 1,
            split: SplitSpec::default(),
            scope: CorruptionScope::Window,
            clean_eval: true,
            normalize: true,
            seed: None,
            source: DataSource::Synthetic(SyntheticSpec::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
    Classification(ClassificationSpec),
}

impl DataSource {
    pub fn task(&self) -> Task {
        match self {
            DataSource::Classification(_) => Task::Classify,
            _ => Task::Forecast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LinearForecaster,
    MlpForecaster,
    MlpClassifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelChoice {
    pub kind: ModelKind,
    /// Hidden width for the MLP kinds.
    pub hidden: usize,
}

impl Default for ModelChoice {
    fn default() -> Self {
        Self {
            kind: ModelKind::LinearForecaster,
            hidden: 32,
        }
    }
}

impl ModelChoice {
    /// Concrete spec once the data shape is known.
    pub fn spec(&self, lookback: usize, horizon: usize, variables: usize, classes: usize) -> ModelSpec {
        match self.kind {
            ModelKind::LinearForecaster => ModelSpec::LinearForecaster {
                lookback,
                horizon,
                variables,
            },
            ModelKind::MlpForecaster => ModelSpec::MlpForecaster {
                lookback,
                horizon,
                variables,
                hidden: self.hidden,
            },
            ModelKind::MlpClassifier => ModelSpec::MlpClassifier {
                lookback,
                variables,
                hidden: self.hidden,
                classes,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub source: ModelChoice,
    /// Peer model for two-model modes; defaults to the source model's kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amortization: Option<ModelChoice>,
}

/// Trainer settings shared by every (mode, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle: bool,
    pub optimizer: OptimizerSpec,
    pub stage: StagePlan,
    pub tsc: TscBucketConfig,
    pub coteaching: CoteachingConfig,
    pub self_paced: SelfPacedConfig,
    /// Record per-sample weights and log separation scores (synthetic data).
    pub track_separation: bool,
    pub save_checkpoints: bool,
}

impl Default for TrainerSection {
    fn default() -> Self {
        let base = TrainerConfig::default();
        Self {
            epochs: base.epochs,
            batch_size: base.batch_size,
            shuffle: base.shuffle,
            optimizer: base.optimizer,
            stage: base.stage,
            tsc: base.tsc,
            coteaching: base.coteaching,
            self_paced: base.self_paced,
            track_separation: false,
            save_checkpoints: true,
        }
    }
}

impl TrainerSection {
    pub fn for_cell(&self, mode: TrainMode, seed: u64) -> TrainerConfig {
        TrainerConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            optimizer: self.optimizer,
            stage: self.stage,
            mode,
            seed,
            shuffle: self.shuffle,
            tsc: self.tsc,
            coteaching: self.coteaching,
            self_paced: self.self_paced,
            record_weights: self.track_separation,
        }
    }
}

fn config_err(key: &str, message: impl ToString) -> CliError {
    CliError::Config {
        key: key.into(),
        message: message.to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .map(|s| text[..s.start].lines().last().unwrap_or("").trim().to_string())
                .filter(|k| !k.is_empty())
                .unwrap_or_else(|| "<file>".into());
            config_err(&key, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err("<file>", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn parsed_modes(&self) -> Result<Vec<TrainMode>, CliError> {
        self.modes
            .iter()
            .map(|m| m.parse::<TrainMode>().map_err(|e| config_err("modes", e)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_err("name", "must be a nonempty directory name"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("seeds", "at least one seed is required"));
        }
        if self.modes.is_empty() {
            return Err(config_err("modes", "at least one mode is required"));
        }
        let modes = self.parsed_modes()?;
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = modes.iter().find(|m| !seen.insert(**m)) {
            return Err(config_err("modes", format!("mode `{dup}` listed twice")));
        }
        let d = &self.dataset;
        if d.lookback == 0 {
            return Err(config_err("dataset.lookback", "must be positive"));
        }
        if d.horizon == 0 {
            return Err(config_err("dataset.horizon", "must be positive"));
        }
        d.split.validate().map_err(|e| config_err("dataset.split", e))?;
        match &d.source {
            DataSource::Synthetic(s) => s.validate().map_err(|e| config_err("dataset.source", e))?,
            DataSource::Classification(c) => {
                if self.model.source.kind != ModelKind::MlpClassifier {
                    return Err(config_err("model.kind", "classification data needs mlp_classifier"));
                }
                if c.length != d.lookback {
                    return Err(config_err(
                        "dataset.lookback",
                        format!("must equal the classification series length {}", c.length),
                    ));
                }
            }
            DataSource::Csv { .. } => {}
        }
        if d.source.task() == Task::Forecast && self.model.source.kind == ModelKind::MlpClassifier {
            return Err(config_err("model.kind", "mlp_classifier needs classification data"));
        }
        for (key, choice) in [("model", Some(self.model.source)), ("model.amortization", self.model.amortization)] {
            if let Some(c) = choice {
                if c.kind != ModelKind::LinearForecaster && c.hidden == 0 {
                    return Err(config_err(&format!("{key}.hidden"), "must be positive"));
                }
            }
        }
        let t = &self.trainer;
        if t.epochs == 0 {
            return Err(config_err("trainer.epochs", "must be positive"));
        }
        if t.batch_size == 0 {
            return Err(config_err("trainer.batch_size", "must be positive"));
        }
        if t.optimizer.lr.is_nan() || t.optimizer.lr <= 0.0 {
            return Err(config_err("trainer.optimizer.lr", "must be positive"));
        }
        t.stage.validate().map_err(|e| config_err("trainer.stage", e))?;
        t.tsc.validate().map_err(|e| config_err("trainer.tsc", e))?;
        t.coteaching.validate().map_err(|e| config_err("trainer.coteaching", e))?;
        t.self_paced.validate().map_err(|e| config_err("trainer.self_paced", e))?;
        Ok(())
    }

    /// Output root: explicit flag, then the config, then `$APTF_OUT`, then
    /// `runs`.
    pub fn out_root(&self, flag: Option<&Path>) -> PathBuf {
        resolve_out_root(flag.map(Path::to_path_buf).or_else(|| self.output.clone()))
    }
}

pub fn resolve_out_root(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}
