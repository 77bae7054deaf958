//! Training loops: single-model, amortized (two models that rank each
//! other's batches), and the comparison baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    coteaching_keep, self_paced_weights, CoteachingConfig, SelfPacedConfig,
};
use crate::datasets::{Sample, SplitData, Target, Task};
use crate::error::{shape_err, AptfError, Result};
use crate::metrics;
use crate::models::{per_sample_loss, Gradients, ModelState, OptimizerSpec, OptimizerState};
use crate::numeric::{Matrix, Rng};
use crate::predictability::{
    batch_pal, stage_indicator, tsc_two_bucket_pal_ranked, BucketMode, PalOutput, StagePlan,
    StageTracker, TscBucketConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Unweighted mean loss.
    Plain,
    /// One bucket group for the whole run.
    Fixed,
    /// Hierarchical bucket groups.
    Hpl,
    /// Hierarchical groups, ranking supplied by a peer model.
    HplAmortized,
    /// One shrinking bucket group per stage.
    Evolving,
    /// Two buckets with a growing penalized fraction.
    TscTwoBucket,
    /// Two peers, each discarding the samples its peer ranks highest.
    Coteaching,
    /// Binary loss threshold that grows per stage.
    SelfPaced,
}

impl TrainMode {
    pub const ALL: [TrainMode; 8] = [
        TrainMode::Plain,
        TrainMode::Fixed,
        TrainMode::Hpl,
        TrainMode::HplAmortized,
        TrainMode::Evolving,
        TrainMode::TscTwoBucket,
        TrainMode::Coteaching,
        TrainMode::SelfPaced,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrainMode::Plain => "plain",
            TrainMode::Fixed => "fixed",
            TrainMode::Hpl => "hpl",
            TrainMode::HplAmortized => "hpl_amortized",
            TrainMode::Evolving => "evolving",
            TrainMode::TscTwoBucket => "tsc_two_bucket",
            TrainMode::Coteaching => "coteaching",
            TrainMode::SelfPaced => "self_paced",
        }
    }

    pub fn uses_peer(&self) -> bool {
        matches!(self, TrainMode::HplAmortized | TrainMode::Coteaching)
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        TrainMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = TrainMode::ALL.iter().map(TrainMode::name).collect();
                format!("unknown mode `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    pub stage: StagePlan,
    pub mode: TrainMode,
    pub seed: u64,
    pub shuffle: bool,
    pub tsc: TscBucketConfig,
    pub coteaching: CoteachingConfig,
    pub self_paced: SelfPacedConfig,
    /// Keep each training sample's resolved weight for every epoch.
    pub record_weights: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            optimizer: OptimizerSpec::default(),
            stage: StagePlan::default(),
            mode: TrainMode::Hpl,
            seed: 0,
            shuffle: true,
            tsc: TscBucketConfig::default(),
            coteaching: CoteachingConfig::default(),
            self_paced: SelfPacedConfig::default(),
            record_weights: false,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(AptfError::BadSpec("epochs and batch_size must be positive".into()));
        }
        if !(self.optimizer.lr > 0.0) {
            return Err(AptfError::BadSpec("learning rate must be positive".into()));
        }
        self.stage.validate()?;
        self.tsc.validate()?;
        self.coteaching.validate()?;
        self.self_paced.validate()
    }

    /// Stage plan with the bucket mode implied by `self.mode`.
    pub fn effective_plan(&self) -> StagePlan {
        let mode = match self.mode {
            TrainMode::Fixed => BucketMode::Fixed,
            TrainMode::Evolving => BucketMode::Evolving,
            _ => self.stage.mode,
        };
        StagePlan { mode, ..self.stage }
    }

    pub fn stage_cap(&self) -> usize {
        let plan = self.effective_plan();
        match self.mode {
            TrainMode::Fixed | TrainMode::Hpl | TrainMode::HplAmortized | TrainMode::Evolving => {
                plan.stage_cap(self.epochs, Some(self.batch_size))
            }
            _ => plan.max_stages_for(self.epochs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Stage in effect during this epoch.
    pub stage: usize,
    /// Mean unweighted per-sample training loss.
    pub train_loss: f64,
    /// Mean per-batch objective actually optimized.
    pub objective: f64,
    /// Validation MSE (forecasting) or accuracy (classification).
    pub val_metric: f64,
    /// Batches skipped because every sample was excluded.
    pub skipped_batches: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub separation: Option<f64>,
    /// Resolved weight times batch size for every training sample.
    #[serde(skip)]
    pub sample_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    /// One JSON object per epoch, newline-terminated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.epochs {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let epochs = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { epochs })
    }

    pub fn stages(&self) -> Vec<usize> {
        self.epochs.iter().map(|e| e.stage).collect()
    }
}

/// Held-out evaluation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    pub wmape: Option<f64>,
    pub accuracy: Option<f64>,
}

impl Evaluation {
    /// The headline number logged per epoch.
    pub fn primary(&self) -> f64 {
        self.mse.or(self.accuracy).unwrap_or(f64::NAN)
    }
}

pub fn evaluate(model: &ModelState, samples: &[Sample]) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(AptfError::EmptySplit("evaluation"));
    }
    let inputs: Vec<&Matrix> = samples.iter().map(|s| &s.input).collect();
    let preds = model.forward(&inputs)?;
    match model.spec.task() {
        Task::Forecast => {
            let mut p = Vec::new();
            let mut t = Vec::new();
            for (pred, s) in preds.iter().zip(samples) {
                let y = s
                    .forecast_target()
                    .ok_or_else(|| shape_err("forecast target", "class label"))?;
                p.extend_from_slice(pred.as_slice());
                t.extend_from_slice(y.as_slice());
            }
            Ok(Evaluation {
                mse: Some(metrics::mse(&p, &t)?),
                mae: Some(metrics::mae(&p, &t)?),
                wmape: metrics::wmape(&p, &t).ok(),
                accuracy: None,
            })
        }
        Task::Classify => {
            let labels: Vec<usize> = samples
                .iter()
                .map(|s| s.class().ok_or_else(|| shape_err("class label", "forecast target")))
                .collect::<Result<_>>()?;
            Ok(Evaluation {
                mse: None,
                mae: None,
                wmape: None,
                accuracy: Some(metrics::accuracy(&preds, &labels)?),
            })
        }
    }
}

impl ModelState {
    /// Gradient of the plain mean loss over the batch.
    pub fn backward_mean(&self, inputs: &[&Matrix], targets: &[&Target]) -> Result<Gradients> {
        let ones = vec![1.0; inputs.len()];
        let mut g = self.backward_weighted(inputs, targets, &ones)?;
        let n = inputs.len().max(1) as f64;
        for m in &mut g.0 {
            m.as_mut_slice().iter_mut().for_each(|v| *v /= n);
        }
        Ok(g)
    }

    pub fn batch_losses(&self, inputs: &[&Matrix], targets: &[&Target]) -> Result<Vec<f64>> {
        per_sample_loss(&self.forward(inputs)?, targets)
    }
}

/// Sample order for `epoch` (1-based), reseeded from the master seed.
pub fn epoch_order(n: usize, seed: u64, epoch: usize, shuffle: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        Rng::new(seed).fork(epoch as u64).shuffle(&mut order);
    }
    order
}

pub(crate) struct Batch<'a> {
    pub indices: &'a [usize],
    pub inputs: Vec<&'a Matrix>,
    pub targets: Vec<&'a Target>,
}

pub(crate) fn make_batch<'a>(train: &'a [Sample], indices: &'a [usize]) -> Batch<'a> {
    Batch {
        indices,
        inputs: indices.iter().map(|&i| &train[i].input).collect(),
        targets: indices.iter().map(|&i| &train[i].target).collect(),
    }
}

/// How a batch's losses turn into per-sample weights.
#[derive(Debug, Clone, Copy)]
enum Weighting {
    Plain,
    Pal(StagePlan),
    Tsc(TscBucketConfig),
    SelfPaced,
}

/// Per-sample weights for one batch; `None` means "plain mean" so the
/// caller can take the unweighted path.
fn resolve_weights(
    weighting: Weighting,
    stage: usize,
    ranking: &[f64],
    losses: &[f64],
    spl_threshold: f64,
) -> Result<Option<PalOutput>> {
    match weighting {
        Weighting::Plain => Ok(None),
        Weighting::Pal(plan) => batch_pal(&plan, stage, ranking, losses).map(Some),
        Weighting::Tsc(cfg) => tsc_two_bucket_pal_ranked(ranking, losses, &cfg, stage).map(Some),
        Weighting::SelfPaced => {
            let keep = self_paced_weights(losses, spl_threshold);
            let kept = keep.iter().filter(|&&w| w > 0.0).count();
            let weights: Vec<f64> = if kept == 0 {
                vec![0.0; losses.len()]
            } else {
                keep.iter().map(|w| w / kept as f64).collect()
            };
            let loss = weights.iter().zip(losses).map(|(w, l)| w * l).sum();
            Ok(Some(PalOutput { loss, weights }))
        }
    }
}

/// Accumulates per-epoch statistics for one model.
struct EpochStats {
    loss_sum: f64,
    loss_count: usize,
    objective_sum: f64,
    batches: usize,
    skipped: usize,
    weights: Option<Vec<f64>>,
}

impl EpochStats {
    fn new(n_train: usize, record: bool) -> Self {
        Self {
            loss_sum: 0.0,
            loss_count: 0,
            objective_sum: 0.0,
            batches: 0,
            skipped: 0,
            weights: record.then(|| vec![0.0; n_train]),
        }
    }

    fn observe(&mut self, indices: &[usize], losses: &[f64], objective: f64, weights: &[f64]) {
        self.loss_sum += losses.iter().sum::<f64>();
        self.loss_count += losses.len();
        self.objective_sum += objective;
        self.batches += 1;
        if let Some(rec) = &mut self.weights {
            let n = indices.len() as f64;
            for (&i, w) in indices.iter().zip(weights) {
                rec[i] = w * n;
            }
        }
    }

    fn finish(self, epoch: usize, stage: usize, val_metric: f64) -> EpochRecord {
        EpochRecord {
            epoch,
            stage,
            train_loss: self.loss_sum / self.loss_count.max(1) as f64,
            objective: self.objective_sum / self.batches.max(1) as f64,
            val_metric,
            skipped_batches: self.skipped,
            separation: None,
            sample_weights: self.weights,
        }
    }
}

/// One optimization step on `batch` with optional per-sample weights.
/// Returns the objective value and the weights actually used.
fn weighted_step(
    model: &mut ModelState,
    opt: &mut OptimizerState,
    batch: &Batch<'_>,
    losses: &[f64],
    resolved: Option<PalOutput>,
    stats: &mut EpochStats,
) -> Result<()> {
    match resolved {
        None => {
            let g = model.backward_mean(&batch.inputs, &batch.targets)?;
            opt.step(model, &g)?;
            let n = losses.len() as f64;
            let mean = losses.iter().sum::<f64>() / n;
            stats.observe(batch.indices, losses, mean, &vec![1.0 / n; losses.len()]);
        }
        Some(out) => {
            if out.weights.iter().all(|&w| w == 0.0) {
                log::debug!("every sample excluded; skipping batch");
                stats.skipped += 1;
                stats.observe(batch.indices, losses, out.loss, &out.weights);
                return Ok(());
            }
            let g = model.backward_weighted(&batch.inputs, &batch.targets, &out.weights)?;
            opt.step(model, &g)?;
            stats.observe(batch.indices, losses, out.loss, &out.weights);
        }
    }
    Ok(())
}

fn check_data(data: &SplitData, model: &ModelState) -> Result<()> {
    if data.train.is_empty() {
        return Err(AptfError::EmptySplit("train"));
    }
    if data.val.is_empty() {
        return Err(AptfError::EmptySplit("val"));
    }
    if data.task != model.spec.task() {
        return Err(AptfError::BadSpec(format!(
            "{} model on a {:?} dataset",
            model.spec.name(),
            data.task
        )));
    }
    Ok(())
}

fn weighting_for(cfg: &TrainerConfig) -> Result<Weighting> {
    Ok(match cfg.mode {
        TrainMode::Plain => Weighting::Plain,
        TrainMode::Fixed | TrainMode::Hpl | TrainMode::Evolving => {
            Weighting::Pal(cfg.effective_plan())
        }
        TrainMode::TscTwoBucket => Weighting::Tsc(cfg.tsc),
        TrainMode::SelfPaced => Weighting::SelfPaced,
        TrainMode::HplAmortized | TrainMode::Coteaching => {
            return Err(AptfError::BadSpec(format!(
                "mode {} trains two models; use train_amortized or train_coteaching",
                cfg.mode
            )))
        }
    })
}

/// Trains one model. Weights for each batch come from the model's own
/// losses.
pub fn train_single(
    mut model: ModelState,
    data: &SplitData,
    cfg: &TrainerConfig,
) -> Result<(ModelState, TrainLog)> {
    cfg.validate()?;
    check_data(data, &model)?;
    let weighting = weighting_for(cfg)?;
    let mut opt = OptimizerState::new(cfg.optimizer, &model);
    let mut tracker = StageTracker::new(cfg.effective_plan(), cfg.stage_cap());
    let mut spl_threshold = cfg.self_paced.initial_threshold;
    let mut log = TrainLog::default();

    for epoch in 1..=cfg.epochs {
        let stage = tracker.stage();
        let order = epoch_order(data.train.len(), cfg.seed, epoch, cfg.shuffle);
        let mut stats = EpochStats::new(data.train.len(), cfg.record_weights);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = make_batch(&data.train, chunk);
            let losses = model.batch_losses(&batch.inputs, &batch.targets)?;
            let resolved = resolve_weights(weighting, stage, &losses, &losses, spl_threshold)?;
            weighted_step(&mut model, &mut opt, &batch, &losses, resolved, &mut stats)?;
        }
        let val = evaluate(&model, &data.val)?.primary();
        log.epochs.push(stats.finish(epoch, stage, val));
        if stage_indicator(epoch, cfg.stage.epoch_interval) == 1 {
            spl_threshold *= cfg.self_paced.growth;
        }
        tracker.end_epoch(epoch);
    }
    Ok((model, log))
}

/// Result of a two-model run. Only `source` is meant for reporting.
#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub source: ModelState,
    pub peer: ModelState,
    pub source_log: TrainLog,
    pub peer_log: TrainLog,
}

/// Trains a source and an amortization model on the same batch stream.
/// Each model's losses are weighted under the bucket assignment produced
/// by the other model's losses on the same batch, computed before either
/// model steps.
pub fn train_amortized(
    source: ModelState,
    peer: ModelState,
    data: &SplitData,
    cfg: &TrainerConfig,
) -> Result<PairOutcome> {
    cfg.validate()?;
    check_data(data, &source)?;
    check_data(data, &peer)?;
    let weighting = match cfg.mode {
        TrainMode::TscTwoBucket => Weighting::Tsc(cfg.tsc),
        _ => Weighting::Pal(cfg.effective_plan()),
    };
    train_pair(source, peer, data, cfg, |stage, _epoch, own, other| {
        resolve_weights(weighting, stage, other, own, 0.0)
    })
}

/// Two-model loop shared by the amortized trainer and Co-teaching.
/// `weigh(stage, epoch, own_losses, peer_losses)` gives a model's weights.
pub(crate) fn train_pair<F>(
    mut source: ModelState,
    mut peer: ModelState,
    data: &SplitData,
    cfg: &TrainerConfig,
    weigh: F,
) -> Result<PairOutcome>
where
    F: Fn(usize, usize, &[f64], &[f64]) -> Result<Option<PalOutput>>,
{
    let mut opt_s = OptimizerState::new(cfg.optimizer, &source);
    let mut opt_p = OptimizerState::new(cfg.optimizer, &peer);
    let mut tracker = StageTracker::new(cfg.effective_plan(), cfg.stage_cap());
    let mut log_s = TrainLog::default();
    let mut log_p = TrainLog::default();

    for epoch in 1..=cfg.epochs {
        let stage = tracker.stage();
        let order = epoch_order(data.train.len(), cfg.seed, epoch, cfg.shuffle);
        let mut stats_s = EpochStats::new(data.train.len(), cfg.record_weights);
        let mut stats_p = EpochStats::new(data.train.len(), cfg.record_weights);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = make_batch(&data.train, chunk);
            let losses_s = source.batch_losses(&batch.inputs, &batch.targets)?;
            let losses_p = peer.batch_losses(&batch.inputs, &batch.targets)?;
            let w_s = weigh(stage, epoch, &losses_s, &losses_p)?;
            let w_p = weigh(stage, epoch, &losses_p, &losses_s)?;
            weighted_step(&mut source, &mut opt_s, &batch, &losses_s, w_s, &mut stats_s)?;
            weighted_step(&mut peer, &mut opt_p, &batch, &losses_p, w_p, &mut stats_p)?;
        }
        let val_s = evaluate(&source, &data.val)?.primary();
        let val_p = evaluate(&peer, &data.val)?.primary();
        log_s.epochs.push(stats_s.finish(epoch, stage, val_s));
        log_p.epochs.push(stats_p.finish(epoch, stage, val_p));
        tracker.end_epoch(epoch);
    }
    Ok(PairOutcome {
        source,
        peer,
        source_log: log_s,
        peer_log: log_p,
    })
}

/// Co-teaching: each model trains on the samples its peer ranks lowest.
pub fn train_coteaching(
    a: ModelState,
    b: ModelState,
    data: &SplitData,
    cfg: &TrainerConfig,
) -> Result<PairOutcome> {
    cfg.validate()?;
    check_data(data, &a)?;
    check_data(data, &b)?;
    let ct = cfg.coteaching;
    train_pair(a, b, data, cfg, |_stage, epoch, own, other| {
        let keep = coteaching_keep(other, ct.rate_at(epoch))?;
        if keep.len() == own.len() {
            return Ok(None);
        }
        let n = keep.len() as f64;
        let mut weights = vec![0.0; own.len()];
        for &i in &keep {
            weights[i] = 1.0 / n;
        }
        let loss = keep.iter().map(|&i| own[i]).sum::<f64>() / n;
        Ok(Some(PalOutput { loss, weights }))
    })
}

/// Fraction of (clean, corrupted) pairs in which the clean sample received
/// the higher score; ties count one half.
pub fn separation_auc(scores: &[f64], corrupted: &[bool]) -> Result<f64> {
    if scores.len() != corrupted.len() {
        return Err(shape_err(format!("{} flags", scores.len()), format!("{}", corrupted.len())));
    }
    let n_bad = corrupted.iter().filter(|&&c| c).count();
    let n_good = corrupted.len() - n_bad;
    if n_bad == 0 || n_good == 0 {
        return Err(AptfError::NoGroundTruth);
    }
    // Mann-Whitney with tie-averaged ranks
    let order = crate::numeric::argsort_ascending(scores)?;
    let mut rank_sum_good = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if !corrupted[idx] {
                rank_sum_good += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_good - (n_good * (n_good + 1)) as f64 / 2.0;
    Ok(u / (n_good * n_bad) as f64)
}

/// Per-epoch separation between corrupted and clean training samples,
/// measured on the recorded weights. Epochs without recorded weights give
/// `None`.
pub fn track_separation(log: &TrainLog, train: &[Sample]) -> Result<Vec<Option<f64>>> {
    let flags: Vec<bool> = train.iter().map(|s| s.corrupted).collect();
    let n_bad = flags.iter().filter(|&&c| c).count();
    if n_bad == 0 || n_bad == flags.len() {
        return Err(AptfError::NoGroundTruth);
    }
    log.epochs
        .iter()
        .map(|rec| {
            rec.sample_weights
                .as_ref()
                .map(|w| separation_auc(w, &flags))
                .transpose()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in TrainMode::ALL {
            assert_eq!(m.name().parse::<TrainMode>().unwrap(), m);
        }
        assert!("hpl2".parse::<TrainMode>().is_err());
    }

    fn auc_oracle(scores: &[f64], corrupted: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &ci) in corrupted.iter().enumerate() {
            for (j, &cj) in corrupted.iter().enumerate() {
                if !ci && cj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / pairs
    }

    #[test]
    fn auc_definition() {
        let losses = [0.1, 0.2, 0.9, 0.3, 1.5];
        let flags = [false, false, true, false, true];
        let neg: Vec<f64> = losses.iter().map(|l| -l).collect();
        assert_eq!(separation_auc(&neg, &flags).unwrap(), 1.0);
        assert_eq!(separation_auc(&[1.0; 5], &flags).unwrap(), 0.5);
        assert!(matches!(
            separation_auc(&neg, &[false; 5]),
            Err(AptfError::NoGroundTruth)
        ));
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = Rng::new(21);
        for _ in 0..20 {
            let n = 40;
            // coarse scores to force ties
            let scores: Vec<f64> = (0..n).map(|_| (rng.uniform() * 5.0).floor()).collect();
            let flags: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
            let a = separation_auc(&scores, &flags).unwrap();
            assert!((a - auc_oracle(&scores, &flags)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_scores_are_near_chance() {
        let mut rng = Rng::new(5);
        let scores = rng.gauss(1000, 0.0, 1.0);
        let flags: Vec<bool> = (0..1000).map(|_| rng.uniform() < 0.3).collect();
        let auc = separation_auc(&scores, &flags).unwrap();
        assert!((auc - 0.5).abs() < 0.05, "auc {auc}");
    }
}
