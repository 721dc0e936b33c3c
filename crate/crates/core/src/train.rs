//! The Pumpout epoch loop and the six trainers built on it.
//!
//! Every trainer runs the same loop: per mini-batch, samples meeting the
//! fitting condition contribute `+∇loss`, the others `−γ·∇loss` (or nothing,
//! for the drop-based baselines), and the sum is divided by the batch size
//! before one optimizer step.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{domain, structural, Error, Result};
use crate::metrics::{accuracy, EpochMetrics};
use crate::nn::{loss_vector, Activation, ForwardCache, GradientAccumulator, Network, Objective};
use crate::noise::TransitionMatrix;
use crate::optim::{OptimizerKind, OptimizerState};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::schedule::{select_small_loss, KeepSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Standard,
    MentorNetLite,
    PumpoutSl,
    Bc,
    NnBc,
    PumpoutBc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Standard,
        Algorithm::MentorNetLite,
        Algorithm::PumpoutSl,
        Algorithm::Bc,
        Algorithm::NnBc,
        Algorithm::PumpoutBc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Standard => "standard",
            Algorithm::MentorNetLite => "mentornet_lite",
            Algorithm::PumpoutSl => "pumpout_sl",
            Algorithm::Bc => "bc",
            Algorithm::NnBc => "nnbc",
            Algorithm::PumpoutBc => "pumpout_bc",
        }
    }

    /// Backward-correction family: needs `T` and reports no label precision.
    pub fn uses_correction(self) -> bool {
        matches!(self, Algorithm::Bc | Algorithm::NnBc | Algorithm::PumpoutBc)
    }

    pub fn uses_small_loss(self) -> bool {
        matches!(self, Algorithm::MentorNetLite | Algorithm::PumpoutSl)
    }

    pub fn uses_gamma(self) -> bool {
        matches!(self, Algorithm::PumpoutSl | Algorithm::PumpoutBc)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| domain!("unknown algorithm {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<S> {
    pub algorithm: Algorithm,
    /// Ascent scale on non-fitting samples, in `[0, 1]`.
    pub gamma: S,
    pub batch_size: usize,
    pub learning_rate: S,
    pub max_epochs: usize,
    /// Noise rate driving the keep schedule.
    pub tau: S,
    pub warmup_epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Test accuracy is measured every this many epochs and on the last one.
    pub eval_interval: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl<S: Scalar> Default for TrainConfig<S> {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Standard,
            gamma: S::lit(0.05),
            batch_size: 128,
            learning_rate: S::lit(0.001),
            max_epochs: 200,
            tau: S::zero(),
            warmup_epochs: 10,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            eval_interval: 1,
            hidden: vec![64, 64],
            activation: Activation::Softsign,
        }
    }
}

impl<S: Scalar> TrainConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= S::zero() && self.gamma <= S::one()) {
            return Err(domain!("gamma {} outside [0, 1]", self.gamma));
        }
        if self.batch_size == 0 {
            return Err(domain!("batch size must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(domain!("at least one epoch is required"));
        }
        if self.eval_interval == 0 {
            return Err(domain!("evaluation interval must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= S::zero()) {
            return Err(domain!("learning rate {} must be finite and non-negative", self.learning_rate));
        }
        if self.algorithm.uses_small_loss() {
            KeepSchedule::new(self.tau, self.warmup_epochs)?;
        }
        Ok(())
    }
}

/// Training split: features with observed (possibly noisy) and clean labels.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a, S> {
    pub features: &'a [Vec<S>],
    pub labels: &'a [usize],
    pub clean_labels: &'a [usize],
    pub classes: usize,
}

impl<'a, S: Scalar> TrainingSet<'a, S> {
    pub fn validate(&self) -> Result<()> {
        let n = self.features.len();
        if n == 0 {
            return Err(structural!("training set is empty"));
        }
        if self.labels.len() != n || self.clean_labels.len() != n {
            return Err(structural!(
                "{n} feature rows, {} labels, {} clean labels",
                self.labels.len(),
                self.clean_labels.len()
            ));
        }
        let dim = self.features[0].len();
        if self.features.iter().any(|x| x.len() != dim) {
            return Err(structural!("feature rows have differing lengths"));
        }
        if self.classes < 2 {
            return Err(structural!("need at least two classes"));
        }
        if self.labels.iter().chain(self.clean_labels).any(|y| *y >= self.classes) {
            return Err(structural!("label out of range for {} classes", self.classes));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Evaluation split with clean labels.
#[derive(Debug, Clone, Copy)]
pub struct EvalSet<'a, S> {
    pub features: &'a [Vec<S>],
    pub labels: &'a [usize],
}

/// Whether one sample descends (`+1`) or ascends (`−γ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDecision<S> {
    pub fitting: bool,
    pub weight: S,
}

/// Treatment of samples that fail the fitting condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonFitting<S> {
    /// Scaled gradient ascent with weight `−γ`.
    Ascend(S),
    /// Excluded from the accumulated gradient (the divisor stays `B`).
    Drop,
}

impl<S: Scalar> NonFitting<S> {
    fn weight(self) -> S {
        match self {
            NonFitting::Ascend(gamma) => -gamma,
            NonFitting::Drop => S::zero(),
        }
    }
}

/// Losses of one mini-batch under the network state before its update.
#[derive(Debug, Clone, Copy)]
pub struct BatchLosses<'a, S> {
    /// 1-indexed epoch.
    pub epoch: usize,
    /// Cross-entropy on the observed label.
    pub observed: &'a [S],
    /// Value of the trained objective (equal to `observed` unless corrected).
    pub objective: &'a [S],
}

/// Per-sample fitting condition evaluated once per mini-batch.
pub trait FittingRule<S: Scalar> {
    fn decide(&mut self, batch: &BatchLosses<'_, S>) -> Result<Vec<bool>>;
}

impl<S: Scalar, F> FittingRule<S> for F
where
    F: FnMut(&BatchLosses<'_, S>) -> Result<Vec<bool>>,
{
    fn decide(&mut self, batch: &BatchLosses<'_, S>) -> Result<Vec<bool>> {
        self(batch)
    }
}

/// Every sample fits.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllFitting;

impl<S: Scalar> FittingRule<S> for AllFitting {
    fn decide(&mut self, batch: &BatchLosses<'_, S>) -> Result<Vec<bool>> {
        Ok(vec![true; batch.observed.len()])
    }
}

/// The `⌈R(t)·B⌉` smallest observed-label losses fit.
#[derive(Debug, Clone, Copy)]
pub struct SmallLoss<S> {
    pub schedule: KeepSchedule<S>,
}

impl<S: Scalar> FittingRule<S> for SmallLoss<S> {
    fn decide(&mut self, batch: &BatchLosses<'_, S>) -> Result<Vec<bool>> {
        let rate = self.schedule.keep_rate(batch.epoch);
        Ok(select_small_loss(batch.observed, rate)?.mask(batch.observed.len()))
    }
}

/// Samples whose corrected loss is non-negative fit.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonNegativeObjective;

impl<S: Scalar> FittingRule<S> for NonNegativeObjective {
    fn decide(&mut self, batch: &BatchLosses<'_, S>) -> Result<Vec<bool>> {
        Ok(batch.objective.iter().map(|l| *l >= S::zero()).collect())
    }
}

/// Fixed per-epoch settings of [`pumpout_epoch`].
#[derive(Debug, Clone, Copy)]
pub struct EpochSpec<'a, S> {
    pub epoch: usize,
    pub batch_size: usize,
    pub objective: Objective<'a, S>,
    pub non_fitting: NonFitting<S>,
}

/// What happened during one epoch.
#[derive(Debug, Clone, Default)]
pub struct EpochReport<S> {
    /// One entry per mini-batch, in batch order.
    pub decisions: Vec<Vec<FitDecision<S>>>,
    pub mean_objective: f64,
    pub mean_clipped_objective: f64,
    pub min_objective: f64,
    /// Mean over batches of the clean share among fitting samples; batches
    /// with no fitting sample are skipped.
    pub label_precision: Option<f64>,
    pub fitting_fraction: f64,
}

/// One pass over `order`, chunked into mini-batches of `spec.batch_size`.
///
/// The last mini-batch may be shorter; its gradient is divided by its own length.
pub fn pumpout_epoch<S: Scalar, R: FittingRule<S> + ?Sized>(
    net: &mut Network<S>,
    optimizer: &mut OptimizerState<S>,
    data: &TrainingSet<'_, S>,
    order: &[usize],
    rule: &mut R,
    spec: &EpochSpec<'_, S>,
) -> Result<EpochReport<S>> {
    if spec.batch_size == 0 {
        return Err(domain!("batch size must be positive"));
    }
    let mut acc = GradientAccumulator::new(net);
    let mut caches: Vec<ForwardCache<S>> = Vec::new();
    let mut loss_vectors = Vec::with_capacity(spec.batch_size);
    let mut observed = Vec::with_capacity(spec.batch_size);
    let mut objective = Vec::with_capacity(spec.batch_size);
    let mut report = EpochReport { min_objective: f64::INFINITY, ..Default::default() };
    let (mut sum, mut sum_clipped, mut seen, mut fitting_total) = (0.0, 0.0, 0usize, 0usize);
    let (mut precision_sum, mut precision_batches) = (0.0, 0usize);

    for batch in order.chunks(spec.batch_size) {
        caches.resize_with(batch.len().max(caches.len()), ForwardCache::default);
        loss_vectors.clear();
        observed.clear();
        objective.clear();
        for (slot, &idx) in batch.iter().enumerate() {
            let x = data
                .features
                .get(idx)
                .ok_or_else(|| structural!("sample index {idx} out of range"))?;
            net.forward_into(x, &mut caches[slot])?;
            let lv = loss_vector(caches[slot].logits())?;
            let y = data.labels[idx];
            observed.push(lv.get(y)?);
            let value = spec.objective.value(&lv, y)?;
            objective.push(value);
            loss_vectors.push(lv);
            let v = value.to_f64_lossy();
            sum += v;
            sum_clipped += v.max(0.0);
            report.min_objective = report.min_objective.min(v);
        }
        seen += batch.len();

        let flags = rule.decide(&BatchLosses { epoch: spec.epoch, observed: &observed, objective: &objective })?;
        if flags.len() != batch.len() {
            return Err(structural!(
                "fitting rule returned {} decisions for a batch of {} in epoch {}",
                flags.len(),
                batch.len(),
                spec.epoch
            ));
        }

        acc.reset();
        let mut decisions = Vec::with_capacity(batch.len());
        let (mut fit_count, mut fit_clean) = (0usize, 0usize);
        for (slot, (&idx, &fitting)) in batch.iter().zip(&flags).enumerate() {
            let weight = if fitting { S::one() } else { spec.non_fitting.weight() };
            decisions.push(FitDecision { fitting, weight });
            if fitting {
                fit_count += 1;
                fit_clean += usize::from(data.labels[idx] == data.clean_labels[idx]);
            } else if spec.non_fitting == NonFitting::Drop {
                continue;
            }
            acc.add_cached(net, &caches[slot], &loss_vectors[slot], data.labels[idx], spec.objective, weight)?;
        }
        if fit_count > 0 {
            precision_sum += fit_clean as f64 / fit_count as f64;
            precision_batches += 1;
        }
        fitting_total += fit_count;
        let grad = acc.mean(batch.len());
        optimizer.step(net, &grad)?;
        report.decisions.push(decisions);
    }

    if seen > 0 {
        report.mean_objective = sum / seen as f64;
        report.mean_clipped_objective = sum_clipped / seen as f64;
        report.fitting_fraction = fitting_total as f64 / seen as f64;
    }
    if precision_batches > 0 {
        report.label_precision = Some(precision_sum / precision_batches as f64);
    }
    Ok(report)
}

/// Final network and per-epoch metrics of a completed run.
#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub network: Network<S>,
    pub metrics: Vec<EpochMetrics>,
}

impl<S> TrainOutcome<S> {
    pub fn final_metrics(&self) -> Option<&EpochMetrics> {
        self.metrics.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReportedLoss {
    Raw,
    Clipped,
}

struct Plan<'a, S> {
    objective: Objective<'a, S>,
    non_fitting: NonFitting<S>,
    precision: bool,
    reported: ReportedLoss,
}

fn run<S: Scalar, R: FittingRule<S> + ?Sized>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
    rule: &mut R,
    plan: Plan<'_, S>,
    on_epoch: &mut dyn FnMut(&EpochMetrics, &Network<S>) -> Result<()>,
) -> Result<TrainOutcome<S>> {
    config.validate()?;
    data.validate()?;
    let mut init = stream_rng(config.seed, Stream::Init);
    let mut net = Network::mlp(data.dim(), &config.hidden, data.classes, config.activation, &mut init)?;
    let mut optimizer = OptimizerState::new(config.optimizer, &net, config.learning_rate);
    let mut shuffle = stream_rng(config.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut metrics = Vec::with_capacity(config.max_epochs);

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle);
        let spec = EpochSpec {
            epoch,
            batch_size: config.batch_size,
            objective: plan.objective,
            non_fitting: plan.non_fitting,
        };
        let report = pumpout_epoch(&mut net, &mut optimizer, data, &order, rule, &spec)?;
        let evaluate = epoch % config.eval_interval == 0 || epoch == config.max_epochs;
        let test_accuracy = if evaluate { Some(accuracy(&net, test.features, test.labels)?) } else { None };
        let (mean, min) = match plan.reported {
            ReportedLoss::Raw => (report.mean_objective, report.min_objective),
            ReportedLoss::Clipped => (report.mean_clipped_objective, report.min_objective.max(0.0)),
        };
        let row = EpochMetrics {
            epoch,
            test_accuracy,
            label_precision: if plan.precision { report.label_precision } else { None },
            mean_train_loss: mean,
            min_sample_loss: min,
            fitting_fraction: report.fitting_fraction,
        };
        on_epoch(&row, &net)?;
        metrics.push(row);
    }
    Ok(TrainOutcome { network: net, metrics })
}

fn require_transition<'t, S: Scalar>(
    transition: Option<&'t TransitionMatrix<S>>,
    data: &TrainingSet<'_, S>,
    algorithm: Algorithm,
) -> Result<&'t TransitionMatrix<S>> {
    let t = transition.ok_or_else(|| domain!("{algorithm} needs a transition matrix"))?;
    if t.classes() != data.classes {
        return Err(structural!(
            "transition matrix has {} classes, data has {}",
            t.classes(),
            data.classes
        ));
    }
    Ok(t)
}

/// Runs the algorithm named in `config`, calling `on_epoch` after every epoch.
pub fn train_with<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
    transition: Option<&TransitionMatrix<S>>,
    mut on_epoch: impl FnMut(&EpochMetrics, &Network<S>) -> Result<()>,
) -> Result<TrainOutcome<S>> {
    let algorithm = config.algorithm;
    let plain = |non_fitting, precision| Plan {
        objective: Objective::Observed,
        non_fitting,
        precision,
        reported: ReportedLoss::Raw,
    };
    let cb: &mut dyn FnMut(&EpochMetrics, &Network<S>) -> Result<()> = &mut on_epoch;
    match algorithm {
        Algorithm::Standard => run(config, data, test, &mut AllFitting, plain(NonFitting::Drop, true), cb),
        Algorithm::MentorNetLite | Algorithm::PumpoutSl => {
            let mut rule = SmallLoss { schedule: KeepSchedule::new(config.tau, config.warmup_epochs)? };
            let non_fitting = if algorithm == Algorithm::PumpoutSl {
                NonFitting::Ascend(config.gamma)
            } else {
                NonFitting::Drop
            };
            run(config, data, test, &mut rule, plain(non_fitting, true), cb)
        }
        Algorithm::Bc | Algorithm::NnBc | Algorithm::PumpoutBc => {
            let t = require_transition(transition, data, algorithm)?;
            let objective = Objective::Corrected(t.inverse());
            if algorithm == Algorithm::Bc {
                let plan = Plan { objective, non_fitting: NonFitting::Drop, precision: false, reported: ReportedLoss::Raw };
                return run(config, data, test, &mut AllFitting, plan, cb);
            }
            let non_fitting = if algorithm == Algorithm::PumpoutBc {
                NonFitting::Ascend(config.gamma)
            } else {
                NonFitting::Drop
            };
            let plan = Plan { objective, non_fitting, precision: false, reported: ReportedLoss::Clipped };
            run(config, data, test, &mut NonNegativeObjective, plan, cb)
        }
    }
}

/// [`train_with`] without a per-epoch callback.
pub fn train<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
    transition: Option<&TransitionMatrix<S>>,
) -> Result<TrainOutcome<S>> {
    train_with(config, data, test, transition, |_, _| Ok(()))
}

fn with_algorithm<S: Scalar>(config: &TrainConfig<S>, algorithm: Algorithm) -> TrainConfig<S> {
    TrainConfig { algorithm, ..config.clone() }
}

/// Descent on the noisy labels as given.
pub fn train_standard<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
) -> Result<TrainOutcome<S>> {
    train(&with_algorithm(config, Algorithm::Standard), data, test, None)
}

/// Self-paced small-loss training: non-selected samples are dropped.
pub fn train_mentornet_lite<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
) -> Result<TrainOutcome<S>> {
    train(&with_algorithm(config, Algorithm::MentorNetLite), data, test, None)
}

/// Small-loss selection with `−γ` ascent on the large-loss remainder.
pub fn train_pumpout_sl<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
) -> Result<TrainOutcome<S>> {
    train(&with_algorithm(config, Algorithm::PumpoutSl), data, test, None)
}

/// Descent on the backward-corrected loss regardless of its sign.
pub fn train_bc<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
    transition: &TransitionMatrix<S>,
) -> Result<TrainOutcome<S>> {
    train(&with_algorithm(config, Algorithm::Bc), data, test, Some(transition))
}

/// Non-negative backward correction: negative corrected losses stop the gradient.
pub fn train_nnbc<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
    transition: &TransitionMatrix<S>,
) -> Result<TrainOutcome<S>> {
    train(&with_algorithm(config, Algorithm::NnBc), data, test, Some(transition))
}

/// Backward correction with `−γ` ascent on negative-corrected-loss samples.
pub fn train_pumpout_bc<S: Scalar>(
    config: &TrainConfig<S>,
    data: &TrainingSet<'_, S>,
    test: &EvalSet<'_, S>,
    transition: &TransitionMatrix<S>,
) -> Result<TrainOutcome<S>> {
    train(&with_algorithm(config, Algorithm::PumpoutBc), data, test, Some(transition))
}
