//! Minibatch training with per-batch augmentation, early stopping on a
//! fixed-seed test pass, and randomized-repeat evaluation.

mod multipulse;
mod sweep;

pub use multipulse::{evaluate_multipulse, make_scenes, scene_inputs, train_multipulse, MultiPulseConfig};
pub use sweep::{sweep_csv, sweep_input_length, SweepRow};

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_with_seeds, AugmentSpec, AugmentedBatch};
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, Outcome};
use crate::nn::loss::{binary_cross_entropy, cross_entropy};
use crate::nn::{Matrix, Mode, Optimizer, OptimizerConfig, Tape, Value};
use crate::resnet::{Head, Model};
use crate::rng::{derive_seed, rng_from};
use crate::waveform::Pulse;

// Seed streams below `TrainConfig::seed`.
const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_AUG: u64 = 3;
const STREAM_TEST: u64 = 4;

/// Inputs per forward pass during evaluation.
pub const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Ce,
    Bce,
}

impl LossKind {
    pub fn for_head(head: Head) -> Self {
        match head {
            Head::SoftmaxCe => LossKind::Ce,
            Head::SigmoidBce => LossKind::Bce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub optimizer: OptimizerConfig,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            learning_rate: 0.001,
            max_epochs: 90,
            patience: 15,
            optimizer: OptimizerConfig::default(),
            loss: LossKind::Ce,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid(format!(
                "batch_size must be at least 2 for batch-norm, got {}",
                self.batch_size
            )));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::invalid(format!(
                "patience ({}) must be smaller than max_epochs ({})",
                self.patience, self.max_epochs
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }

    /// Seed of the initial weights for a model trained under this config.
    pub fn init_seed(&self) -> u64 {
        derive_seed(self.seed, &[STREAM_INIT])
    }
}

/// Patience counter on a loss that should decrease. Epochs count from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_loss: f64,
    pub best_epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best_loss: f64::INFINITY, best_epoch: 0 }
    }

    /// Records `loss` for `epoch`; true when it is a new strict minimum.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = epoch;
            true
        } else {
            false
        }
    }

    pub fn should_stop(&self, epoch: usize) -> bool {
        epoch - self.best_epoch >= self.patience
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_test_loss: f64,
    pub stopped_epoch: usize,
    pub early_stopped: bool,
    /// Not serialized, so history files stay byte-reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Supervision for one batch.
pub(crate) enum Target<'a> {
    Labels(&'a [usize]),
    MultiHot(&'a [u8]),
}

fn one_hot(labels: &[usize], k: usize) -> Vec<u8> {
    let mut t = vec![0u8; labels.len() * k];
    for (r, &l) in labels.iter().enumerate() {
        t[r * k + l] = 1;
    }
    t
}

/// Loss and logit gradient under `kind`.
pub(crate) fn loss_and_grad(kind: LossKind, logits: &Matrix<f32>, target: &Target) -> Result<(f64, Matrix<f32>)> {
    match (kind, target) {
        (LossKind::Ce, Target::Labels(l)) => cross_entropy(logits, l),
        (LossKind::Bce, Target::Labels(l)) => binary_cross_entropy(logits, &one_hot(l, logits.cols)),
        (LossKind::Bce, Target::MultiHot(t)) => binary_cross_entropy(logits, t),
        (LossKind::Ce, Target::MultiHot(_)) => Err(Error::invalid("cross-entropy needs single labels")),
    }
}

fn diverged(epoch: usize, batch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(_) => Error::Diverged { epoch, batch, loss: f64::NAN },
        other => other,
    }
}

/// One optimizer step; returns the batch loss.
pub(crate) fn train_step(
    model: &mut Model<f32>,
    opt: &mut Optimizer<f32>,
    kind: LossKind,
    inputs: &crate::nn::ComplexTensor<f32>,
    target: Target,
    epoch: usize,
    batch: usize,
) -> Result<f64> {
    let input = model.input_map(inputs)?;
    let mut tape = Tape::new();
    let out = model.forward_tape(&mut tape, input, Mode::Train)?;
    let (loss, grad) =
        loss_and_grad(kind, tape.value(out).as_matrix(), &target).map_err(|e| diverged(epoch, batch, e))?;
    if !loss.is_finite() {
        return Err(Error::Diverged { epoch, batch, loss });
    }
    model.store.zero_grad();
    tape.backward(&mut model.store, out, Value::Matrix(grad));
    opt.step(&mut model.store);
    Ok(loss)
}

pub(crate) fn snapshot(model: &Model<f32>) -> Vec<Vec<f32>> {
    model.store.iter().map(|p| p.value.clone()).collect()
}

pub(crate) fn restore(model: &mut Model<f32>, snap: &[Vec<f32>]) {
    for (p, v) in model.store.iter_mut().zip(snap) {
        p.value.copy_from_slice(v);
    }
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Presence decision per class: strictly positive logit.
pub fn multilabel_predict(logits: &[f32]) -> Vec<u8> {
    logits.iter().map(|&z| u8::from(z > 0.0)).collect()
}

/// Mean loss and top-1 error over `pulses` with one fixed augmentation.
fn fixed_pass(
    model: &mut Model<f32>,
    pulses: &[Pulse],
    aug: &AugmentSpec,
    kind: LossKind,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut wrong = 0usize;
    let all: Vec<&Pulse> = pulses.iter().collect();
    for (c, chunk) in all.chunks(EVAL_BATCH).enumerate() {
        let seeds: Vec<u64> = (0..chunk.len()).map(|j| derive_seed(seed, &[(c * EVAL_BATCH + j) as u64])).collect();
        let batch = augment_with_seeds(chunk, aug, &seeds)?;
        let logits = model.forward(&batch.inputs, Mode::Eval)?;
        let (l, _) = loss_and_grad(kind, &logits, &Target::Labels(&batch.labels))?;
        loss += l * chunk.len() as f64;
        wrong += (0..logits.rows).filter(|&r| argmax(logits.row(r)) != batch.labels[r]).count();
    }
    let n = pulses.len().max(1) as f64;
    Ok((loss / n, wrong as f64 / n))
}

/// Trains `model` in place and leaves it holding the parameters of the epoch
/// with the lowest test loss.
pub fn train(
    model: &mut Model<f32>,
    train_set: &[Pulse],
    test_set: &[Pulse],
    aug: &AugmentSpec,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    train_observed(model, train_set, test_set, aug, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_observed(
    model: &mut Model<f32>,
    train_set: &[Pulse],
    test_set: &[Pulse],
    aug: &AugmentSpec,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainHistory> {
    cfg.validate()?;
    aug.validate()?;
    check_setup(model, aug, cfg)?;
    if train_set.len() < 2 || test_set.is_empty() {
        return Err(Error::invalid("training needs at least two training pulses and one test pulse"));
    }
    let start = Instant::now();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &model.store);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = snapshot(model);
    let mut epochs = Vec::new();
    let mut early_stopped = false;
    let test_seed = derive_seed(cfg.seed, &[STREAM_TEST]);
    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut rng_from(cfg.seed, &[STREAM_SHUFFLE, epoch as u64]));
        let mut total = 0.0;
        let mut seen = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            if idx.len() < 2 {
                continue;
            }
            let pulses: Vec<&Pulse> = idx.iter().map(|&i| &train_set[i]).collect();
            let seeds: Vec<u64> = if aug.rerandomize {
                (0..idx.len()).map(|j| derive_seed(cfg.seed, &[STREAM_AUG, epoch as u64, b as u64, j as u64])).collect()
            } else {
                idx.iter().map(|&i| derive_seed(cfg.seed, &[STREAM_AUG, i as u64])).collect()
            };
            let AugmentedBatch { inputs, labels, .. } = augment_with_seeds(&pulses, aug, &seeds)?;
            let loss = train_step(model, &mut opt, cfg.loss, &inputs, Target::Labels(&labels), epoch, b)?;
            total += loss * idx.len() as f64;
            seen += idx.len();
        }
        let (test_loss, test_error) = fixed_pass(model, test_set, aug, cfg.loss, test_seed)?;
        if !test_loss.is_finite() {
            return Err(Error::Diverged { epoch, batch: 0, loss: test_loss });
        }
        let record = EpochRecord { epoch, train_loss: total / seen.max(1) as f64, test_loss, test_error };
        on_epoch(&record);
        epochs.push(record);
        if stopper.observe(epoch, test_loss) {
            best = snapshot(model);
        }
        if stopper.should_stop(epoch) {
            early_stopped = true;
            break;
        }
    }
    restore(model, &best);
    Ok(TrainHistory {
        stopped_epoch: epochs.len(),
        epochs,
        best_epoch: stopper.best_epoch,
        best_test_loss: stopper.best_loss,
        early_stopped,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn check_setup(model: &Model<f32>, aug: &AugmentSpec, cfg: &TrainConfig) -> Result<()> {
    if aug.input_length != model.config.input_length {
        return Err(Error::invalid(format!(
            "augmentation length D={} differs from the model's input_length {}",
            aug.input_length, model.config.input_length
        )));
    }
    if LossKind::for_head(model.config.head) != cfg.loss {
        return Err(Error::invalid(format!(
            "loss {:?} does not match the model head {:?}",
            cfg.loss, model.config.head
        )));
    }
    Ok(())
}

/// Anything that maps an augmented batch to `(B, K)` logits.
pub trait Classifier {
    fn num_classes(&self) -> usize;
    fn logits(&mut self, batch: &AugmentedBatch) -> Result<Matrix<f32>>;
}

impl Classifier for Model<f32> {
    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn logits(&mut self, batch: &AugmentedBatch) -> Result<Matrix<f32>> {
        self.forward(&batch.inputs, Mode::Eval)
    }
}

/// Top-1 error over `repeats` independent augmentations of every test
/// pulse. Repeat `r` of pulse `i` uses seed `derive(seed, r, i)`.
pub fn evaluate(
    model: &mut dyn Classifier,
    test_set: &[Pulse],
    aug: &AugmentSpec,
    repeats: usize,
    seed: u64,
) -> Result<MetricsReport> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    aug.validate()?;
    let all: Vec<&Pulse> = test_set.iter().collect();
    let mut per_repeat = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut outcomes = Vec::with_capacity(all.len());
        for (c, chunk) in all.chunks(EVAL_BATCH).enumerate() {
            let seeds: Vec<u64> =
                (0..chunk.len()).map(|j| derive_seed(seed, &[r as u64, (c * EVAL_BATCH + j) as u64])).collect();
            let batch = augment_with_seeds(chunk, aug, &seeds)?;
            let logits = model.logits(&batch)?;
            for (row, p) in chunk.iter().enumerate() {
                outcomes.push(Outcome {
                    pulse_width: p.pulse_width(),
                    snr_db: p.snr_db,
                    l: 1,
                    correct: argmax(logits.row(row)) == p.class_id,
                });
            }
        }
        per_repeat.push(outcomes);
    }
    Ok(MetricsReport::single_label(model.num_classes(), per_repeat))
}
