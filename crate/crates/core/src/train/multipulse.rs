//! Multi-label training on superposed scenes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    loss_and_grad, multilabel_predict, restore, snapshot, train_step, EarlyStopping, EpochRecord, LossKind, Target,
    TrainConfig, TrainHistory, EVAL_BATCH,
};
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, Outcome};
use crate::nn::{ComplexTensor, Mode, Optimizer, Tensor3};
use crate::resnet::Model;
use crate::rng::derive_seed;
use crate::waveform::{random_scene, ClassSpec, MultiPulseScene, SceneSpec};

const STREAM_TRAIN_SCENES: u64 = 11;
const STREAM_TEST_SCENES: u64 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPulseConfig {
    pub scene: SceneSpec,
    /// Pulse counts mixed into training; scene `i` holds `l_values[i % len]`.
    pub l_values: Vec<usize>,
    /// Fresh training scenes per epoch.
    pub train_scenes: usize,
    /// Fixed held-out scenes for early stopping.
    pub test_scenes: usize,
}

impl MultiPulseConfig {
    pub fn new(input_length: usize) -> Self {
        MultiPulseConfig {
            scene: SceneSpec::new(input_length),
            l_values: vec![1, 2, 3, 4],
            train_scenes: 2048,
            test_scenes: 512,
        }
    }
}

/// `count` scenes cycling through `l_values`; scene `i` is seeded with
/// `derive(seed, i)`.
pub fn make_scenes(
    family: &[ClassSpec],
    spec: &SceneSpec,
    l_values: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<MultiPulseScene>> {
    if l_values.is_empty() {
        return Err(Error::invalid("l_values must not be empty"));
    }
    (0..count)
        .map(|i| random_scene(family, spec, l_values[i % l_values.len()], derive_seed(seed, &[i as u64])))
        .collect()
}

/// Stacks scenes into a `(B, 1, D)` batch and a flat multi-hot target.
pub fn scene_inputs(scenes: &[&MultiPulseScene]) -> Result<(ComplexTensor<f32>, Vec<u8>)> {
    let d = scenes.first().map_or(0, |s| s.samples.len());
    let b = scenes.len();
    let mut re = Vec::with_capacity(b * d);
    let mut im = Vec::with_capacity(b * d);
    let mut labels = Vec::new();
    for s in scenes {
        if s.samples.len() != d {
            return Err(Error::dim(format!("scene of length {} in a batch of length {d}", s.samples.len())));
        }
        re.extend(s.samples.iter().map(|c| c.re));
        im.extend(s.samples.iter().map(|c| c.im));
        labels.extend_from_slice(&s.label);
    }
    Ok((ComplexTensor::new(Tensor3::from_vec([b, 1, d], re)?, Tensor3::from_vec([b, 1, d], im)?)?, labels))
}

fn scene_loss(model: &mut Model<f32>, scenes: &[MultiPulseScene]) -> Result<(f64, f64)> {
    let refs: Vec<&MultiPulseScene> = scenes.iter().collect();
    let (mut loss, mut wrong_rows) = (0.0, 0usize);
    for chunk in refs.chunks(EVAL_BATCH) {
        let (inputs, labels) = scene_inputs(chunk)?;
        let logits = model.forward(&inputs, Mode::Eval)?;
        let (l, _) = loss_and_grad(LossKind::Bce, &logits, &Target::MultiHot(&labels))?;
        loss += l * chunk.len() as f64;
        let k = logits.cols;
        wrong_rows +=
            (0..logits.rows).filter(|&r| multilabel_predict(logits.row(r)) != labels[r * k..(r + 1) * k]).count();
    }
    let n = scenes.len().max(1) as f64;
    Ok((loss / n, wrong_rows as f64 / n))
}

/// Trains one network on mixed-`L` scenes regenerated every epoch. The
/// reported test error is the subset error on the fixed held-out scenes.
pub fn train_multipulse(
    model: &mut Model<f32>,
    family: &[ClassSpec],
    mp: &MultiPulseConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainHistory> {
    cfg.validate()?;
    if cfg.loss != LossKind::Bce || LossKind::for_head(model.config.head) != LossKind::Bce {
        return Err(Error::invalid("multi-pulse training needs the sigmoid-bce head and bce loss"));
    }
    if family.len() != model.config.num_classes || mp.scene.input_length != model.config.input_length {
        return Err(Error::invalid("scene family or window does not match the model"));
    }
    let start = Instant::now();
    let test =
        make_scenes(family, &mp.scene, &mp.l_values, mp.test_scenes, derive_seed(cfg.seed, &[STREAM_TEST_SCENES]))?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &model.store);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = snapshot(model);
    let mut epochs = Vec::new();
    let mut early_stopped = false;
    for epoch in 1..=cfg.max_epochs {
        let seed = derive_seed(cfg.seed, &[STREAM_TRAIN_SCENES, epoch as u64]);
        let scenes = make_scenes(family, &mp.scene, &mp.l_values, mp.train_scenes, seed)?;
        let refs: Vec<&MultiPulseScene> = scenes.iter().collect();
        let (mut total, mut seen) = (0.0, 0usize);
        for (b, chunk) in refs.chunks(cfg.batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let (inputs, labels) = scene_inputs(chunk)?;
            total += train_step(model, &mut opt, LossKind::Bce, &inputs, Target::MultiHot(&labels), epoch, b)?
                * chunk.len() as f64;
            seen += chunk.len();
        }
        let (test_loss, test_error) = scene_loss(model, &test)?;
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

/// `E_abs` and `E_sub` on `count` fresh scenes of exactly `l` pulses.
/// Outcome rows carry the shortest component width and the scene SNR.
pub fn evaluate_multipulse(
    model: &mut Model<f32>,
    family: &[ClassSpec],
    spec: &SceneSpec,
    l: usize,
    count: usize,
    seed: u64,
) -> Result<MetricsReport> {
    let scenes = make_scenes(family, spec, &[l], count, seed)?;
    let refs: Vec<&MultiPulseScene> = scenes.iter().collect();
    let k = model.config.num_classes;
    let mut preds = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let mut outcomes = Vec::with_capacity(count);
    for chunk in refs.chunks(EVAL_BATCH) {
        let (inputs, _) = scene_inputs(chunk)?;
        let logits = model.forward(&inputs, Mode::Eval)?;
        for (r, s) in chunk.iter().enumerate() {
            let p = multilabel_predict(logits.row(r));
            outcomes.push(Outcome {
                pulse_width: s.widths.iter().copied().min().unwrap_or(0),
                snr_db: s.snr_db,
                l: s.num_pulses(),
                correct: p == s.label,
            });
            preds.push(p);
            labels.push(s.label.clone());
        }
    }
    debug_assert!(labels.iter().all(|l| l.len() == k));
    MetricsReport::multi_label(k, 1, &preds, &labels, outcomes)
}
