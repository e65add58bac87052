//! Run configuration: defaults, then a JSON file, then command-line flags.

use std::path::Path;

use pulsenet::augment::{AugmentSpec, DelayMode};
use pulsenet::resnet::{Head, ModelConfig};
use pulsenet::train::{LossKind, TrainConfig};
use pulsenet::waveform::DatasetManifest;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSection {
    pub mode: DelayMode,
    pub rerandomize: bool,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection { mode: DelayMode::Asynchronous, rerandomize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSection {
    pub repeats: usize,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { repeats: 100, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub d_values: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { d_values: vec![1000, 1821, 3317, 6040, 11000] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPulseSection {
    /// Pulse counts mixed into training.
    pub train_l_values: Vec<usize>,
    /// Pulse counts evaluated separately for the curve.
    pub l_values: Vec<usize>,
    pub train_scenes: usize,
    pub test_scenes: usize,
    pub eval_scenes: usize,
    pub snr_range_db: [f64; 2],
    pub pulse_width_range: [usize; 2],
    pub scale_range: [f64; 2],
}

impl Default for MultiPulseSection {
    fn default() -> Self {
        MultiPulseSection {
            train_l_values: vec![1, 2, 3, 4],
            l_values: vec![1, 2, 3, 4],
            train_scenes: 2048,
            test_scenes: 512,
            eval_scenes: 1000,
            snr_range_db: [-12.0, 12.0],
            pulse_width_range: [100, 10_000],
            scale_range: [0.5, 2.0],
        }
    }
}

/// Fully resolved configuration of one invocation. It is echoed into every
/// artifact the invocation writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub version: String,
    pub data: DatasetManifest,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augment: AugmentSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub multipulse: MultiPulseSection,
}

impl RunConfig {
    pub fn defaults(command: &str) -> Self {
        RunConfig {
            command: command.into(),
            version: pulsenet::VERSION.into(),
            data: DatasetManifest::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            augment: AugmentSection::default(),
            eval: EvalSection::default(),
            sweep: SweepSection::default(),
            multipulse: MultiPulseSection::default(),
        }
    }

    /// Defaults overlaid with the JSON file at `path`, if any.
    pub fn load(command: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let base = RunConfig::defaults(command);
        let Some(path) = path else {
            return Ok(base);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        let mut merged = serde_json::to_value(&base).expect("config serializes");
        merge(&mut merged, &file, "")?;
        let mut cfg: RunConfig =
            serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        cfg.command = command.into();
        cfg.version = pulsenet::VERSION.into();
        Ok(cfg)
    }

    pub fn augment_spec(&self) -> AugmentSpec {
        AugmentSpec {
            input_length: self.model.input_length,
            mode: self.augment.mode,
            rerandomize: self.augment.rerandomize,
        }
    }

    /// Checks the model and training sections and derives the loss from the
    /// head.
    pub fn finish_training(&mut self) -> Result<(), CliError> {
        self.train.loss = LossKind::for_head(self.model.head);
        self.model.validate().map_err(usage)?;
        self.train.validate().map_err(usage)?;
        if self.eval.repeats == 0 {
            return Err(CliError::Usage("eval.repeats must be at least 1".into()));
        }
        Ok(())
    }

    pub fn force_multilabel(&mut self) {
        self.model.head = Head::SigmoidBce;
        self.train.loss = LossKind::Bce;
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Overlays `patch` onto `base`. Objects merge key by key; anything else
/// replaces. Keys absent from `base` are rejected so typos do not vanish.
pub fn merge(base: &mut Value, patch: &Value, path: &str) -> Result<(), CliError> {
    match (base, patch) {
        // A tagged enum switching variant replaces the whole object.
        (Value::Object(b), Value::Object(p)) if p.contains_key("kind") && b.get("kind") != p.get("kind") => {
            *b = p.clone();
            Ok(())
        }
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &here)?,
                    // Optional fields serialize as absent or null.
                    None if k == "provenance" => {
                        b.insert(k.clone(), v.clone());
                    }
                    None => return Err(CliError::Usage(format!("unknown config key `{here}`"))),
                }
            }
            Ok(())
        }
        (b, p) => {
            *b = p.clone();
            Ok(())
        }
    }
}
