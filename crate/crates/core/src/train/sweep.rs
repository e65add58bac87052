//! Test error as a function of the input length `D`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{evaluate, train, TrainConfig};
use crate::augment::AugmentSpec;
use crate::resnet::{Model, ModelConfig};
use crate::waveform::Pulse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "D")]
    pub d: usize,
    pub test_error: Option<f64>,
    pub best_epoch: Option<usize>,
    pub parameters: Option<usize>,
    /// Failure message when this cell could not be trained.
    pub error: Option<String>,
}

/// Trains and evaluates one model per `D` under the same configuration and
/// seeds. A failing cell is recorded and the sweep continues.
#[allow(clippy::too_many_arguments)]
pub fn sweep_input_length(
    d_values: &[usize],
    model_cfg: &ModelConfig,
    train_set: &[Pulse],
    test_set: &[Pulse],
    aug: &AugmentSpec,
    cfg: &TrainConfig,
    eval_repeats: usize,
    eval_seed: u64,
    mut on_row: impl FnMut(&SweepRow),
) -> Vec<SweepRow> {
    d_values
        .iter()
        .map(|&d| {
            let cell = || -> crate::Result<(f64, usize, usize)> {
                let mcfg = ModelConfig { input_length: d, ..model_cfg.clone() };
                let a = AugmentSpec { input_length: d, ..*aug };
                let mut model = Model::<f32>::build(&mcfg, cfg.init_seed())?;
                let hist = train(&mut model, train_set, test_set, &a, cfg)?;
                let report = evaluate(&mut model, test_set, &a, eval_repeats, eval_seed)?;
                Ok((report.top1_error.unwrap_or(f64::NAN), hist.best_epoch, model.count_parameters()))
            };
            let row = match cell() {
                Ok((e, best, params)) => {
                    SweepRow { d, test_error: Some(e), best_epoch: Some(best), parameters: Some(params), error: None }
                }
                Err(e) => {
                    SweepRow { d, test_error: None, best_epoch: None, parameters: None, error: Some(e.to_string()) }
                }
            };
            on_row(&row);
            row
        })
        .collect()
}

/// `D,test_error,best_epoch,parameters,error` CSV; failed cells leave the
/// numeric columns empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = String::from("D,test_error,best_epoch,parameters,error\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.d,
            opt(r.test_error.map(|v| v.to_string())),
            opt(r.best_epoch.map(|v| v.to_string())),
            opt(r.parameters.map(|v| v.to_string())),
            opt(r.error.as_ref().map(|e| format!("\"{}\"", e.replace('"', "'")))),
        )
        .expect("string write");
    }
    csv
}
