//! Browser bindings: synthesize a pulse, fit it to a fixed window, and the
//! multi-label subset error implied by a per-class error.

use pulsenet::augment::{augment_one, effective_snr_db, AugmentSpec, DelayMode};
use pulsenet::metrics::binomial_subset_estimate;
use pulsenet::waveform::{generate_pulse, standard_family, Pulse, STANDARD_CLASS_COUNT};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    i: Vec<f32>,
    q: Vec<f32>,
    pulse_width: usize,
    delay: usize,
    snr_db: f64,
    effective_snr_db: f64,
}

#[wasm_bindgen]
impl Waveform {
    #[wasm_bindgen(getter)]
    pub fn i(&self) -> Vec<f32> {
        self.i.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn q(&self) -> Vec<f32> {
        self.q.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn len(&self) -> usize {
        self.i.len()
    }

    #[wasm_bindgen(getter)]
    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    #[wasm_bindgen(getter)]
    pub fn pulse_width(&self) -> usize {
        self.pulse_width
    }

    /// Offset of the pulse start (padding) or of the kept slice (truncation).
    #[wasm_bindgen(getter)]
    pub fn delay(&self) -> usize {
        self.delay
    }

    #[wasm_bindgen(getter)]
    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// Whole-window SNR after padding.
    #[wasm_bindgen(getter)]
    pub fn effective_snr_db(&self) -> f64 {
        self.effective_snr_db
    }
}

fn make_pulse(class_id: usize, width: usize, snr_db: f64, seed: u32) -> pulsenet::Result<Pulse> {
    let family = standard_family(STANDARD_CLASS_COUNT)?;
    let spec = family.get(class_id).ok_or_else(|| {
        pulsenet::Error::InvalidArgument(format!("class {class_id} is not in 0..{STANDARD_CLASS_COUNT}"))
    })?;
    generate_pulse(spec, width, snr_db, u64::from(seed))
}

pub fn class_list() -> Vec<String> {
    standard_family(STANDARD_CLASS_COUNT).map(|f| f.iter().map(|c| c.modulation.name()).collect()).unwrap_or_default()
}

pub fn synthesize_pulse(class_id: usize, width: usize, snr_db: f64, seed: u32) -> pulsenet::Result<Waveform> {
    let p = make_pulse(class_id, width, snr_db, seed)?;
    let (i, q) = p.samples.iter().map(|c| (c.re, c.im)).unzip();
    Ok(Waveform { i, q, pulse_width: width, delay: 0, snr_db, effective_snr_db: snr_db })
}

/// The same pulse as [`synthesize_pulse`] padded with noise or truncated to
/// `d` samples.
pub fn fit_pulse(
    class_id: usize,
    width: usize,
    snr_db: f64,
    d: usize,
    asynchronous: bool,
    seed: u32,
) -> pulsenet::Result<Waveform> {
    let p = make_pulse(class_id, width, snr_db, seed)?;
    let mode = if asynchronous { DelayMode::Asynchronous } else { DelayMode::Synchronous };
    let spec = AugmentSpec::new(d, mode);
    let (samples, delay) = augment_one(&p, &spec, u64::from(seed) ^ 0x5eed)?;
    let (i, q) = samples.iter().map(|c| (c.re, c.im)).unzip();
    Ok(Waveform { i, q, pulse_width: width, delay, snr_db, effective_snr_db: effective_snr_db(snr_db, width, d) })
}

/// `1 - (1 - e_abs)^k` for `k = 1..=k_max`.
pub fn subset_curve(e_abs: f64, k_max: usize) -> pulsenet::Result<Vec<f64>> {
    (1..=k_max).map(|k| binomial_subset_estimate(e_abs, k).map(|b| b.exact)).collect()
}

fn js(e: pulsenet::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = classNames)]
pub fn class_names() -> Vec<String> {
    class_list()
}

#[wasm_bindgen]
pub fn synthesize(class_id: usize, width: usize, snr_db: f64, seed: u32) -> Result<Waveform, JsError> {
    synthesize_pulse(class_id, width, snr_db, seed).map_err(js)
}

#[wasm_bindgen(js_name = fitToWindow)]
pub fn fit_to_window(
    class_id: usize,
    width: usize,
    snr_db: f64,
    d: usize,
    asynchronous: bool,
    seed: u32,
) -> Result<Waveform, JsError> {
    fit_pulse(class_id, width, snr_db, d, asynchronous, seed).map_err(js)
}

#[wasm_bindgen(js_name = subsetErrorCurve)]
pub fn subset_error_curve(e_abs: f64, k_max: usize) -> Result<Vec<f64>, JsError> {
    subset_curve(e_abs, k_max).map_err(js)
}
