//! Fixed-length network inputs from variable-length pulses.
//!
//! A pulse of `N` samples is placed in a `D`-sample window at delay `U`.
//! Shorter pulses are padded with complex Gaussian noise at the pulse's own
//! noise variance; longer pulses are truncated to `D` consecutive samples
//! starting at index `U`.

use num_complex::Complex32;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{ComplexTensor, Tensor3};
use crate::rng::{derive_seed, rng_from, Rng};
use crate::waveform::{complex_gaussian, Pulse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayMode {
    /// Pulse centered in the window, `U = floor(|N - D| / 2)`.
    Synchronous,
    /// `U` uniform on `0..=|N - D|`.
    Asynchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentSpec {
    #[serde(rename = "D")]
    pub input_length: usize,
    pub mode: DelayMode,
    /// Fresh delays and padding noise for every minibatch.
    pub rerandomize: bool,
}

impl AugmentSpec {
    pub fn new(input_length: usize, mode: DelayMode) -> Self {
        AugmentSpec { input_length, mode, rerandomize: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_length == 0 {
            return Err(Error::invalid("input length D must be at least 1"));
        }
        Ok(())
    }
}

/// Largest valid delay for a pulse of `n` samples in a `d`-sample window.
pub fn max_delay(n: usize, d: usize) -> usize {
    n.abs_diff(d)
}

pub fn draw_delay(mode: DelayMode, n: usize, d: usize, rng: &mut Rng) -> usize {
    let span = max_delay(n, d);
    match mode {
        DelayMode::Synchronous => span / 2,
        DelayMode::Asynchronous => rng.random_range(0..=span),
    }
}

/// Pads or truncates `pulse` to `spec.input_length` samples at delay `u`.
/// Padding noise is drawn from `seed`.
pub fn fit_to_length(pulse: &Pulse, spec: &AugmentSpec, u: usize, seed: u64) -> Result<Vec<Complex32>> {
    spec.validate()?;
    let n = pulse.pulse_width();
    let d = spec.input_length;
    if u > max_delay(n, d) {
        return Err(Error::invalid(format!("delay {u} outside 0..={} for N={n}, D={d}", max_delay(n, d))));
    }
    if n >= d {
        return Ok(pulse.samples[u..u + d].to_vec());
    }
    let variance = pulse.noise_variance();
    let mut rng = rng_from(seed, &[]);
    let mut noise = |k: usize| -> Vec<Complex32> {
        (0..k)
            .map(|_| {
                let z = complex_gaussian(&mut rng, variance);
                Complex32::new(z.re as f32, z.im as f32)
            })
            .collect()
    };
    let mut out = noise(u);
    out.extend_from_slice(&pulse.samples);
    out.extend(noise(d - n - u));
    Ok(out)
}

/// Whole-window SNR after fitting an `n`-sample pulse into `d` samples:
/// `snr_in + 10 log10(min(n, d) / d)`.
pub fn effective_snr_db(snr_in: f64, n: usize, d: usize) -> f64 {
    snr_in + 10.0 * (n.min(d) as f64 / d as f64).log10()
}

/// One augmented input: delay from `derive(seed, 0)`, noise from `derive(seed, 1)`.
pub fn augment_one(pulse: &Pulse, spec: &AugmentSpec, seed: u64) -> Result<(Vec<Complex32>, usize)> {
    let mut rng = rng_from(seed, &[0]);
    let u = draw_delay(spec.mode, pulse.pulse_width(), spec.input_length, &mut rng);
    Ok((fit_to_length(pulse, spec, u, derive_seed(seed, &[1]))?, u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBatch {
    /// Shape `(B, 1, D)`.
    pub inputs: ComplexTensor<f32>,
    pub labels: Vec<usize>,
    pub delays: Vec<usize>,
}

impl AugmentedBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Augments each pulse with its own seed.
pub fn augment_with_seeds(pulses: &[&Pulse], spec: &AugmentSpec, seeds: &[u64]) -> Result<AugmentedBatch> {
    if pulses.is_empty() {
        return Err(Error::invalid("cannot augment an empty batch"));
    }
    if seeds.len() != pulses.len() {
        return Err(Error::dim(format!("{} seeds for {} pulses", seeds.len(), pulses.len())));
    }
    let d = spec.input_length;
    let b = pulses.len();
    let mut re = Vec::with_capacity(b * d);
    let mut im = Vec::with_capacity(b * d);
    let mut delays = Vec::with_capacity(b);
    for (p, &s) in pulses.iter().zip(seeds) {
        let (row, u) = augment_one(p, spec, s)?;
        re.extend(row.iter().map(|c| c.re));
        im.extend(row.iter().map(|c| c.im));
        delays.push(u);
    }
    Ok(AugmentedBatch {
        inputs: ComplexTensor::new(Tensor3::from_vec([b, 1, d], re)?, Tensor3::from_vec([b, 1, d], im)?)?,
        labels: pulses.iter().map(|p| p.class_id).collect(),
        delays,
    })
}

/// Element `i` uses seed `derive(epoch_seed, i)`.
pub fn augment_batch(pulses: &[&Pulse], spec: &AugmentSpec, epoch_seed: u64) -> Result<AugmentedBatch> {
    let seeds: Vec<u64> = (0..pulses.len() as u64).map(|i| derive_seed(epoch_seed, &[i])).collect();
    augment_with_seeds(pulses, spec, &seeds)
}
