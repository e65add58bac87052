//! Noisy superpositions of shifted, scaled pulses with multi-hot labels.

use num_complex::Complex32;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{complex_gaussian, generate_pulse, noise_variance, ClassSpec, Pulse};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};

#[derive(Debug, Clone)]
pub struct SceneComponent {
    pub pulse: Pulse,
    pub delay: usize,
    pub scale: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPulseScene {
    pub class_ids: Vec<usize>,
    pub delays: Vec<usize>,
    pub scales: Vec<f32>,
    pub widths: Vec<usize>,
    /// Multi-hot presence vector of length K.
    pub label: Vec<u8>,
    pub samples: Vec<Complex32>,
    /// Per-sample SNR of a unit-scale component against the scene noise.
    pub snr_db: f32,
}

impl MultiPulseScene {
    pub fn num_pulses(&self) -> usize {
        self.class_ids.len()
    }
}

/// `sum_j scale_j * shift(pulse_j, delay_j)` over a `d`-sample window plus
/// one realization of circular complex noise with standard deviation
/// `noise_std` (variance `noise_std^2`), drawn from `seed`.
pub fn superpose(
    components: &[SceneComponent],
    num_classes: usize,
    d: usize,
    noise_std: f64,
    seed: u64,
) -> Result<MultiPulseScene> {
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    let mut label = vec![0u8; num_classes];
    for c in components {
        let n = c.pulse.pulse_width();
        if c.delay + n > d {
            return Err(Error::invalid(format!(
                "pulse of class {} (width {n}, delay {}) overflows the {d}-sample window",
                c.pulse.class_id, c.delay
            )));
        }
        if c.scale.is_nan() || c.scale <= 0.0 {
            return Err(Error::invalid(format!("scale must be positive, got {}", c.scale)));
        }
        let slot = label
            .get_mut(c.pulse.class_id)
            .ok_or_else(|| Error::invalid(format!("class {} outside 0..{num_classes}", c.pulse.class_id)))?;
        if *slot == 1 {
            return Err(Error::invalid(format!(
                "scene components must have distinct classes; class {} repeats",
                c.pulse.class_id
            )));
        }
        *slot = 1;
    }

    let mut samples = vec![Complex32::new(0.0, 0.0); d];
    for c in components {
        for (out, s) in samples[c.delay..].iter_mut().zip(&c.pulse.samples) {
            *out += s * c.scale;
        }
    }
    if noise_std > 0.0 {
        let mut rng = rng_from(seed, &[]);
        let var = noise_std * noise_std;
        for out in samples.iter_mut() {
            let z = complex_gaussian(&mut rng, var);
            *out += Complex32::new(z.re as f32, z.im as f32);
        }
    }
    Ok(MultiPulseScene {
        class_ids: components.iter().map(|c| c.pulse.class_id).collect(),
        delays: components.iter().map(|c| c.delay).collect(),
        scales: components.iter().map(|c| c.scale).collect(),
        widths: components.iter().map(|c| c.pulse.pulse_width()).collect(),
        label,
        samples,
        snr_db: if noise_std > 0.0 { (-20.0 * noise_std.log10()) as f32 } else { f32::INFINITY },
    })
}

/// Sampling ranges for random multi-pulse scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub input_length: usize,
    pub snr_range_db: [f64; 2],
    pub pulse_width_range: [usize; 2],
    /// Per-component amplitude, drawn log-uniform.
    pub scale_range: [f64; 2],
}

impl SceneSpec {
    pub fn new(input_length: usize) -> Self {
        SceneSpec {
            input_length,
            snr_range_db: [-12.0, 12.0],
            pulse_width_range: [100, 10_000],
            scale_range: [0.5, 2.0],
        }
    }
}

fn log_uniform(rng: &mut crate::rng::Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Draws `l` distinct classes from `family`, clean pulses with widths
/// log-uniform in the spec range (capped at the window), uniform delays,
/// log-uniform scales, and scene noise at an SNR uniform in the spec range.
pub fn random_scene(family: &[ClassSpec], spec: &SceneSpec, l: usize, seed: u64) -> Result<MultiPulseScene> {
    if l > family.len() {
        return Err(Error::invalid(format!("cannot draw {l} distinct classes from a family of {}", family.len())));
    }
    let d = spec.input_length;
    let [nmin, nmax] = spec.pulse_width_range;
    let nmax = nmax.min(d);
    if nmin > nmax {
        return Err(Error::invalid(format!("minimum width {nmin} exceeds window {d}")));
    }
    let mut rng = rng_from(seed, &[0]);
    let picks = sample(&mut rng, family.len(), l);
    let mut components = Vec::with_capacity(l);
    for (j, idx) in picks.into_iter().enumerate() {
        let class = &family[idx];
        let n = (log_uniform(&mut rng, nmin as f64, nmax as f64).round() as usize).clamp(nmin, nmax);
        let delay = rng.random_range(0..=d - n);
        let scale = log_uniform(&mut rng, spec.scale_range[0], spec.scale_range[1]) as f32;
        let pulse = generate_pulse(class, n, f64::INFINITY, derive_seed(seed, &[1, j as u64]))?;
        components.push(SceneComponent { pulse, delay, scale });
    }
    let [lo, hi] = spec.snr_range_db;
    let snr = lo + rng.random::<f64>() * (hi - lo);
    let noise_std = noise_variance(snr).sqrt();
    superpose(&components, family.len(), d, noise_std, derive_seed(seed, &[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::standard_family;

    fn clean(class: usize, n: usize) -> Pulse {
        let family = standard_family(17).unwrap();
        generate_pulse(&family[class], n, f64::INFINITY, 0).unwrap()
    }

    fn comp(class: usize, n: usize, delay: usize, scale: f32) -> SceneComponent {
        SceneComponent { pulse: clean(class, n), delay, scale }
    }

    #[test]
    fn empty_scene_is_pure_noise() {
        let s = superpose(&[], 17, 64, 1.0, 5).unwrap();
        assert_eq!(s.label, vec![0; 17]);
        assert_eq!(s.num_pulses(), 0);
        assert!(s.samples.iter().any(|v| v.norm() > 0.0));
    }

    #[test]
    fn label_is_multi_hot() {
        let s = superpose(&[comp(3, 20, 0, 1.0), comp(9, 30, 10, 0.5)], 17, 64, 0.1, 5).unwrap();
        assert_eq!(s.label.iter().map(|&b| b as usize).sum::<usize>(), 2);
        assert_eq!((s.label[3], s.label[9]), (1, 1));
    }

    #[test]
    fn precondition_errors() {
        assert!(superpose(&[comp(3, 20, 50, 1.0)], 17, 64, 0.1, 5).is_err());
        assert!(superpose(&[comp(3, 20, 0, 0.0)], 17, 64, 0.1, 5).is_err());
        let same = superpose(&[comp(3, 20, 0, 1.0), comp(3, 20, 0, 1.0)], 17, 64, 0.1, 5);
        assert!(same.unwrap_err().to_string().contains("distinct"));
    }

    #[test]
    fn noise_free_superposition_is_additive() {
        let a = comp(1, 40, 3, 1.5);
        let b = comp(12, 31, 20, 0.7);
        let ab = superpose(&[a.clone(), b.clone()], 17, 64, 0.0, 0).unwrap();
        let sa = superpose(&[a], 17, 64, 0.0, 0).unwrap();
        let sb = superpose(&[b], 17, 64, 0.0, 0).unwrap();
        for i in 0..64 {
            assert_eq!(ab.samples[i], sa.samples[i] + sb.samples[i]);
        }
    }

    #[test]
    fn random_scene_respects_window() {
        let family = standard_family(17).unwrap();
        let spec = SceneSpec { pulse_width_range: [20, 500], ..SceneSpec::new(256) };
        for l in 0..=4 {
            let s = random_scene(&family, &spec, l, 77 + l as u64).unwrap();
            assert_eq!(s.num_pulses(), l);
            assert_eq!(s.samples.len(), 256);
            for (d, w) in s.delays.iter().zip(&s.widths) {
                assert!(d + w <= 256);
            }
            for sc in &s.scales {
                assert!((0.5..=2.0).contains(sc));
            }
        }
    }
}
