//! Phase- and frequency-coded pulse families.
//!
//! Every code is stretched over the requested pulse width: a code with `L`
//! chips assigns sample `i` of an `n`-sample pulse to chip `i * L / n`.
//! Frequency-coded families integrate their instantaneous frequency so the
//! phase is continuous across chip boundaries.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Barker sequences used by the family.
pub const BARKER_7: [i8; 7] = [1, 1, 1, -1, -1, 1, -1];
pub const BARKER_11: [i8; 11] = [1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1];
pub const BARKER_13: [i8; 13] = [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1];

/// Welch-construction Costas sequence for p = 7, primitive root 3.
pub const COSTAS_6: [usize; 6] = [3, 2, 6, 4, 5, 1];

/// Intra-pulse modulation with its per-kind parameters.
///
/// Frequencies are in cycles per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    Unmodulated,
    LinearFmUp { sweep: f64 },
    LinearFmDown { sweep: f64 },
    Barker { length: usize },
    Frank { order: usize },
    P1 { order: usize },
    P2 { order: usize },
    P3 { length: usize },
    P4 { length: usize },
    Costas { sequence: Vec<usize>, freq_step: f64 },
    RandomBpsk { length: usize, seed: u64 },
    RandomQpsk { length: usize, seed: u64 },
    SteppedFrequency { steps: usize, freq_step: f64 },
    NonlinearFm { sweep: f64 },
    NoiseFm { phase_std: f64, seed: u64 },
}

impl Modulation {
    pub fn name(&self) -> String {
        match self {
            Modulation::Unmodulated => "unmodulated".into(),
            Modulation::LinearFmUp { .. } => "lfm-up".into(),
            Modulation::LinearFmDown { .. } => "lfm-down".into(),
            Modulation::Barker { length } => format!("barker-{length}"),
            Modulation::Frank { .. } => "frank".into(),
            Modulation::P1 { .. } => "p1".into(),
            Modulation::P2 { .. } => "p2".into(),
            Modulation::P3 { .. } => "p3".into(),
            Modulation::P4 { .. } => "p4".into(),
            Modulation::Costas { .. } => "costas".into(),
            Modulation::RandomBpsk { .. } => "bpsk-fixed".into(),
            Modulation::RandomQpsk { .. } => "qpsk-fixed".into(),
            Modulation::SteppedFrequency { .. } => "stepped-freq".into(),
            Modulation::NonlinearFm { .. } => "nlfm".into(),
            Modulation::NoiseFm { .. } => "noise-fm".into(),
        }
    }

    /// Shortest pulse that holds one sample per chip.
    pub fn min_length(&self) -> usize {
        match self {
            Modulation::Unmodulated | Modulation::NoiseFm { .. } => 1,
            Modulation::LinearFmUp { .. } | Modulation::LinearFmDown { .. } | Modulation::NonlinearFm { .. } => 2,
            Modulation::Barker { length } => *length,
            Modulation::Frank { order } | Modulation::P1 { order } | Modulation::P2 { order } => order * order,
            Modulation::P3 { length } | Modulation::P4 { length } => *length,
            Modulation::Costas { sequence, .. } => sequence.len(),
            Modulation::RandomBpsk { length, .. } | Modulation::RandomQpsk { length, .. } => *length,
            Modulation::SteppedFrequency { steps, .. } => *steps,
        }
    }
}

/// One class of the synthetic family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub class_id: usize,
    pub modulation: Modulation,
}

/// The full 17-class family, in class-id order.
pub fn standard_modulations() -> Vec<Modulation> {
    vec![
        Modulation::Unmodulated,
        Modulation::LinearFmUp { sweep: 0.2 },
        Modulation::LinearFmDown { sweep: 0.2 },
        Modulation::Barker { length: 7 },
        Modulation::Barker { length: 11 },
        Modulation::Barker { length: 13 },
        Modulation::Frank { order: 4 },
        Modulation::P1 { order: 4 },
        Modulation::P2 { order: 4 },
        Modulation::P3 { length: 16 },
        Modulation::P4 { length: 16 },
        Modulation::Costas { sequence: COSTAS_6.to_vec(), freq_step: 0.05 },
        Modulation::RandomBpsk { length: 31, seed: 0xB95C },
        Modulation::RandomQpsk { length: 16, seed: 0x9F5C },
        Modulation::SteppedFrequency { steps: 8, freq_step: 0.04 },
        Modulation::NonlinearFm { sweep: 0.3 },
        Modulation::NoiseFm { phase_std: 0.3, seed: 0x7015E },
    ]
}

pub const STANDARD_CLASS_COUNT: usize = 17;

/// First `k` classes of the standard family.
pub fn standard_family(k: usize) -> Result<Vec<ClassSpec>> {
    if k == 0 || k > STANDARD_CLASS_COUNT {
        return Err(Error::invalid(format!("class count must be in 1..={STANDARD_CLASS_COUNT}, got {k}")));
    }
    Ok(standard_modulations()
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(class_id, modulation)| ClassSpec { class_id, modulation })
        .collect())
}

/// A family built from selected kinds of the standard family, relabelled
/// `0..kinds.len()`.
pub fn family_from_indices(indices: &[usize]) -> Result<Vec<ClassSpec>> {
    let all = standard_modulations();
    let mut seen = vec![false; all.len()];
    indices
        .iter()
        .enumerate()
        .map(|(class_id, &idx)| {
            let m = all.get(idx).ok_or_else(|| Error::invalid(format!("no standard class {idx}")))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::invalid(format!("class {idx} listed twice")));
            }
            Ok(ClassSpec { class_id, modulation: m.clone() })
        })
        .collect()
}

fn chip_of(i: usize, chips: usize, n: usize) -> usize {
    i * chips / n
}

fn chip_phases(modulation: &Modulation) -> Option<Vec<f64>> {
    let phases = match modulation {
        Modulation::Barker { length } => {
            let code: &[i8] = match length {
                7 => &BARKER_7,
                11 => &BARKER_11,
                13 => &BARKER_13,
                _ => return None,
            };
            code.iter().map(|&c| if c > 0 { 0.0 } else { PI }).collect()
        }
        Modulation::Frank { order } => {
            let m = *order;
            (0..m * m)
                .map(|c| {
                    let (row, col) = ((c / m) as f64, (c % m) as f64);
                    2.0 * PI * row * col / m as f64
                })
                .collect()
        }
        Modulation::P1 { order } => {
            let m = *order as f64;
            (0..order * order)
                .map(|c| {
                    let row = (c / order + 1) as f64;
                    let col = (c % order + 1) as f64;
                    -(PI / m) * (m - (2.0 * row - 1.0)) * ((row - 1.0) * m + (col - 1.0))
                })
                .collect()
        }
        Modulation::P2 { order } => {
            let m = *order as f64;
            (0..order * order)
                .map(|c| {
                    let row = (c / order + 1) as f64;
                    let col = (c % order + 1) as f64;
                    (PI / (2.0 * m) * (m - 1.0) - PI / m * (row - 1.0)) * (m + 1.0 - 2.0 * col)
                })
                .collect()
        }
        Modulation::P3 { length } => {
            let rho = *length as f64;
            (0..*length).map(|i| PI * (i as f64).powi(2) / rho).collect()
        }
        Modulation::P4 { length } => {
            let rho = *length as f64;
            (0..*length)
                .map(|i| {
                    let i = i as f64;
                    PI * i * i / rho - PI * i
                })
                .collect()
        }
        Modulation::RandomBpsk { length, seed } => {
            let mut rng = rng_from(*seed, &[]);
            (0..*length).map(|_| if rng.random::<bool>() { 0.0 } else { PI }).collect()
        }
        Modulation::RandomQpsk { length, seed } => {
            let mut rng = rng_from(*seed, &[]);
            (0..*length).map(|_| rng.random_range(0..4u32) as f64 * PI / 2.0).collect()
        }
        _ => return None,
    };
    Some(phases)
}

/// Instantaneous frequency (cycles/sample) at sample `i` for frequency-coded
/// families.
fn chip_frequency(modulation: &Modulation, i: usize, n: usize) -> Option<f64> {
    match modulation {
        Modulation::Costas { sequence, freq_step } => Some(sequence[chip_of(i, sequence.len(), n)] as f64 * freq_step),
        Modulation::SteppedFrequency { steps, freq_step } => Some(chip_of(i, *steps, n) as f64 * freq_step),
        Modulation::NonlinearFm { sweep } => {
            let t = i as f64 / n as f64;
            Some(sweep * (t - (2.0 * PI * t).sin() / (2.0 * PI)))
        }
        _ => None,
    }
}

/// Unwrapped phase of the clean pulse, one value per sample.
pub fn phase_sequence(spec: &ClassSpec, n: usize) -> Result<Vec<f64>> {
    let m = &spec.modulation;
    if n < m.min_length() {
        return Err(Error::invalid(format!(
            "class {} ({}) needs at least {} samples, got {n}",
            spec.class_id,
            m.name(),
            m.min_length()
        )));
    }
    let nf = n as f64;
    let phases = match m {
        Modulation::Unmodulated => vec![0.0; n],
        Modulation::LinearFmUp { sweep } => (0..n).map(|i| PI * sweep * (i as f64).powi(2) / nf).collect(),
        Modulation::LinearFmDown { sweep } => (0..n)
            .map(|i| {
                let i = i as f64;
                PI * sweep * (2.0 * i - i * i / nf)
            })
            .collect(),
        Modulation::NoiseFm { phase_std, seed } => {
            let mut rng = rng_from(*seed, &[]);
            let mut acc = 0.0;
            (0..n)
                .map(|_| {
                    let cur = acc;
                    let step: f64 = StandardNormal.sample(&mut rng);
                    acc += phase_std * step;
                    cur
                })
                .collect()
        }
        Modulation::Costas { .. } | Modulation::SteppedFrequency { .. } | Modulation::NonlinearFm { .. } => {
            let mut acc = 0.0;
            (0..n)
                .map(|i| {
                    let cur = acc;
                    acc += 2.0 * PI * chip_frequency(m, i, n).unwrap_or(0.0);
                    cur
                })
                .collect()
        }
        _ => {
            let chips = chip_phases(m).ok_or_else(|| {
                Error::invalid(format!("class {}: unsupported parameters for {}", spec.class_id, m.name()))
            })?;
            (0..n).map(|i| chips[chip_of(i, chips.len(), n)]).collect()
        }
    };
    Ok(phases)
}

/// Unit-modulus clean pulse of `n` samples.
pub fn phase_code(spec: &ClassSpec, n: usize) -> Result<Vec<Complex64>> {
    Ok(phase_sequence(spec, n)?.into_iter().map(|phi| Complex64::from_polar(1.0, phi)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(modulation: Modulation) -> ClassSpec {
        ClassSpec { class_id: 0, modulation }
    }

    #[test]
    fn unmodulated_is_all_ones() {
        let s = phase_code(&spec(Modulation::Unmodulated), 4).unwrap();
        assert_eq!(s, vec![Complex64::new(1.0, 0.0); 4]);
    }

    #[test]
    fn barker13_signs_and_sidelobes() {
        let s = phase_code(&spec(Modulation::Barker { length: 13 }), 13).unwrap();
        let expected = [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1];
        for (v, &e) in s.iter().zip(&expected) {
            assert!((v.re - e as f64).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
        // aperiodic autocorrelation: peak 13, every sidelobe magnitude <= 1
        let acf = |lag: usize| -> f64 { (0..13 - lag).map(|i| (s[i + lag] * s[i].conj()).re).sum() };
        assert!((acf(0) - 13.0).abs() < 1e-9);
        for lag in 1..13 {
            assert!(acf(lag).abs() <= 1.0 + 1e-9, "lag {lag}");
        }
    }

    #[test]
    fn lfm_up_instantaneous_frequency_is_linear() {
        let sweep = 0.2;
        let n = 400;
        let s = phase_code(&spec(Modulation::LinearFmUp { sweep }), n).unwrap();
        // finite-difference of the wrapped phase, from the samples alone
        let freqs: Vec<f64> = s.windows(2).map(|w| (w[1] * w[0].conj()).arg() / (2.0 * PI)).collect();
        for (i, f) in freqs.iter().enumerate() {
            let expected = sweep * (2.0 * i as f64 + 1.0) / (2.0 * n as f64);
            assert!((f - expected).abs() < 1e-9, "i={i}: {f} vs {expected}");
        }
        assert!(freqs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn every_class_is_unit_modulus() {
        for class in standard_family(STANDARD_CLASS_COUNT).unwrap() {
            for n in [class.modulation.min_length(), 100, 257, 1000] {
                for v in phase_code(&class, n).unwrap() {
                    assert!((v.norm() - 1.0).abs() < 1e-12, "{}", class.modulation.name());
                }
            }
        }
    }

    #[test]
    fn too_short_names_the_class() {
        let c = ClassSpec { class_id: 5, modulation: Modulation::Barker { length: 13 } };
        let err = phase_code(&c, 12).unwrap_err().to_string();
        assert!(err.contains("class 5") && err.contains("barker-13"), "{err}");
    }

    #[test]
    fn codes_are_deterministic() {
        for class in standard_family(STANDARD_CLASS_COUNT).unwrap() {
            assert_eq!(phase_code(&class, 300).unwrap(), phase_code(&class, 300).unwrap());
        }
    }

    #[test]
    fn family_selection_rejects_duplicates() {
        assert!(family_from_indices(&[0, 3, 3]).is_err());
        let f = family_from_indices(&[5, 0]).unwrap();
        assert_eq!(f[0].class_id, 0);
        assert_eq!(f[0].modulation, Modulation::Barker { length: 13 });
        assert!(standard_family(18).is_err());
    }
}
