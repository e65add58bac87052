//! Balanced single-pulse datasets and their on-disk record format.
//!
//! A record is little-endian: `class_id: u16`, `pulse_width: u32`,
//! `snr_db: f32`, then `2 * pulse_width` `f32` values interleaved I, Q.
//! Record files have no header; they end at the last complete record.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex32;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{generate_pulse, standard_family, ClassSpec, Pulse};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};

const STREAM_PARAMS: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_SPLIT: u64 = 2;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFiles {
    pub train: String,
    pub test: String,
}

impl Default for DatasetFiles {
    fn default() -> Self {
        DatasetFiles { train: "train.bin".into(), test: "test.bin".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(rename = "K")]
    pub classes: usize,
    pub per_class: usize,
    pub snr_range_db: [f64; 2],
    pub pulse_width_range: [usize; 2],
    pub split_fraction: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub files: DatasetFiles,
    /// Resolved run configuration of the command that wrote the dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        DatasetManifest {
            classes: 17,
            per_class: 200,
            snr_range_db: [-12.0, 12.0],
            pulse_width_range: [100, 10_000],
            split_fraction: 0.8,
            master_seed: 1,
            files: DatasetFiles::default(),
            provenance: None,
        }
    }
}

impl DatasetManifest {
    pub fn family(&self) -> Result<Vec<ClassSpec>> {
        standard_family(self.classes)
    }

    pub fn train_per_class(&self) -> usize {
        (self.split_fraction * self.per_class as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.family()?;
        if self.per_class == 0 {
            return Err(Error::invalid("per_class must be at least 1"));
        }
        let [lo, hi] = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("bad snr_range_db [{lo}, {hi}]")));
        }
        let [nmin, nmax] = self.pulse_width_range;
        if nmin == 0 || nmin > nmax || nmax > u32::MAX as usize {
            return Err(Error::invalid(format!("bad pulse_width_range [{nmin}, {nmax}]")));
        }
        if let Some(c) = family.iter().find(|c| c.modulation.min_length() > nmin) {
            return Err(Error::invalid(format!(
                "pulse_width_range starts at {nmin} but class {} ({}) needs {}",
                c.class_id,
                c.modulation.name(),
                c.modulation.min_length()
            )));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid(format!("split_fraction must be in (0, 1), got {}", self.split_fraction)));
        }
        Ok(())
    }
}

/// In-memory dataset with a fixed train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub train: Vec<Pulse>,
    pub test: Vec<Pulse>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.manifest.classes
    }

    pub fn load(dir: &Path) -> Result<Dataset> {
        let manifest: DatasetManifest = serde_json::from_reader(BufReader::new(File::open(dir.join(MANIFEST_FILE))?))?;
        let train = read_records(&dir.join(&manifest.files.train))?;
        let test = read_records(&dir.join(&manifest.files.test))?;
        Ok(Dataset { manifest, train, test })
    }
}

fn draw_width(rng: &mut crate::rng::Rng, [nmin, nmax]: [usize; 2]) -> usize {
    if nmin == nmax {
        return nmin;
    }
    let (lo, hi) = ((nmin as f64).ln(), (nmax as f64).ln());
    let n = (lo + rng.random::<f64>() * (hi - lo)).exp().round() as usize;
    n.clamp(nmin, nmax)
}

/// One pulse per (class, index): SNR uniform in the manifest range, width
/// log-uniform. The split is stratified, `round(split_fraction * per_class)`
/// training examples per class.
pub fn generate_dataset(manifest: &DatasetManifest) -> Result<Dataset> {
    manifest.validate()?;
    let family = manifest.family()?;
    let seed = manifest.master_seed;
    let n_train = manifest.train_per_class();
    let [lo, hi] = manifest.snr_range_db;

    let mut train = Vec::with_capacity(n_train * family.len());
    let mut test = Vec::with_capacity((manifest.per_class - n_train) * family.len());
    for class in &family {
        let c = class.class_id as u64;
        let mut pulses = (0..manifest.per_class as u64)
            .map(|j| {
                let mut rng = rng_from(seed, &[STREAM_PARAMS, c, j]);
                let snr = lo + rng.random::<f64>() * (hi - lo);
                let n = draw_width(&mut rng, manifest.pulse_width_range);
                generate_pulse(class, n, snr, derive_seed(seed, &[STREAM_NOISE, c, j])).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut order: Vec<usize> = (0..manifest.per_class).collect();
        order.shuffle(&mut rng_from(seed, &[STREAM_SPLIT, c]));
        let (tr, te) = order.split_at(n_train);
        let mut tr = tr.to_vec();
        let mut te = te.to_vec();
        tr.sort_unstable();
        te.sort_unstable();
        train.extend(tr.iter().filter_map(|&i| pulses[i].take()));
        test.extend(te.iter().filter_map(|&i| pulses[i].take()));
    }
    Ok(Dataset { manifest: manifest.clone(), train, test })
}

/// Generates the dataset and writes both record files plus `manifest.json`
/// into `dir`.
pub fn build_dataset(manifest: &DatasetManifest, dir: &Path) -> Result<Dataset> {
    let dataset = generate_dataset(manifest)?;
    fs::create_dir_all(dir)?;
    write_records(&dir.join(&manifest.files.train), &dataset.train)?;
    write_records(&dir.join(&manifest.files.test), &dataset.test)?;
    let mut w = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(dataset)
}

pub fn write_records(path: &Path, pulses: &[Pulse]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in pulses {
        let class_id =
            u16::try_from(p.class_id).map_err(|_| Error::invalid(format!("class_id {} exceeds u16", p.class_id)))?;
        let width = u32::try_from(p.pulse_width())
            .map_err(|_| Error::invalid(format!("pulse width {} exceeds u32", p.pulse_width())))?;
        w.write_all(&class_id.to_le_bytes())?;
        w.write_all(&width.to_le_bytes())?;
        w.write_all(&p.snr_db.to_le_bytes())?;
        for s in &p.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<Pulse>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let mut pulses = Vec::new();
    let mut at = 0usize;
    let take = |at: &mut usize, len: usize| -> Result<&[u8]> {
        let s = bytes
            .get(*at..*at + len)
            .ok_or_else(|| Error::Format(format!("{}: truncated record at byte {at}", path.display())))?;
        *at += len;
        Ok(s)
    };
    while at < bytes.len() {
        let class_id = u16::from_le_bytes(take(&mut at, 2)?.try_into().unwrap()) as usize;
        let width = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        let snr_db = f32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
        let raw = take(&mut at, width * 8)?;
        let samples = raw
            .chunks_exact(8)
            .map(|c| {
                Complex32::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()),
                    f32::from_le_bytes(c[4..].try_into().unwrap()),
                )
            })
            .collect();
        pulses.push(Pulse { samples, class_id, snr_db });
    }
    Ok(pulses)
}
