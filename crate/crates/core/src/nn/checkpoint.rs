//! Versioned binary parameter container.
//!
//! Layout (little-endian): magic `PNCKPT`, format version `u16`, JSON header
//! length `u32` and bytes, entry count `u32`, then per entry: name length
//! `u16` and UTF-8 bytes, rank `u8`, dims as `u32`, trainable flag `u8`, and
//! the values as `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::ParamStore;
use super::Scalar;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"PNCKPT";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: serde_json::Value,
    pub entries: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn from_store<T: Scalar>(header: serde_json::Value, store: &ParamStore<T>) -> Self {
        let entries = store
            .iter()
            .map(|p| CheckpointEntry {
                name: p.name.clone(),
                shape: p.shape.clone(),
                trainable: p.trainable,
                values: p.value.iter().map(|v| v.f64() as f32).collect(),
            })
            .collect();
        Checkpoint { header, entries }
    }

    pub fn apply_to<T: Scalar>(&self, store: &mut ParamStore<T>) -> Result<()> {
        let triples: Vec<_> =
            self.entries.iter().map(|e| (e.name.clone(), e.shape.clone(), e.values.clone())).collect();
        store.load_values(&triples)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        for e in &self.entries {
            w.write_all(&(e.name.len() as u16).to_le_bytes())?;
            w.write_all(e.name.as_bytes())?;
            w.write_all(&[e.shape.len() as u8])?;
            for &d in &e.shape {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            w.write_all(&[e.trainable as u8])?;
            for v in &e.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let mut r = Reader { bytes: &bytes, at: 0 };
        if r.take(6)? != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let header_len = u32::from_le_bytes(r.array()?) as usize;
        let header = serde_json::from_slice(r.take(header_len)?)?;
        let count = u32::from_le_bytes(r.array()?) as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = u16::from_le_bytes(r.array()?) as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::Format("entry name is not UTF-8".into()))?;
            let rank = r.take(1)?[0] as usize;
            let shape =
                (0..rank).map(|_| r.array().map(|b| u32::from_le_bytes(b) as usize)).collect::<Result<Vec<_>>>()?;
            let trainable = r.take(1)?[0] != 0;
            let n: usize = shape.iter().product();
            let values = r.take(4 * n)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            entries.push(CheckpointEntry { name, shape, trainable, values });
        }
        if r.at != bytes.len() {
            return Err(Error::Format("trailing bytes after last entry".into()));
        }
        Ok(Checkpoint { header, entries })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.at..self.at + n)
            .ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.at)))?;
        self.at += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }
}
