//! Single-file checkpoint archives.
//!
//! A checkpoint stores a model configuration, a vocabulary file reference
//! and named f64 tensors in one binary file, so alternate implementations
//! can interchange weights. Byte layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "TSNFCKPT"
//! 8       2     format version (u16, currently 1)
//! 10      4     config length C (u32)
//! 14      C     config: UTF-8 key=value lines (model type, dimensions, …)
//! …       4     vocabulary reference length V (u32)
//! …       V     vocabulary reference: UTF-8 path relative to the archive
//! …       4     tensor count N (u32)
//! then N records:
//!         2     name length L (u16)
//!         L     tensor name, UTF-8
//!         4     rows (u32)
//!         4     cols (u32)
//!         8·r·c tensor data, f64 little-endian, row-major
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::Tensors;

const MAGIC: &[u8; 8] = b"TSNFCKPT";
const VERSION: u16 = 1;

/// An in-memory checkpoint archive.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    /// Ordered key=value configuration entries.
    pub config: Vec<(String, String)>,
    /// Path of the vocabulary file, relative to the archive.
    pub vocab_ref: String,
    pub tensors: Vec<(String, Array2<f64>)>,
}

impl Checkpoint {
    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Fetch and parse a required config entry.
    pub fn config_parse<T: std::str::FromStr>(&self, path: &Path, key: &str) -> Result<T> {
        let raw = self.config_value(key).ok_or_else(|| Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            reason: format!("missing config key {key:?}"),
        })?;
        raw.parse().map_err(|_| Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            reason: format!("bad value {raw:?} for config key {key:?}"),
        })
    }

    /// Copy every trainable tensor of a model, with names.
    pub fn snapshot<P: Tensors>(model: &P) -> Vec<(String, Array2<f64>)> {
        model
            .tensors()
            .into_iter()
            .map(|(name, t)| (name, t.clone()))
            .collect()
    }

    /// Restore tensors into a freshly initialized model of the right shape.
    /// Every model tensor must be present with matching dimensions.
    pub fn load_into<P: Tensors>(&self, path: &Path, model: &mut P) -> Result<()> {
        let corrupt = |reason: String| Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            reason,
        };
        let mut available: BTreeMap<&str, &Array2<f64>> = self
            .tensors
            .iter()
            .map(|(name, t)| (name.as_str(), t))
            .collect();
        for (name, target) in model.tensors_mut() {
            let stored = available
                .remove(name.as_str())
                .ok_or_else(|| corrupt(format!("missing tensor {name:?}")))?;
            if stored.dim() != target.dim() {
                return Err(corrupt(format!(
                    "tensor {name:?} has shape {:?}, expected {:?}",
                    stored.dim(),
                    target.dim()
                )));
            }
            target.assign(stored);
        }
        if let Some((name, _)) = available.into_iter().next() {
            return Err(corrupt(format!("unexpected tensor {name:?}")));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        let config_text: String = self
            .config
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        buf.extend_from_slice(&(config_text.len() as u32).to_le_bytes());
        buf.extend_from_slice(config_text.as_bytes());
        buf.extend_from_slice(&(self.vocab_ref.len() as u32).to_le_bytes());
        buf.extend_from_slice(self.vocab_ref.as_bytes());
        buf.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, tensor) in &self.tensors {
            buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.extend_from_slice(&(tensor.nrows() as u32).to_le_bytes());
            buf.extend_from_slice(&(tensor.ncols() as u32).to_le_bytes());
            for &v in tensor.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let corrupt = |reason: &str| Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
            if *cursor + n > bytes.len() {
                return Err(corrupt("truncated archive"));
            }
            let slice = &bytes[*cursor..*cursor + n];
            *cursor += n;
            Ok(slice)
        };

        if take(&mut cursor, 8)? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u16::from_le_bytes(take(&mut cursor, 2)?.try_into().unwrap());
        if version != VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let config_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let config_text = std::str::from_utf8(take(&mut cursor, config_len)?)
            .map_err(|_| corrupt("config is not UTF-8"))?
            .to_string();
        let config: Vec<(String, String)> = config_text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| corrupt("malformed config line"))
            })
            .collect::<Result<_>>()?;
        let vocab_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let vocab_ref = std::str::from_utf8(take(&mut cursor, vocab_len)?)
            .map_err(|_| corrupt("vocab reference is not UTF-8"))?
            .to_string();
        let count = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = u16::from_le_bytes(take(&mut cursor, 2)?.try_into().unwrap()) as usize;
            let name = std::str::from_utf8(take(&mut cursor, name_len)?)
                .map_err(|_| corrupt("tensor name is not UTF-8"))?
                .to_string();
            let rows = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
            let cols = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
            let data = take(&mut cursor, rows * cols * 8)?;
            let values: Vec<f64> = data
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let tensor = Array2::from_shape_vec((rows, cols), values)
                .map_err(|_| corrupt("tensor shape mismatch"))?;
            if tensor.iter().any(|v| !v.is_finite()) {
                return Err(corrupt(&format!("non-finite values in tensor {name:?}")));
            }
            tensors.push((name, tensor));
        }
        if cursor != bytes.len() {
            return Err(corrupt("trailing bytes after last tensor"));
        }
        Ok(Checkpoint {
            config,
            vocab_ref,
            tensors,
        })
    }
}
