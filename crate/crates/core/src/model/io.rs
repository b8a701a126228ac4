//! Weight file: `"FNWT"`, version byte `0x01`, then little-endian
//! `u32` tensor count and per tensor `u16` name length, UTF-8 name, `u8` rank,
//! `u32` dims, `f32` data row-major; trailing `u32` CRC32 of all preceding
//! bytes. The model configuration lives in a JSON sidecar next to the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelWeights};
use crate::engine::ParamSet;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"FNWT";
const VERSION: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsSidecar {
    pub format: String,
    pub version: u8,
    pub model_config: ModelConfig,
    /// Caller-provided provenance (effective run configuration, tool version).
    #[serde(default)]
    pub metadata: serde_json::Value,
}

pub fn encode_weights(w: &ModelWeights) -> Vec<u8> {
    let named = w.named();
    let mut out = Vec::with_capacity(16 + 4 * w.param_count());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    for (name, t) in named {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.rank() as u8);
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(self.pos, format!("truncated while reading {what}"))),
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Splits off and verifies the trailing CRC32, returning the covered payload.
pub(crate) fn verify_crc(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 4 {
        return Err(Error::format(0, "file too short for checksum"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::format(
            body.len(),
            format!("CRC mismatch: stored {stored:08x}, computed {actual:08x}"),
        ));
    }
    Ok(body)
}

/// Parses a weight file into its named tensors, in file order.
pub fn decode_weights(bytes: &[u8]) -> Result<Vec<(String, Tensor)>> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic").ok() != Some(MAGIC.as_slice()) {
        return Err(Error::format(0, "bad magic, expected FNWT"));
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let body = verify_crc(bytes)?;
    let mut r = Reader::new(body);
    r.pos = 5;
    let count = r.u32("tensor count")? as usize;
    let mut out = Vec::new();
    for _ in 0..count {
        let name_len = r.u16("name length")? as usize;
        let at = r.pos;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| Error::format(at, "tensor name is not UTF-8"))?
            .to_string();
        let rank = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dimension")? as usize);
        }
        let at = r.pos;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|n| n.checked_mul(4).is_some_and(|b| b <= r.remaining()))
            .ok_or_else(|| Error::format(at, format!("tensor {name} {shape:?} exceeds file size")))?;
        let raw = r.take(4 * n, "tensor data")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        out.push((name, Tensor::new(&shape, data)?));
    }
    if r.remaining() != 0 {
        return Err(Error::format(r.pos, "trailing bytes after last tensor"));
    }
    Ok(out)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Builds weights for `cfg` from decoded tensors, requiring the exact set of
/// names and shapes the configuration implies.
pub fn weights_from_named(cfg: &ModelConfig, tensors: Vec<(String, Tensor)>) -> Result<ModelWeights> {
    let mut w = ModelWeights::zeros(cfg)?;
    let slots = w.named_mut();
    if slots.len() != tensors.len() {
        return Err(Error::Config(format!(
            "weight file holds {} tensors, configuration needs {}",
            tensors.len(),
            slots.len()
        )));
    }
    for ((slot_name, slot), (name, t)) in slots.into_iter().zip(tensors) {
        if slot_name != name || slot.shape() != t.shape() {
            return Err(Error::Config(format!(
                "weight file tensor {name} {:?} does not match expected {slot_name} {:?}",
                t.shape(),
                slot.shape()
            )));
        }
        *slot = t;
    }
    Ok(w)
}

pub fn save_weights(w: &ModelWeights, cfg: &ModelConfig, path: &Path, metadata: serde_json::Value) -> Result<()> {
    w.check_config(cfg)?;
    fs::write(path, encode_weights(w)).map_err(|e| Error::io(path, e))?;
    let sidecar = WeightsSidecar {
        format: "FNWT".into(),
        version: VERSION,
        model_config: cfg.clone(),
        metadata,
    };
    let side = sidecar_path(path);
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    fs::write(&side, json).map_err(|e| Error::io(side, e))
}

pub fn load_weights(path: &Path) -> Result<(ModelWeights, WeightsSidecar)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: WeightsSidecar = serde_json::from_str(&text)?;
    sidecar.model_config.validate()?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let tensors = decode_weights(&bytes)?;
    let w = weights_from_named(&sidecar.model_config, tensors)?;
    Ok((w, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_model;

    fn small() -> ModelConfig {
        ModelConfig {
            input_length: 8,
            lstm_hidden: 4,
            fc_hidden: 6,
            ..Default::default()
        }
    }

    #[test]
    fn encode_decode_encode_is_stable() {
        let cfg = small();
        let w = build_model(&cfg, 3).unwrap();
        let bytes = encode_weights(&w);
        let back = weights_from_named(&cfg, decode_weights(&bytes).unwrap()).unwrap();
        assert_eq!(encode_weights(&back), bytes);
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let bytes = encode_weights(&build_model(&small(), 3).unwrap());
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(matches!(decode_weights(&b), Err(Error::Format { offset: 0, .. })));
        let mut b = bytes.clone();
        b[4] = 2;
        assert!(matches!(decode_weights(&b), Err(Error::Format { offset: 4, .. })));
        assert!(decode_weights(&bytes[..bytes.len() - 7]).is_err());
        let mut b = bytes;
        let mid = b.len() / 2;
        b[mid] ^= 0x40;
        assert!(matches!(decode_weights(&b), Err(Error::Format { .. })));
    }

    #[test]
    fn shape_mismatch_against_config() {
        let w = build_model(&small(), 3).unwrap();
        let other = ModelConfig {
            fc_hidden: 7,
            ..small()
        };
        let err = weights_from_named(&other, decode_weights(&encode_weights(&w)).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
