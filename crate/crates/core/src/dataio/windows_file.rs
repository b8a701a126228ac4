//! Windows file: `"FNWIN"`, version byte `0x01`, little-endian `u32` window
//! count, `u32` channels, `u32` length, `f64` sample rate, then per window a
//! `u8` label and `channels·length` `f32` values channel-major; trailing `u32`
//! CRC32 of all preceding bytes. Subjects and stride live in a JSON sidecar.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::WindowDataset;
use crate::error::{Error, Result};
use crate::model::io::{sidecar_path, verify_crc, Reader};

const MAGIC: &[u8; 5] = b"FNWIN";
const VERSION: u8 = 0x01;
const HEADER_LEN: usize = 5 + 1 + 4 + 4 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowsSidecar {
    pub format: String,
    pub version: u8,
    pub stride_samples: usize,
    /// Source subject of each window, in file order.
    pub subjects: Vec<String>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

pub fn encode_windows(d: &WindowDataset) -> Result<Vec<u8>> {
    let to_u32 = |v: usize, what: &str| u32::try_from(v).map_err(|_| Error::Param(format!("{what} {v} exceeds u32")));
    let mut out = Vec::with_capacity(HEADER_LEN + d.len() * (1 + 4 * d.window_size()) + 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&to_u32(d.len(), "window count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(d.channels, "channel count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(d.length, "window length")?.to_le_bytes());
    out.extend_from_slice(&d.sample_rate_hz.to_le_bytes());
    for i in 0..d.len() {
        out.push(d.labels[i]);
        for &v in d.window(i) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Parses a windows file. Subjects are left empty and the stride is 0; the
/// sidecar supplies both when read through [`read_windows`].
pub fn decode_windows(bytes: &[u8]) -> Result<WindowDataset> {
    let mut r = Reader::new(bytes);
    if r.take(5, "magic").ok() != Some(MAGIC.as_slice()) {
        return Err(Error::format(0, "bad magic, expected FNWIN"));
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(Error::format(5, format!("unsupported version {version}")));
    }
    let n = r.u32("window count")? as usize;
    let c = r.u32("channel count")? as usize;
    let l = r.u32("window length")? as usize;
    let rate = r.f64("sample rate")?;
    let expected = c
        .checked_mul(l)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(1))
        .and_then(|rec| rec.checked_mul(n))
        .and_then(|v| v.checked_add(HEADER_LEN + 4));
    if expected != Some(bytes.len()) {
        return Err(Error::format(
            HEADER_LEN,
            format!(
                "file is {} bytes but its header describes {n} windows of {c}×{l}",
                bytes.len()
            ),
        ));
    }
    verify_crc(bytes)?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::format(
            HEADER_LEN - 8,
            format!("sample rate {rate} is not positive"),
        ));
    }
    let mut d = WindowDataset::empty(c, l, rate, 0);
    d.values.reserve(n * c * l);
    for _ in 0..n {
        d.labels.push(r.u8("label")?);
        let at = r.pos;
        let raw = r.take(4 * c * l, "window values")?;
        for chunk in raw.chunks_exact(4) {
            let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            if !v.is_finite() {
                return Err(Error::format(at, "non-finite window value"));
            }
            d.values.push(v as f64);
        }
        d.subjects.push(String::new());
    }
    Ok(d)
}

pub fn write_windows(path: impl AsRef<Path>, d: &WindowDataset, metadata: serde_json::Value) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_windows(d)?).map_err(|e| Error::io(path, e))?;
    let sidecar = WindowsSidecar {
        format: "FNWIN".into(),
        version: VERSION,
        stride_samples: d.stride_samples,
        subjects: d.subjects.clone(),
        metadata,
    };
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(&side, text).map_err(|e| Error::io(side, e))
}

/// Reads a windows file, attaching subjects and stride from its sidecar when present.
pub fn read_windows(path: impl AsRef<Path>) -> Result<WindowDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut d = decode_windows(&bytes)?;
    let side = sidecar_path(path);
    if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let sc: WindowsSidecar = serde_json::from_str(&text)?;
        if sc.subjects.len() != d.len() {
            return Err(Error::Schema(format!(
                "{} lists {} subjects for {} windows",
                side.display(),
                sc.subjects.len(),
                d.len()
            )));
        }
        d.subjects = sc.subjects;
        d.stride_samples = sc.stride_samples;
    }
    Ok(d)
}

pub fn read_windows_sidecar(path: impl AsRef<Path>) -> Result<Option<WindowsSidecar>> {
    let side = sidecar_path(path.as_ref());
    if !side.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}
