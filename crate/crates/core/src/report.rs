//! Artifact writers: CSV with SI-suffixed headers, mirrored JSON, and a
//! compact binary code dump for long runs.
//!
//! Code dump layout (little endian):
//!
//! | bytes | content                 |
//! |-------|-------------------------|
//! | 8     | magic `ASARCODE`        |
//! | 4     | format version (1)      |
//! | 4     | bits                    |
//! | 8     | sample count `n`        |
//! | 2n    | codes, u16              |
//! | n     | flags, u8               |

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::Spectrum;

pub const DUMP_MAGIC: &[u8; 8] = b"ASARCODE";
pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("not a code dump: {0}")]
    Format(String),
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `stem.csv` and `stem.json` with the same rows.
pub fn write_table<T: Serialize>(dir: &Path, stem: &str, rows: &[T]) -> Result<(), ReportError> {
    write_csv(&dir.join(format!("{stem}.csv")), rows)?;
    write_json(&dir.join(format!("{stem}.json")), rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub bin: usize,
    pub frequency_hz: f64,
    pub power_dbfs: f64,
}

pub fn spectrum_rows(spec: &Spectrum, f_s: f64) -> Vec<SpectrumRow> {
    spec.dbfs()
        .into_iter()
        .enumerate()
        .map(|(bin, power_dbfs)| SpectrumRow {
            bin,
            frequency_hz: f_s * bin as f64 / spec.n as f64,
            power_dbfs,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeRow {
    pub index: usize,
    pub code: u32,
    pub flags: u8,
}

pub fn code_rows(codes: &[u32], flags: &[u8]) -> Vec<CodeRow> {
    codes
        .iter()
        .zip(flags)
        .enumerate()
        .map(|(index, (&code, &flags))| CodeRow { index, code, flags })
        .collect()
}

pub fn write_code_dump<W: Write>(mut w: W, bits: u32, codes: &[u32], flags: &[u8]) -> Result<(), ReportError> {
    if codes.len() != flags.len() {
        return Err(ReportError::Format("codes and flags differ in length".into()));
    }
    if bits > 16 {
        return Err(ReportError::Format(format!("{bits}-bit codes do not fit in u16")));
    }
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&bits.to_le_bytes())?;
    w.write_all(&(codes.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(codes.len() * 2 + flags.len());
    for &c in codes {
        buf.extend_from_slice(&(c as u16).to_le_bytes());
    }
    buf.extend_from_slice(flags);
    w.write_all(&buf)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeDump {
    pub bits: u32,
    pub codes: Vec<u32>,
    pub flags: Vec<u8>,
}

pub fn read_code_dump<R: Read>(mut r: R) -> Result<CodeDump, ReportError> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head)?;
    if &head[..8] != DUMP_MAGIC {
        return Err(ReportError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[8..12].try_into().unwrap());
    if version != DUMP_VERSION {
        return Err(ReportError::Format(format!("unsupported version {version}")));
    }
    let bits = u32::from_le_bytes(head[12..16].try_into().unwrap());
    let n = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let mut body = vec![0u8; 3 * n];
    r.read_exact(&mut body)?;
    let codes = body[..2 * n]
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]) as u32)
        .collect();
    Ok(CodeDump {
        bits,
        codes,
        flags: body[2 * n..].to_vec(),
    })
}
