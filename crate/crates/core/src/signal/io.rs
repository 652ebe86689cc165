//! Signal file formats.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "ECGS"
//!      4     2  u16 version (1)
//!      6     2  u16 lead code 0..=11
//!      8     4  u32 sample count
//!     12     4  f32 sampling rate (Hz)
//!     16   4*n  f32 samples
//! ```
//!
//! The CSV alternative has a `t_seconds,amplitude` header and one row per
//! sample.

use std::fmt::Write as _;
use std::path::Path;

use super::{EcgSignal, LeadId, PatientId};
use crate::fsutil;
use crate::{Error, Result};

pub const SIGNAL_MAGIC: &[u8; 4] = b"ECGS";
pub const SIGNAL_VERSION: u16 = 1;
pub const SIGNAL_HEADER_LEN: usize = 16;

pub fn encode_signal(signal: &EcgSignal) -> Vec<u8> {
    let mut out = Vec::with_capacity(SIGNAL_HEADER_LEN + 4 * signal.samples.len());
    out.extend_from_slice(SIGNAL_MAGIC);
    out.extend_from_slice(&SIGNAL_VERSION.to_le_bytes());
    out.extend_from_slice(&signal.lead.code().to_le_bytes());
    out.extend_from_slice(&(signal.samples.len() as u32).to_le_bytes());
    out.extend_from_slice(&(signal.sampling_rate_hz as f32).to_le_bytes());
    for &x in &signal.samples {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    out
}

/// Parses a binary signal. `origin` is only used in error messages.
pub fn decode_signal(bytes: &[u8], patient_id: PatientId, origin: &Path) -> Result<EcgSignal> {
    if bytes.len() < SIGNAL_HEADER_LEN {
        return Err(Error::format(origin, "truncated header"));
    }
    if &bytes[0..4] != SIGNAL_MAGIC {
        return Err(Error::format(origin, "bad magic, expected ECGS"));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let version = u16_at(4);
    if version != SIGNAL_VERSION {
        return Err(Error::VersionSkew {
            path: origin.to_path_buf(),
            found: version as u32,
            expected: SIGNAL_VERSION as u32,
        });
    }
    let lead = LeadId::from_code(u16_at(6))
        .ok_or_else(|| Error::format(origin, format!("lead code {} out of range", u16_at(6))))?;
    let n = u32_at(8) as usize;
    let rate = f32::from_bits(u32_at(12)) as f64;
    let body = &bytes[SIGNAL_HEADER_LEN..];
    if body.len() != 4 * n {
        return Err(Error::format(
            origin,
            format!("header declares {n} samples but body holds {} bytes", body.len()),
        ));
    }
    let samples = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    EcgSignal::new(lead, samples, rate, patient_id).map_err(|e| Error::format(origin, e.to_string()))
}

pub fn write_signal(path: &Path, signal: &EcgSignal) -> Result<()> {
    fsutil::atomic_write(path, &encode_signal(signal))
}

pub fn read_signal(path: &Path, patient_id: PatientId) -> Result<EcgSignal> {
    let bytes = fsutil::read(path)?;
    decode_signal(&bytes, patient_id, path)
}

pub fn write_signal_csv(path: &Path, signal: &EcgSignal) -> Result<()> {
    let mut s = String::from("t_seconds,amplitude\n");
    for (i, x) in signal.samples.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i as f64 / signal.sampling_rate_hz, x);
    }
    fsutil::atomic_write(path, s.as_bytes())
}

/// Reads the CSV form. The sampling rate is recovered from the first time
/// step, so at least two rows are required.
pub fn read_signal_csv(path: &Path, lead: LeadId, patient_id: PatientId) -> Result<EcgSignal> {
    let text = fsutil::read_to_string(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::format(path, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["t_seconds", "amplitude"] {
        return Err(Error::format(path, "expected header t_seconds,amplitude"));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::format(path, format!("row {}: bad number", row + 2)))
        };
        times.push(parse(0)?);
        samples.push(parse(1)?);
    }
    if samples.len() < 2 {
        return Err(Error::format(path, "need at least two samples to infer the rate"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::format(path, "time column must be increasing"));
    }
    EcgSignal::new(lead, samples, 1.0 / dt, patient_id)
}
