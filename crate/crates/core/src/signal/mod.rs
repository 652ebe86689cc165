//! Core waveform types and the synthetic twelve-lead generator.

mod io;
mod synth;

use std::fmt;
use std::str::FromStr;

pub use io::{
    decode_signal, encode_signal, read_signal, read_signal_csv, write_signal, write_signal_csv,
    SIGNAL_HEADER_LEN, SIGNAL_MAGIC, SIGNAL_VERSION,
};
pub use synth::{
    lead_projection, random_patient_params, synth_patient, LeadProjection, SyntheticBeatParams,
    SyntheticPatient, Wave, WaveParams, DEFAULT_SAMPLING_RATE_HZ,
};

use crate::{Error, Result};

/// The twelve standard ECG leads, in their conventional order. The
/// discriminant is the lead code used in the binary signal format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum LeadId {
    I = 0,
    II = 1,
    III = 2,
    AVR = 3,
    AVL = 4,
    AVF = 5,
    V1 = 6,
    V2 = 7,
    V3 = 8,
    V4 = 9,
    V5 = 10,
    V6 = 11,
}

impl LeadId {
    pub const ALL: [LeadId; 12] = [
        LeadId::I,
        LeadId::II,
        LeadId::III,
        LeadId::AVR,
        LeadId::AVL,
        LeadId::AVF,
        LeadId::V1,
        LeadId::V2,
        LeadId::V3,
        LeadId::V4,
        LeadId::V5,
        LeadId::V6,
    ];

    pub fn code(self) -> u16 {
        self as u16
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u16) -> Option<LeadId> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            LeadId::I => "I",
            LeadId::II => "II",
            LeadId::III => "III",
            LeadId::AVR => "aVR",
            LeadId::AVL => "aVL",
            LeadId::AVF => "aVF",
            LeadId::V1 => "V1",
            LeadId::V2 => "V2",
            LeadId::V3 => "V3",
            LeadId::V4 => "V4",
            LeadId::V5 => "V5",
            LeadId::V6 => "V6",
        }
    }

    /// Chest leads V1..V6.
    pub fn is_precordial(self) -> bool {
        self.code() >= 6
    }
}

impl fmt::Display for LeadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LeadId {
    type Err = Error;

    /// Case-insensitive; accepts `aVR`, `AVR`, `avr`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown lead '{s}'")))
    }
}

/// Opaque patient identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatientId(pub String);

impl PatientId {
    pub fn numbered(i: usize) -> Self {
        PatientId(format!("p{i:04}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PatientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PatientId {
    fn from(s: &str) -> Self {
        PatientId(s.to_string())
    }
}

/// One lead's sampled waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgSignal {
    pub lead: LeadId,
    pub samples: Vec<f64>,
    pub sampling_rate_hz: f64,
    pub patient_id: PatientId,
}

impl EcgSignal {
    pub fn new(
        lead: LeadId,
        samples: Vec<f64>,
        sampling_rate_hz: f64,
        patient_id: PatientId,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("signal"));
        }
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        Ok(Self {
            lead,
            samples,
            sampling_rate_hz,
            patient_id,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sampling_rate_hz
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            lead: self.lead,
            samples,
            sampling_rate_hz: self.sampling_rate_hz,
            patient_id: self.patient_id.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Exact two-pass sample statistics.
pub fn signal_stats(samples: &[f64]) -> Result<SignalStats> {
    if samples.is_empty() {
        return Err(Error::Empty("signal"));
    }
    let n = samples.len() as f64;
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &x in samples {
        min = min.min(x);
        max = max.max(x);
        sum += x;
    }
    let mean = sum / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(SignalStats {
        min,
        max,
        mean,
        std: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn lead_ids_round_trip_and_classify() {
        let mut seen = std::collections::HashSet::new();
        for lead in LeadId::ALL {
            assert!(seen.insert(lead));
            assert_eq!(LeadId::from_code(lead.code()), Some(lead));
            assert_eq!(lead.name().parse::<LeadId>().unwrap(), lead);
            let chest = matches!(
                lead,
                LeadId::V1 | LeadId::V2 | LeadId::V3 | LeadId::V4 | LeadId::V5 | LeadId::V6
            );
            assert_eq!(lead.is_precordial(), chest);
        }
        assert_eq!(seen.len(), 12);
        assert_eq!("avr".parse::<LeadId>().unwrap(), LeadId::AVR);
        assert!("V7".parse::<LeadId>().is_err());
        assert_eq!(LeadId::from_code(12), None);
    }

    #[test]
    fn signal_rejects_empty_and_bad_rate() {
        assert!(EcgSignal::new(LeadId::I, vec![], 500.0, "p".into()).is_err());
        assert!(EcgSignal::new(LeadId::I, vec![0.0], 0.0, "p".into()).is_err());
        assert!(EcgSignal::new(LeadId::I, vec![0.0], f64::NAN, "p".into()).is_err());
    }

    #[test]
    fn stats_of_constant_signal() {
        let s = signal_stats(&[0.5; 10]).unwrap();
        assert_eq!((s.min, s.max, s.mean, s.std), (0.5, 0.5, 0.5, 0.0));
    }

    #[test]
    fn stats_of_two_points() {
        let s = signal_stats(&[0.0, 1.0]).unwrap();
        assert_eq!((s.min, s.max, s.mean), (0.0, 1.0, 0.5));
        assert!((s.std - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stats_empty_rejected() {
        assert!(signal_stats(&[]).is_err());
    }

    #[test]
    fn stats_match_streaming_recomputation() {
        let mut r = rng::seeded(11, 0);
        let xs: Vec<f64> = (0..5000).map(|_| rng::uniform(&mut r, -3.0, 7.0)).collect();
        // Welford's single-pass update as an independent route.
        let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for &x in &xs {
            n += 1.0;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let s = signal_stats(&xs).unwrap();
        assert_eq!(s.min, lo);
        assert_eq!(s.max, hi);
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.std - (m2 / n).sqrt()).abs() < 1e-12);
    }
}
