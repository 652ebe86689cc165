//! Whole-recording preprocessing: denoise, normalise, resample, detect R
//! peaks on a reference lead and cut every lead at those peaks.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{denoise_samples, detect_r_peaks, normalize, resample_linear, segment_beats, DenoiseConfig, HeartbeatSegment, RPeakConfig};
use crate::signal::{EcgSignal, LeadId, PatientId};
use crate::{parallel, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub denoise: DenoiseConfig,
    pub rpeaks: RPeakConfig,
    /// Lead whose R peaks define the beat boundaries of all twelve leads.
    pub reference_lead: LeadId,
    /// Rate the denoised, normalised signals are resampled to before
    /// segmentation.
    pub target_rate_hz: f64,
    /// Padded beat length; `None` uses the longest R-R interval found.
    pub target_len: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            denoise: DenoiseConfig::default(),
            rpeaks: RPeakConfig::default(),
            reference_lead: LeadId::II,
            target_rate_hz: 125.0,
            target_len: None,
        }
    }
}

/// One patient's leads after denoising, normalisation and resampling, with
/// the R peaks found on the reference lead.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanPatient {
    pub id: PatientId,
    pub signals: BTreeMap<LeadId, EcgSignal>,
    pub r_peaks: Vec<usize>,
}

impl CleanPatient {
    pub fn max_interval(&self) -> usize {
        self.r_peaks.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn segments(&self, target_len: usize) -> Result<Vec<HeartbeatSegment>> {
        let mut out = Vec::new();
        for s in self.signals.values() {
            out.extend(segment_beats(s, &self.r_peaks, target_len)?);
        }
        Ok(out)
    }
}

pub fn clean_signal(signal: &EcgSignal, cfg: &PipelineConfig) -> Result<EcgSignal> {
    let denoised = normalize(&denoise_samples(&signal.samples, &cfg.denoise)?);
    let samples = resample_linear(&denoised, signal.sampling_rate_hz, cfg.target_rate_hz);
    EcgSignal::new(signal.lead, samples, cfg.target_rate_hz, signal.patient_id.clone())
}

pub fn clean_patient(id: &PatientId, signals: &BTreeMap<LeadId, EcgSignal>, cfg: &PipelineConfig) -> Result<CleanPatient> {
    if let Some(missing) = LeadId::ALL.into_iter().find(|l| !signals.contains_key(l)) {
        return Err(Error::InvalidArgument(format!("patient {id} has no lead {missing}")));
    }
    let signals = signals
        .iter()
        .map(|(&l, s)| Ok((l, clean_signal(s, cfg)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let r_peaks = detect_r_peaks(&signals[&cfg.reference_lead], &cfg.rpeaks);
    if r_peaks.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "patient {id}: {} R peak(s) on lead {}, need two for a beat",
            r_peaks.len(),
            cfg.reference_lead
        )));
    }
    Ok(CleanPatient { id: id.clone(), signals, r_peaks })
}

/// Cleans every patient in parallel and segments them with a shared padded
/// length. Returns the segments and that length.
pub fn segment_patients(
    patients: &[(PatientId, &BTreeMap<LeadId, EcgSignal>)],
    cfg: &PipelineConfig,
) -> Result<(Vec<HeartbeatSegment>, usize)> {
    if patients.is_empty() {
        return Err(Error::Empty("patient list"));
    }
    let cleaned: Vec<Result<CleanPatient>> =
        parallel::run(|| patients.par_iter().map(|(id, s)| clean_patient(id, s, cfg)).collect())?;
    let cleaned = cleaned.into_iter().collect::<Result<Vec<_>>>()?;
    let longest = cleaned.iter().map(CleanPatient::max_interval).max().unwrap_or(0);
    let target_len = cfg.target_len.unwrap_or(longest);
    let mut segments = Vec::new();
    for p in &cleaned {
        segments.extend(p.segments(target_len)?);
    }
    Ok((segments, target_len))
}
