//! R-R segmentation with zero padding.

use crate::signal::{EcgSignal, LeadId, PatientId};
use crate::{Error, Result};

/// One beat window, zero-padded to a fixed length. Constructed only through
/// [`HeartbeatSegment::new`], which enforces the padding invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct HeartbeatSegment {
    pub patient_id: PatientId,
    pub lead: LeadId,
    pub beat_index: usize,
    samples: Vec<f64>,
    valid_len: usize,
    pub r_peak_offset: usize,
}

impl HeartbeatSegment {
    /// `valid` samples must lie in `[0, 1]`; they are padded with zeros to
    /// `target_len`.
    pub fn new(
        patient_id: PatientId,
        lead: LeadId,
        beat_index: usize,
        valid: &[f64],
        target_len: usize,
        r_peak_offset: usize,
    ) -> Result<Self> {
        if valid.len() > target_len {
            return Err(Error::IntervalTooLong {
                interval: valid.len(),
                target_len,
            });
        }
        if let Some(bad) = valid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "segment sample {bad} outside [0, 1]"
            )));
        }
        let mut samples = Vec::with_capacity(target_len);
        samples.extend_from_slice(valid);
        samples.resize(target_len, 0.0);
        Ok(Self {
            patient_id,
            lead,
            beat_index,
            samples,
            valid_len: valid.len(),
            r_peak_offset,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn valid(&self) -> &[f64] {
        &self.samples[..self.valid_len]
    }

    pub fn valid_len(&self) -> usize {
        self.valid_len
    }

    pub fn target_len(&self) -> usize {
        self.samples.len()
    }

    /// View as a signal (for the binary format); the padding is included.
    pub fn to_signal(&self, sampling_rate_hz: f64) -> Result<EcgSignal> {
        EcgSignal::new(self.lead, self.samples.clone(), sampling_rate_hz, self.patient_id.clone())
    }
}

/// One segment per R-R interval `[peaks[k], peaks[k+1])`, so `p` peaks give
/// `p - 1` segments. Each starts at its R peak.
pub fn segment_beats(
    signal: &EcgSignal,
    peaks: &[usize],
    target_len: usize,
) -> Result<Vec<HeartbeatSegment>> {
    if peaks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("peaks must be strictly increasing".into()));
    }
    if let Some(&last) = peaks.last() {
        if last >= signal.len() {
            return Err(Error::InvalidArgument(format!(
                "peak index {last} beyond signal length {}",
                signal.len()
            )));
        }
    }
    peaks
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            HeartbeatSegment::new(
                signal.patient_id.clone(),
                signal.lead,
                k,
                &signal.samples[w[0]..w[1]],
                target_len,
                0,
            )
        })
        .collect()
}

/// Linear-interpolation resampling from `from_hz` to `to_hz`. Output sample
/// `j` sits at time `j / to_hz`; the output stops at the last input sample.
pub fn resample_linear(x: &[f64], from_hz: f64, to_hz: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let ratio = from_hz / to_hz;
    let n_out = (((x.len() - 1) as f64) / ratio).floor() as usize + 1;
    (0..n_out)
        .map(|j| {
            let pos = j as f64 * ratio;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i + 1 < x.len() {
                x[i] + frac * (x[i + 1] - x[i])
            } else {
                x[x.len() - 1]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> EcgSignal {
        let samples = (0..n).map(|i| (i % 97) as f64 / 96.0).collect();
        EcgSignal::new(LeadId::V2, samples, 500.0, "p1".into()).unwrap()
    }

    #[test]
    fn fifteen_peaks_fourteen_segments() {
        let s = ramp(7500);
        let peaks: Vec<usize> = (0..15).map(|k| 250 + 500 * k).collect();
        let segs = segment_beats(&s, &peaks, 600).unwrap();
        assert_eq!(segs.len(), 14);
        for (k, seg) in segs.iter().enumerate() {
            assert_eq!(seg.beat_index, k);
            assert_eq!(seg.valid_len(), 500);
            assert_eq!(seg.target_len(), 600);
            assert!(seg.samples()[500..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn stripping_padding_reconstructs_signal() {
        let s = ramp(3000);
        let peaks = vec![10, 400, 1100, 1500, 2990];
        let segs = segment_beats(&s, &peaks, 1500).unwrap();
        let joined: Vec<f64> = segs.iter().flat_map(|g| g.valid().to_vec()).collect();
        assert_eq!(joined, s.samples[10..2990].to_vec());
    }

    #[test]
    fn long_interval_rejected() {
        let s = ramp(2000);
        assert!(matches!(
            segment_beats(&s, &[0, 700], 600),
            Err(Error::IntervalTooLong { interval: 700, target_len: 600 })
        ));
        assert!(segment_beats(&s, &[5, 5], 600).is_err());
        assert!(segment_beats(&s, &[5, 2000], 6000).is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        assert!(HeartbeatSegment::new("p".into(), LeadId::I, 0, &[0.5, 1.5], 4, 0).is_err());
    }

    #[test]
    fn resample_decimates_integer_ratio() {
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        assert_eq!(resample_linear(&x, 500.0, 125.0), vec![0.0, 4.0, 8.0]);
        assert_eq!(resample_linear(&x, 2.0, 4.0).len(), 17);
        assert_eq!(resample_linear(&x, 2.0, 4.0)[1], 0.5);
    }
}
