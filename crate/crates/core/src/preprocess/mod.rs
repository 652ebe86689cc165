//! Denoising, normalisation, R-peak detection and heartbeat segmentation.

mod pipeline;
mod rpeaks;
mod segment;
pub mod wavelet;

pub use pipeline::{clean_patient, clean_signal, segment_patients, CleanPatient, PipelineConfig};
pub use rpeaks::{detect_r_peaks, RPeakConfig};
pub use segment::{resample_linear, segment_beats, HeartbeatSegment};
pub use wavelet::{decompose, reconstruct, Wavelet, WaveletDecomposition};

use crate::signal::EcgSignal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdConfig {
    /// Moving-window length over the coefficients of one level.
    pub window_r: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { window_r: 32 }
    }
}

/// Windowed hard threshold for the detail band at `level` (1 = finest),
/// using the band itself as the magnitude reference.
///
/// The band is cut into consecutive windows of `window_r` coefficients (the
/// last one may be shorter). In each window the threshold is the mean of
/// `|w|` over that window times `2^level`; coefficients strictly below it are
/// zeroed and the rest are kept unchanged.
pub fn adaptive_threshold(w: &[f64], level: usize, cfg: &ThresholdConfig) -> Result<Vec<f64>> {
    adaptive_threshold_with_reference(w, w, level, cfg)
}

/// Same rule, but the window means are taken over `reference`, a band that
/// covers the same time span at a (possibly) finer resolution. Window
/// `[a, b)` of `w` reads `reference[a * f .. b * f)` with
/// `f = len(reference) / len(w)`.
///
/// [`denoise_samples`] passes the finest detail band as the reference for
/// every level, so the threshold tracks the local noise floor.
pub fn adaptive_threshold_with_reference(
    w: &[f64],
    reference: &[f64],
    level: usize,
    cfg: &ThresholdConfig,
) -> Result<Vec<f64>> {
    if cfg.window_r == 0 {
        return Err(Error::InvalidArgument("threshold window must be >= 1".into()));
    }
    if level == 0 {
        return Err(Error::InvalidArgument("levels are numbered from 1".into()));
    }
    if w.is_empty() {
        return Ok(Vec::new());
    }
    if reference.len() < w.len() {
        return Err(Error::Shape(format!(
            "reference band ({}) shorter than thresholded band ({})",
            reference.len(),
            w.len()
        )));
    }
    let scale = 2f64.powi(level as i32);
    let f = reference.len() as f64 / w.len() as f64;
    let mut out = Vec::with_capacity(w.len());
    for (j, chunk) in w.chunks(cfg.window_r).enumerate() {
        let a = j * cfg.window_r;
        let b = a + chunk.len();
        let ra = ((a as f64 * f) as usize).min(reference.len() - 1);
        let rb = ((b as f64 * f) as usize).clamp(ra + 1, reference.len());
        let window = &reference[ra..rb];
        let tau = window.iter().map(|x| x.abs()).sum::<f64>() / window.len() as f64 * scale;
        out.extend(chunk.iter().map(|&x| if x.abs() < tau { 0.0 } else { x }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    pub wavelet: Wavelet,
    pub n_filters: usize,
    pub threshold: ThresholdConfig,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            wavelet: Wavelet::Db4,
            n_filters: 4,
            threshold: ThresholdConfig::default(),
        }
    }
}

impl DenoiseConfig {
    pub fn min_len(&self) -> usize {
        wavelet::min_len_for(self.n_filters, self.wavelet)
    }
}

/// Decomposes `n_filters` levels, thresholds every detail band against the
/// finest band's local magnitude and reconstructs. The approximation band is
/// left untouched. Output length equals input length.
pub fn denoise_samples(x: &[f64], cfg: &DenoiseConfig) -> Result<Vec<f64>> {
    let min = cfg.min_len();
    if x.len() < min {
        return Err(Error::TooShort { len: x.len(), min });
    }
    let mut dec = decompose(x, cfg.wavelet, cfg.n_filters)?;
    let finest = dec.details[0].clone();
    for (i, band) in dec.details.iter_mut().enumerate() {
        *band = adaptive_threshold_with_reference(band, &finest, i + 1, &cfg.threshold)?;
    }
    reconstruct(&dec)
}

pub fn denoise(signal: &EcgSignal, cfg: &DenoiseConfig) -> Result<EcgSignal> {
    Ok(signal.with_samples(denoise_samples(&signal.samples, cfg)?))
}

/// Min-max scaling onto `[0, 1]`. A constant input maps to all zeros.
pub fn normalize(x: &[f64]) -> Vec<f64> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; x.len()];
    }
    x.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
}
