//! Synthetic twelve-lead PQRST generator.
//!
//! Each wave is a Gaussian bump `a * exp(-(t - t_r - offset)^2 / (2 w^2))`
//! placed relative to the beat's R time. A lead is a fixed linear projection of
//! the five wave components (signed gain plus per-wave mix), so every lead of a
//! patient shares beat timing while differing in amplitude, polarity and wave
//! balance.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{EcgSignal, LeadId, PatientId};
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_SAMPLING_RATE_HZ: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    P = 0,
    Q = 1,
    R = 2,
    S = 3,
    T = 4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    pub amplitude_mv: f64,
    /// Gaussian standard deviation in seconds.
    pub width_s: f64,
    /// Signed offset of the wave centre from the R peak, seconds.
    pub offset_s: f64,
}

impl WaveParams {
    const fn new(amplitude_mv: f64, width_s: f64, offset_s: f64) -> Self {
        Self {
            amplitude_mv,
            width_s,
            offset_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBeatParams {
    pub heart_rate_bpm: f64,
    /// Indexed by [`Wave`].
    pub waves: [WaveParams; 5],
    /// Standard deviation of additive white Gaussian noise, mV.
    pub noise_amplitude: f64,
    /// Amplitude of a 0.3 Hz sinusoidal baseline drift, mV.
    pub baseline_wander_amplitude: f64,
    pub rng_seed: u64,
    pub sampling_rate_hz: f64,
}

impl Default for SyntheticBeatParams {
    fn default() -> Self {
        Self {
            heart_rate_bpm: 60.0,
            waves: [
                WaveParams::new(0.15, 0.025, -0.20),
                WaveParams::new(-0.12, 0.010, -0.030),
                WaveParams::new(1.20, 0.012, 0.0),
                WaveParams::new(-0.25, 0.011, 0.033),
                WaveParams::new(0.25, 0.050, 0.30),
            ],
            noise_amplitude: 0.0,
            baseline_wander_amplitude: 0.0,
            rng_seed: 0,
            sampling_rate_hz: DEFAULT_SAMPLING_RATE_HZ,
        }
    }
}

impl SyntheticBeatParams {
    pub fn wave(&self, w: Wave) -> &WaveParams {
        &self.waves[w as usize]
    }

    pub fn beat_period_s(&self) -> f64 {
        60.0 / self.heart_rate_bpm
    }

    pub fn validate(&self) -> Result<()> {
        if !(40.0..=180.0).contains(&self.heart_rate_bpm) {
            return Err(Error::InvalidArgument(format!(
                "heart rate {} bpm outside [40, 180]",
                self.heart_rate_bpm
            )));
        }
        if !(self.sampling_rate_hz > 0.0) {
            return Err(Error::InvalidArgument("sampling rate must be positive".into()));
        }
        if self.waves.iter().any(|w| !(w.width_s > 0.0)) {
            return Err(Error::InvalidArgument("wave widths must be positive".into()));
        }
        let r = self.wave(Wave::R).amplitude_mv.abs();
        let dominant = self
            .waves
            .iter()
            .enumerate()
            .all(|(i, w)| i == Wave::R as usize || w.amplitude_mv.abs() < r);
        if !dominant {
            return Err(Error::InvalidArgument(
                "R amplitude must be strictly the largest in magnitude".into(),
            ));
        }
        if self.noise_amplitude < 0.0 || self.baseline_wander_amplitude < 0.0 {
            return Err(Error::InvalidArgument("noise amplitudes must be non-negative".into()));
        }
        Ok(())
    }
}

/// Signed lead gain and per-wave mix applied on top of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadProjection {
    pub gain: f64,
    pub mix: [f64; 5],
}

// (gain, [P, Q, R, S, T]). R mix is always 1 so R stays the dominant
// deflection in every lead; aVR is the inverted lead.
const BASE_PROJECTION: [(f64, [f64; 5]); 12] = [
    (0.60, [1.0, 0.8, 1.0, 0.8, 1.0]),
    (1.00, [1.0, 1.0, 1.0, 1.0, 1.0]),
    (0.45, [0.6, 1.2, 1.0, 1.2, 0.5]),
    (-0.80, [1.0, 0.9, 1.0, 0.9, 1.0]),
    (0.35, [0.5, 1.0, 1.0, 0.8, 0.6]),
    (0.70, [0.9, 1.1, 1.0, 1.1, 0.8]),
    (0.45, [0.7, 0.3, 1.0, 1.6, -0.4]),
    (0.70, [0.8, 0.5, 1.0, 1.4, 1.1]),
    (0.95, [0.9, 0.8, 1.0, 1.2, 1.1]),
    (1.20, [1.0, 1.0, 1.0, 1.0, 1.1]),
    (1.05, [1.0, 1.2, 1.0, 0.7, 1.0]),
    (0.85, [1.0, 1.2, 1.0, 0.5, 0.9]),
];

/// The projection used for `lead`, jittered by up to ±10% per coefficient
/// from `seed`.
pub fn lead_projection(lead: LeadId, seed: u64) -> LeadProjection {
    let (gain, mix) = BASE_PROJECTION[lead.index()];
    let mut r = rng::seeded(seed, 0x1EAD_0000 + lead.code() as u64);
    let mut jitter = || rng::uniform(&mut r, 0.9, 1.1);
    let gain = gain * jitter();
    let mut out = mix.map(|m| m * jitter());
    out[Wave::R as usize] = 1.0;
    LeadProjection { gain, mix: out }
}

#[derive(Debug, Clone)]
pub struct SyntheticPatient {
    pub signals: BTreeMap<LeadId, EcgSignal>,
    /// Ground-truth R-peak sample indices, shared by all leads.
    pub r_peaks: Vec<usize>,
}

/// Generates twelve simultaneous leads of `duration_s` seconds.
///
/// Beats are centred at `(k + 1/2) * period`, so 60 bpm over 15 s gives 15
/// beats; a beat whose R wave would be cut off by the end of the record is
/// left out. Output is a pure function of `(params, duration_s)`.
pub fn synth_patient(
    params: &SyntheticBeatParams,
    duration_s: f64,
    patient_id: PatientId,
) -> Result<SyntheticPatient> {
    params.validate()?;
    let period = params.beat_period_s();
    if !(duration_s.is_finite() && duration_s >= period) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_s} s shorter than one beat period ({period:.3} s)"
        )));
    }
    let fs = params.sampling_rate_hz;
    let n = (duration_s * fs).round() as usize;
    // a beat counts only if its whole R wave (three widths) is recorded
    let r_margin = 3.0 * params.wave(Wave::R).width_s;
    let mut beat_times = Vec::new();
    let mut k = 0usize;
    loop {
        let t = (k as f64 + 0.5) * period;
        if t + r_margin >= duration_s || (t * fs).round() as usize >= n {
            break;
        }
        beat_times.push(t);
        k += 1;
    }
    let r_peaks = beat_times.iter().map(|t| (t * fs).round() as usize).collect();

    // components[w][i]: wave w summed over all beats at sample i.
    let mut components = vec![vec![0.0; n]; 5];
    for (w, comp) in components.iter_mut().enumerate() {
        let wp = params.waves[w];
        let denom = 2.0 * wp.width_s * wp.width_s;
        for (i, c) in comp.iter_mut().enumerate() {
            let t = i as f64 / fs;
            *c = beat_times
                .iter()
                .map(|tb| {
                    let d = t - tb - wp.offset_s;
                    wp.amplitude_mv * (-d * d / denom).exp()
                })
                .sum();
        }
    }

    let mut noise_rng = rng::seeded(params.rng_seed, 2);
    let mut phase_rng = rng::seeded(params.rng_seed, 3);
    let mut signals = BTreeMap::new();
    for lead in LeadId::ALL {
        let proj = lead_projection(lead, params.rng_seed);
        let phase = rng::uniform(&mut phase_rng, 0.0, std::f64::consts::TAU);
        let samples = (0..n)
            .map(|i| {
                let clean: f64 = (0..5).map(|w| proj.mix[w] * components[w][i]).sum::<f64>() * proj.gain;
                let mut x = clean;
                if params.baseline_wander_amplitude > 0.0 {
                    let t = i as f64 / fs;
                    x += params.baseline_wander_amplitude
                        * (std::f64::consts::TAU * 0.3 * t + phase).sin();
                }
                if params.noise_amplitude > 0.0 {
                    let z: f64 = noise_rng.sample(StandardNormal);
                    x += params.noise_amplitude * z;
                }
                x
            })
            .collect();
        signals.insert(lead, EcgSignal::new(lead, samples, fs, patient_id.clone())?);
    }
    Ok(SyntheticPatient { signals, r_peaks })
}

/// Draws physiologically plausible per-patient morphology from `seed`.
pub fn random_patient_params(
    seed: u64,
    patient_index: u64,
    noise_amplitude: f64,
    baseline_wander_amplitude: f64,
    sampling_rate_hz: f64,
) -> SyntheticBeatParams {
    let mut r = rng::seeded(seed, 0xAB00_0000 + patient_index);
    let mut u = |lo: f64, hi: f64| rng::uniform(&mut r, lo, hi);
    let heart_rate_bpm = u(60.0, 80.0);
    let waves = [
        WaveParams::new(u(0.08, 0.25), u(0.020, 0.030), u(-0.22, -0.16)),
        WaveParams::new(u(-0.20, -0.05), u(0.008, 0.012), u(-0.035, -0.025)),
        WaveParams::new(u(1.0, 1.5), u(0.010, 0.014), 0.0),
        WaveParams::new(u(-0.40, -0.10), u(0.008, 0.014), u(0.025, 0.040)),
        WaveParams::new(u(0.10, 0.35), u(0.040, 0.060), u(0.25, 0.35)),
    ];
    SyntheticBeatParams {
        heart_rate_bpm,
        waves,
        noise_amplitude,
        baseline_wander_amplitude,
        rng_seed: rng::mix(seed, patient_index),
        sampling_rate_hz,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_patient(seed: u64, noise: f64) -> SyntheticPatient {
        let p = SyntheticBeatParams {
            rng_seed: seed,
            noise_amplitude: noise,
            ..Default::default()
        };
        synth_patient(&p, 15.0, "p0".into()).unwrap()
    }

    #[test]
    fn sixty_bpm_fifteen_seconds() {
        let pat = default_patient(7, 0.0);
        assert_eq!(pat.signals.len(), 12);
        assert!(pat.signals.values().all(|s| s.len() == 7500));
        assert_eq!(pat.r_peaks.len(), 15);
        assert_eq!(pat.r_peaks[0], 250);
        assert_eq!(pat.r_peaks[14], 7250);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = default_patient(7, 0.05);
        let b = default_patient(7, 0.05);
        for lead in LeadId::ALL {
            let (x, y) = (&a.signals[&lead].samples, &b.signals[&lead].samples);
            assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
        let c = default_patient(8, 0.05);
        assert_ne!(a.signals[&LeadId::II].samples, c.signals[&LeadId::II].samples);
    }

    #[test]
    fn zero_noise_equals_template_sum() {
        let params = SyntheticBeatParams {
            rng_seed: 3,
            ..Default::default()
        };
        let pat = synth_patient(&params, 4.0, "p".into()).unwrap();
        let period = params.beat_period_s();
        for lead in [LeadId::II, LeadId::AVR, LeadId::V1] {
            let proj = lead_projection(lead, 3);
            let sig = &pat.signals[&lead];
            for i in (0..sig.len()).step_by(7) {
                let t = i as f64 / 500.0;
                let mut expect = 0.0;
                for k in 0..4 {
                    let tb = (k as f64 + 0.5) * period;
                    for w in 0..5 {
                        let wp = params.waves[w];
                        let d = t - tb - wp.offset_s;
                        expect += proj.gain
                            * proj.mix[w]
                            * wp.amplitude_mv
                            * (-d * d / (2.0 * wp.width_s * wp.width_s)).exp();
                    }
                }
                assert!((sig.samples[i] - expect).abs() < 1e-12, "{lead} @ {i}");
            }
        }
    }

    #[test]
    fn one_dominant_maximum_per_beat() {
        let params = random_patient_params(5, 1, 0.0, 0.0, 500.0);
        let pat = synth_patient(&params, 15.0, "p".into()).unwrap();
        let period = (params.beat_period_s() * 500.0) as usize;
        for (lead, sig) in &pat.signals {
            let proj = lead_projection(*lead, params.rng_seed);
            let r_amp = (proj.gain * params.wave(Wave::R).amplitude_mv).abs();
            let oriented: Vec<f64> = sig.samples.iter().map(|x| x * proj.gain.signum()).collect();
            let maxima: Vec<usize> = (1..oriented.len() - 1)
                .filter(|&i| {
                    oriented[i] > oriented[i - 1]
                        && oriented[i] >= oriented[i + 1]
                        && oriented[i] > 0.8 * r_amp
                })
                .collect();
            assert_eq!(maxima.len(), pat.r_peaks.len(), "lead {lead}");
            for (m, r) in maxima.iter().zip(&pat.r_peaks) {
                assert!(m.abs_diff(*r) <= 1, "lead {lead}: {m} vs {r}");
                assert!(m.abs_diff(*r) < period / 2);
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let p = SyntheticBeatParams { heart_rate_bpm: 200.0, ..Default::default() };
        assert!(synth_patient(&p, 15.0, "p".into()).is_err());
        let p = SyntheticBeatParams::default();
        assert!(synth_patient(&p, 0.0, "p".into()).is_err());
        assert!(synth_patient(&p, -1.0, "p".into()).is_err());
        assert!(synth_patient(&p, 0.5, "p".into()).is_err());
        let mut p = SyntheticBeatParams::default();
        p.waves[Wave::T as usize].amplitude_mv = 1.5;
        assert!(p.validate().is_err());
        let mut p = SyntheticBeatParams::default();
        p.waves[0].width_s = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn random_params_are_valid() {
        for i in 0..200 {
            random_patient_params(9, i, 0.01, 0.0, 500.0).validate().unwrap();
        }
    }
}
