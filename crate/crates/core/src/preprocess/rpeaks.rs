//! Amplitude + refractory R-peak detector.

use std::collections::VecDeque;

use crate::signal::EcgSignal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RPeakConfig {
    /// Fraction of the local (rolling) maximum a peak must exceed.
    pub threshold_ratio: f64,
    /// Length of the centred rolling-maximum window, seconds.
    pub window_s: f64,
    /// Minimum spacing between accepted peaks, seconds.
    pub refractory_s: f64,
}

impl Default for RPeakConfig {
    fn default() -> Self {
        Self {
            threshold_ratio: 0.6,
            window_s: 2.0,
            refractory_s: 0.25,
        }
    }
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Centred sliding-window maximum, window `[i - half, i + half]`.
fn rolling_max(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&j| x[j] <= x[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(half);
        while dq.front().is_some_and(|&j| j < lo) {
            dq.pop_front();
        }
        *o = x[dq[0]];
    }
    out
}

/// Returns ascending sample indices of detected R peaks.
///
/// The signal is centred on its median and flipped if its dominant deflection
/// is negative (inverted leads such as aVR). A sample is a candidate when it
/// is a local maximum above `threshold_ratio` times the rolling maximum of the
/// centred signal. Candidates are then accepted greedily from the tallest
/// down, rejecting any within the refractory period of an accepted peak.
pub fn detect_r_peaks(signal: &EcgSignal, cfg: &RPeakConfig) -> Vec<usize> {
    let x = &signal.samples;
    let n = x.len();
    if n < 3 {
        return Vec::new();
    }
    let m = median(x);
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let flip = (m - lo) > (hi - m);
    let y: Vec<f64> = x.iter().map(|&v| if flip { m - v } else { v - m }).collect();

    let fs = signal.sampling_rate_hz;
    let half = ((cfg.window_s * fs) / 2.0).round().max(1.0) as usize;
    let refractory = (cfg.refractory_s * fs).round() as usize;
    let env = rolling_max(&y, half);

    let mut candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| {
            y[i] > 0.0 && y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > cfg.threshold_ratio * env[i]
        })
        .collect();
    candidates.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));

    let mut accepted: Vec<usize> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|&a| a.abs_diff(c) >= refractory) {
            accepted.push(c);
        }
    }
    accepted.sort_unstable();
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{random_patient_params, synth_patient, LeadId};

    #[test]
    fn rolling_max_matches_naive() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        for half in [1, 3, 10, 60] {
            let fast = rolling_max(&x, half);
            for i in 0..x.len() {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(x.len() - 1);
                let naive = x[lo..=hi].iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(fast[i], naive);
            }
        }
    }

    #[test]
    fn flat_signal_has_no_peaks() {
        let s = EcgSignal::new(LeadId::II, vec![0.0; 1000], 500.0, "p".into()).unwrap();
        assert!(detect_r_peaks(&s, &RPeakConfig::default()).is_empty());
    }

    #[test]
    fn finds_ground_truth_on_every_lead() {
        for pi in 0..5 {
            let params = random_patient_params(3, pi, 0.0, 0.0, 500.0);
            let pat = synth_patient(&params, 15.0, "p".into()).unwrap();
            for lead in LeadId::ALL {
                let found = detect_r_peaks(&pat.signals[&lead], &RPeakConfig::default());
                assert_eq!(found.len(), pat.r_peaks.len(), "patient {pi} lead {lead}");
                for (f, t) in found.iter().zip(&pat.r_peaks) {
                    assert!(f.abs_diff(*t) <= 3);
                }
            }
        }
    }

    #[test]
    fn sixty_bpm_gives_fifteen() {
        let params = crate::signal::SyntheticBeatParams::default();
        let pat = synth_patient(&params, 15.0, "p".into()).unwrap();
        assert_eq!(detect_r_peaks(&pat.signals[&LeadId::II], &RPeakConfig::default()).len(), 15);
    }
}
