//! Raw multi-lead recordings on disk.
//!
//! ```text
//! manifest.csv                 patient,lead,n_samples,sampling_rate_hz,file,sha256
//! signals/<patient>/<lead>.ecgs
//! rpeaks/<patient>.csv         r_peak (ground truth, optional)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::preprocess::{segment_patients, HeartbeatSegment, PipelineConfig};
use crate::signal::{decode_signal, encode_signal, random_patient_params, synth_patient, DEFAULT_SAMPLING_RATE_HZ};
use crate::{fsutil, parallel, EcgSignal, Error, LeadId, PatientId, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub patients: usize,
    pub seed: u64,
    pub duration_s: f64,
    /// White-noise standard deviation, mV.
    pub noise_amplitude: f64,
    /// Baseline drift amplitude, mV.
    pub baseline_wander_amplitude: f64,
    pub sampling_rate_hz: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            patients: 20,
            seed: 0,
            duration_s: 15.0,
            noise_amplitude: 0.02,
            baseline_wander_amplitude: 0.0,
            sampling_rate_hz: DEFAULT_SAMPLING_RATE_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawPatient {
    pub id: PatientId,
    pub signals: BTreeMap<LeadId, EcgSignal>,
    /// Known R-peak sample indices, empty when unknown.
    pub r_peaks: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawDataset {
    pub patients: Vec<RawPatient>,
}

impl RawDataset {
    /// Synthetic patients `p0000..`, with samples already rounded to the f32
    /// precision of the signal files.
    pub fn synthetic(cfg: &SynthConfig) -> Result<Self> {
        if cfg.patients == 0 {
            return Err(Error::InvalidArgument("at least one patient is required".into()));
        }
        let make = |i: usize| -> Result<RawPatient> {
            let params = random_patient_params(
                cfg.seed,
                i as u64,
                cfg.noise_amplitude,
                cfg.baseline_wander_amplitude,
                cfg.sampling_rate_hz,
            );
            let id = PatientId::numbered(i);
            let sp = synth_patient(&params, cfg.duration_s, id.clone())?;
            let signals = sp
                .signals
                .into_iter()
                .map(|(l, s)| {
                    let q = s.samples.iter().map(|&v| v as f32 as f64).collect();
                    (l, s.with_samples(q))
                })
                .collect();
            Ok(RawPatient { id, signals, r_peaks: sp.r_peaks })
        };
        let patients: Vec<Result<RawPatient>> = parallel::run(|| (0..cfg.patients).into_par_iter().map(make).collect())?;
        Ok(Self { patients: patients.into_iter().collect::<Result<_>>()? })
    }

    /// Runs the preprocessing pipeline over every patient.
    pub fn segments(&self, cfg: &PipelineConfig) -> Result<(Vec<HeartbeatSegment>, usize)> {
        let refs: Vec<(PatientId, &BTreeMap<LeadId, EcgSignal>)> =
            self.patients.iter().map(|p| (p.id.clone(), &p.signals)).collect();
        segment_patients(&refs, cfg)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut manifest = String::from("patient,lead,n_samples,sampling_rate_hz,file,sha256\n");
        for p in &self.patients {
            for (lead, sig) in &p.signals {
                let rel = format!("signals/{}/{lead}.ecgs", p.id);
                let bytes = encode_signal(sig);
                fsutil::atomic_write(&dir.join(&rel), &bytes)?;
                manifest.push_str(&format!(
                    "{},{lead},{},{},{rel},{}\n",
                    p.id,
                    sig.len(),
                    sig.sampling_rate_hz,
                    fsutil::sha256_hex(&bytes)
                ));
            }
            if !p.r_peaks.is_empty() {
                let mut text = String::from("r_peak\n");
                for r in &p.r_peaks {
                    text.push_str(&format!("{r}\n"));
                }
                fsutil::atomic_write(&dir.join(format!("rpeaks/{}.csv", p.id)), text.as_bytes())?;
            }
        }
        fsutil::atomic_write(&dir.join("manifest.csv"), manifest.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("manifest.csv");
        let text = fsutil::read_to_string(&manifest_path)?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut by_patient: BTreeMap<PatientId, BTreeMap<LeadId, EcgSignal>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::format(&manifest_path, e.to_string()))?;
            if rec.len() != 6 {
                return Err(Error::format(&manifest_path, "expected 6 columns"));
            }
            let id = PatientId(rec[0].to_string());
            let lead: LeadId = rec[1]
                .parse()
                .map_err(|_| Error::format(&manifest_path, format!("bad lead {:?}", &rec[1])))?;
            let path = dir.join(&rec[4]);
            let bytes = fsutil::read(&path)?;
            if fsutil::sha256_hex(&bytes) != rec[5] {
                return Err(Error::Checksum(path));
            }
            let sig = decode_signal(&bytes, id.clone(), &path)?;
            if sig.lead != lead {
                return Err(Error::format(&path, "lead disagrees with manifest"));
            }
            by_patient.entry(id).or_default().insert(lead, sig);
        }
        let mut patients = Vec::new();
        for (id, signals) in by_patient {
            let peaks_path = dir.join(format!("rpeaks/{id}.csv"));
            let r_peaks = if peaks_path.exists() {
                fsutil::read_to_string(&peaks_path)?
                    .lines()
                    .skip(1)
                    .map(|l| l.trim().parse().map_err(|_| Error::format(&peaks_path, format!("bad index {l:?}"))))
                    .collect::<Result<Vec<usize>>>()?
            } else {
                Vec::new()
            };
            patients.push(RawPatient { id, signals, r_peaks });
        }
        if patients.is_empty() {
            return Err(Error::Empty("raw dataset manifest"));
        }
        Ok(Self { patients })
    }
}
