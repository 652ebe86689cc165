//! Segment corpus directory.
//!
//! ```text
//! corpus.cfg                        key = value settings, including version
//! manifest.csv                      patient,lead,beat,valid_len,file,sha256
//! segments/<patient>/<lead>_<beat>.bin
//! splits/<seed>/{train,val,test}.csv  pair_id,patient,beat,source,target
//! ```
//!
//! Segment files use the binary signal format, so samples are held as `f32`;
//! [`Corpus::build`] rounds them accordingly so a saved corpus loads back
//! bit-identical.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use super::{build_pairs, split, split_by_patient, BeatPair, PairRef, SplitFractions, SplitName, Splits};
use crate::preprocess::HeartbeatSegment;
use crate::signal::{decode_signal, encode_signal};
use crate::{fsutil, Error, LeadId, PatientId, Result};

pub const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusInfo {
    pub target_len: usize,
    pub sampling_rate_hz: f64,
    pub split_seed: u64,
    pub fractions: SplitFractions,
    pub split_by_patient: bool,
}

impl Default for CorpusInfo {
    fn default() -> Self {
        Self {
            target_len: 0,
            sampling_rate_hz: 125.0,
            split_seed: 0,
            fractions: SplitFractions::default(),
            split_by_patient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub info: CorpusInfo,
    segments: Vec<HeartbeatSegment>,
    index: BTreeMap<(PatientId, usize, LeadId), usize>,
    pairs: Vec<PairRef>,
    splits: Splits,
}

fn quantize(s: &HeartbeatSegment) -> Result<HeartbeatSegment> {
    let valid: Vec<f64> = s.valid().iter().map(|&v| v as f32 as f64).collect();
    HeartbeatSegment::new(s.patient_id.clone(), s.lead, s.beat_index, &valid, s.target_len(), s.r_peak_offset)
}

fn segment_file(s: &HeartbeatSegment) -> String {
    format!("segments/{}/{}_{}.bin", s.patient_id, s.lead, s.beat_index)
}

impl Corpus {
    /// Sorts and quantizes the segments, then pairs and splits them.
    pub fn build(info: CorpusInfo, segments: Vec<HeartbeatSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Empty("segment corpus"));
        }
        if let Some(s) = segments.iter().find(|s| s.target_len() != info.target_len) {
            return Err(Error::Shape(format!(
                "segment {} {} #{} has length {}, corpus uses {}",
                s.patient_id,
                s.lead,
                s.beat_index,
                s.target_len(),
                info.target_len
            )));
        }
        let mut segments = segments.iter().map(quantize).collect::<Result<Vec<_>>>()?;
        segments.sort_by(|a, b| (&a.patient_id, a.beat_index, a.lead).cmp(&(&b.patient_id, b.beat_index, b.lead)));
        let pairs = build_pairs(&segments)?;
        let splits = if info.split_by_patient {
            split_by_patient(&pairs, &info.fractions, info.split_seed)?
        } else {
            split(&pairs, &info.fractions, info.split_seed)?
        };
        Ok(Self::assemble(info, segments, pairs, splits))
    }

    fn assemble(info: CorpusInfo, segments: Vec<HeartbeatSegment>, pairs: Vec<PairRef>, splits: Splits) -> Self {
        let index = segments
            .iter()
            .enumerate()
            .map(|(k, s)| ((s.patient_id.clone(), s.beat_index, s.lead), k))
            .collect();
        Self { info, segments, index, pairs, splits }
    }

    pub fn segments(&self) -> &[HeartbeatSegment] {
        &self.segments
    }

    pub fn segment(&self, patient: &PatientId, beat: usize, lead: LeadId) -> Option<&HeartbeatSegment> {
        self.index.get(&(patient.clone(), beat, lead)).map(|&k| &self.segments[k])
    }

    pub fn pairs(&self) -> &[PairRef] {
        &self.pairs
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn split(&self, name: SplitName) -> &[PairRef] {
        self.splits.get(name)
    }

    pub fn patients(&self) -> Vec<PatientId> {
        let mut p: Vec<PatientId> = self.segments.iter().map(|s| s.patient_id.clone()).collect();
        p.dedup();
        p
    }

    pub fn resolve(&self, pair: &PairRef) -> Result<BeatPair<'_>> {
        let get = |lead| {
            self.segment(&pair.patient, pair.beat, lead).ok_or_else(|| {
                Error::InvalidArgument(format!("pair {} refers to a missing segment", pair.id))
            })
        };
        Ok(BeatPair { id: pair.id, source: get(pair.source)?, target: get(pair.target)? })
    }

    fn config_text(&self) -> String {
        let i = &self.info;
        let f = &i.fractions;
        format!(
            "version = {CORPUS_VERSION}\ntarget_len = {}\nsampling_rate_hz = {}\nsplit_seed = {}\n\
             train_fraction = {}\nval_fraction = {}\ntest_fraction = {}\nsplit_by_patient = {}\n\
             n_segments = {}\nn_pairs = {}\n",
            i.target_len,
            i.sampling_rate_hz,
            i.split_seed,
            f.train,
            f.val,
            f.test,
            i.split_by_patient,
            self.segments.len(),
            self.pairs.len()
        )
    }

    /// Writes the corpus under `dir`, one file at a time via temp-and-rename.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut manifest = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::format(dir.join("manifest.csv"), e.to_string());
        manifest
            .write_record(["patient", "lead", "beat", "valid_len", "file", "sha256"])
            .map_err(csv_err)?;
        for s in &self.segments {
            let rel = segment_file(s);
            let bytes = encode_signal(&s.to_signal(self.info.sampling_rate_hz)?);
            fsutil::atomic_write(&dir.join(&rel), &bytes)?;
            manifest
                .write_record([
                    s.patient_id.to_string(),
                    s.lead.to_string(),
                    s.beat_index.to_string(),
                    s.valid_len().to_string(),
                    rel,
                    fsutil::sha256_hex(&bytes),
                ])
                .map_err(csv_err)?;
        }
        let manifest = manifest.into_inner().map_err(|e| Error::format(dir.join("manifest.csv"), e.to_string()))?;
        fsutil::atomic_write(&dir.join("manifest.csv"), &manifest)?;
        let split_dir = dir.join("splits").join(self.info.split_seed.to_string());
        for name in SplitName::ALL {
            let mut text = String::from("pair_id,patient,beat,source,target\n");
            for p in self.splits.get(name) {
                text.push_str(&format!("{},{},{},{},{}\n", p.id, p.patient, p.beat, p.source, p.target));
            }
            fsutil::atomic_write(&split_dir.join(format!("{}.csv", name.as_str())), text.as_bytes())?;
        }
        fsutil::atomic_write(&dir.join("corpus.cfg"), self.config_text().as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let cfg_path = dir.join("corpus.cfg");
        let cfg = fsutil::parse_kv(&fsutil::read_to_string(&cfg_path)?, &cfg_path)?;
        let get = |k: &str| cfg.get(k).ok_or_else(|| Error::format(&cfg_path, format!("missing key {k}")));
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::format(&cfg_path, format!("bad value for {k}")))
        };
        let version = get("version")?.parse::<u32>().map_err(|_| Error::format(&cfg_path, "bad version"))?;
        if version != CORPUS_VERSION {
            return Err(Error::VersionSkew { path: cfg_path, found: version, expected: CORPUS_VERSION });
        }
        let info = CorpusInfo {
            target_len: num("target_len")? as usize,
            sampling_rate_hz: num("sampling_rate_hz")?,
            split_seed: get("split_seed")?.parse().map_err(|_| Error::format(&cfg_path, "bad split_seed"))?,
            fractions: SplitFractions {
                train: num("train_fraction")?,
                val: num("val_fraction")?,
                test: num("test_fraction")?,
            },
            split_by_patient: get("split_by_patient")? == "true",
        };

        let manifest_path = dir.join("manifest.csv");
        let text = fsutil::read_to_string(&manifest_path)?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let bad = |m: String| Error::format(&manifest_path, m);
        let mut segments = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 6 {
                return Err(bad(format!("expected 6 columns, found {}", rec.len())));
            }
            let patient = PatientId(rec[0].to_string());
            let lead: LeadId = rec[1].parse().map_err(|_| bad(format!("bad lead {:?}", &rec[1])))?;
            let beat: usize = rec[2].parse().map_err(|_| bad(format!("bad beat {:?}", &rec[2])))?;
            let valid_len: usize = rec[3].parse().map_err(|_| bad(format!("bad valid_len {:?}", &rec[3])))?;
            let path: PathBuf = dir.join(&rec[4]);
            let bytes = fsutil::read(&path)?;
            if fsutil::sha256_hex(&bytes) != rec[5] {
                return Err(Error::Checksum(path));
            }
            let sig = decode_signal(&bytes, patient.clone(), &path)?;
            if sig.lead != lead || sig.len() != info.target_len || valid_len > sig.len() {
                return Err(Error::format(&path, "segment header disagrees with manifest"));
            }
            if sig.samples[valid_len..].iter().any(|&v| v != 0.0) {
                return Err(Error::format(&path, "non-zero padding"));
            }
            segments.push(HeartbeatSegment::new(patient, lead, beat, &sig.samples[..valid_len], info.target_len, 0)?);
        }
        if segments.len() as f64 != num("n_segments")? {
            return Err(Error::format(&manifest_path, "segment count disagrees with corpus.cfg"));
        }
        let pairs = build_pairs(&segments)?;
        if pairs.len() as f64 != num("n_pairs")? {
            return Err(Error::format(&cfg_path, "pair count disagrees with manifest"));
        }
        let splits = load_splits(&dir.join("splits").join(info.split_seed.to_string()), &pairs)?;
        Ok(Self::assemble(info, segments, pairs, splits))
    }
}

fn load_splits(dir: &Path, pairs: &[PairRef]) -> Result<Splits> {
    let mut out = Splits::default();
    let mut seen = HashSet::new();
    for name in SplitName::ALL {
        let path = dir.join(format!("{}.csv", name.as_str()));
        let text = fsutil::read_to_string(&path)?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut list = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::format(&path, e.to_string()))?;
            let id: usize = rec[0].parse().map_err(|_| Error::format(&path, "bad pair_id"))?;
            let p = pairs.get(id).ok_or_else(|| Error::format(&path, format!("unknown pair {id}")))?;
            let row = [p.patient.to_string(), p.beat.to_string(), p.source.to_string(), p.target.to_string()];
            if rec.len() != 5 || (1..5).any(|k| rec[k] != row[k - 1]) || !seen.insert(id) {
                return Err(Error::format(&path, format!("pair {id} does not match the manifest")));
            }
            list.push(p.clone());
        }
        match name {
            SplitName::Train => out.train = list,
            SplitName::Val => out.val = list,
            SplitName::Test => out.test = list,
        }
    }
    if seen.len() != pairs.len() {
        return Err(Error::format(dir, "splits do not cover every pair"));
    }
    Ok(out)
}
