//! Beat pairing, splitting and on-disk corpora.

mod corpus;
mod raw;

pub use corpus::{Corpus, CorpusInfo, CORPUS_VERSION};
pub use raw::{RawDataset, RawPatient, SynthConfig};

use std::collections::BTreeMap;

use crate::preprocess::HeartbeatSegment;
use crate::{rng, Error, LeadId, PatientId, Result};

/// Ordered lead pairs per beat: 12 sources times 11 targets.
pub const PAIRS_PER_BEAT: usize = 132;
const SPLIT_TAG: u64 = 0x5350_4c54;

/// Identity of one (source lead, target lead) pair within a beat.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairRef {
    pub id: usize,
    pub patient: PatientId,
    pub beat: usize,
    pub source: LeadId,
    pub target: LeadId,
}

/// A pair resolved against its segments.
#[derive(Debug, Clone, Copy)]
pub struct BeatPair<'a> {
    pub id: usize,
    pub source: &'a HeartbeatSegment,
    pub target: &'a HeartbeatSegment,
}

/// Every ordered lead pair of every complete beat, ordered by patient, beat,
/// source, target. Ids are positions in that order.
pub fn build_pairs(segments: &[HeartbeatSegment]) -> Result<Vec<PairRef>> {
    let mut beats: BTreeMap<(&PatientId, usize), [bool; 12]> = BTreeMap::new();
    for s in segments {
        let seen = beats.entry((&s.patient_id, s.beat_index)).or_default();
        if seen[s.lead.index()] {
            return Err(Error::InvalidArgument(format!(
                "duplicate segment for patient {}, beat {}, lead {}",
                s.patient_id, s.beat_index, s.lead
            )));
        }
        seen[s.lead.index()] = true;
    }
    let mut pairs = Vec::with_capacity(beats.len() * PAIRS_PER_BEAT);
    for ((patient, beat), seen) in beats {
        let missing: Vec<LeadId> = LeadId::ALL.into_iter().filter(|l| !seen[l.index()]).collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteBeat { patient: patient.to_string(), beat, missing });
        }
        for source in LeadId::ALL {
            for target in LeadId::ALL {
                if source != target {
                    pairs.push(PairRef { id: pairs.len(), patient: patient.clone(), beat, source, target });
                }
            }
        }
    }
    Ok(pairs)
}

/// Pair count without materialising anything.
pub fn pair_count(n_patients: usize, beats_per_patient: usize) -> usize {
    n_patients * beats_per_patient * PAIRS_PER_BEAT
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.8, val: 0.1, test: 0.1 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|f| !(*f > 0.0)) || (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions {all:?} must be positive and sum to 1"
            )));
        }
        Ok(())
    }

    /// Validation and test sizes are `floor(n * fraction)`; the remainder
    /// goes to training.
    pub fn counts(&self, n: usize) -> Result<SplitCounts> {
        self.validate()?;
        // guard against products like 0.29 * 100 = 28.999999999999996
        let part = |f: f64| (n as f64 * f + 1e-9).floor() as usize;
        let (val, test) = (part(self.val), part(self.test));
        Ok(SplitCounts { train: n - val - test, val, test })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Val, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<PairRef>,
    pub val: Vec<PairRef>,
    pub test: Vec<PairRef>,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &[PairRef] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }

    pub fn counts(&self) -> SplitCounts {
        SplitCounts { train: self.train.len(), val: self.val.len(), test: self.test.len() }
    }
}

/// Seeded Fisher–Yates shuffle of the pairs, then cut into train, val, test.
pub fn split(pairs: &[PairRef], fractions: &SplitFractions, seed: u64) -> Result<Splits> {
    let c = fractions.counts(pairs.len())?;
    let mut order = pairs.to_vec();
    rng::shuffle(&mut rng::seeded(seed, SPLIT_TAG), &mut order);
    let test = order.split_off(c.train + c.val);
    let val = order.split_off(c.train);
    Ok(Splits { train: order, val, test })
}

/// Patients, not pairs, are shuffled and allotted, so no patient appears in
/// more than one split. Pair order within a split follows the input order.
pub fn split_by_patient(pairs: &[PairRef], fractions: &SplitFractions, seed: u64) -> Result<Splits> {
    let mut patients: Vec<&PatientId> = pairs.iter().map(|p| &p.patient).collect();
    patients.sort();
    patients.dedup();
    let c = fractions.counts(patients.len())?;
    rng::shuffle(&mut rng::seeded(seed, SPLIT_TAG + 1), &mut patients);
    let mut which = BTreeMap::new();
    for (k, p) in patients.into_iter().enumerate() {
        let name = if k < c.train {
            SplitName::Train
        } else if k < c.train + c.val {
            SplitName::Val
        } else {
            SplitName::Test
        };
        which.insert(p.clone(), name);
    }
    let mut out = Splits::default();
    for p in pairs {
        match which[&p.patient] {
            SplitName::Train => out.train.push(p.clone()),
            SplitName::Val => out.val.push(p.clone()),
            SplitName::Test => out.test.push(p.clone()),
        }
    }
    Ok(out)
}
