use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::model::Generator;
use super::select::{EpochSelection, ModelKey};
use super::train::{checkpoint_path, pairs_for, Mode, ModelInfo};
use crate::data::{Corpus, PairRef};
use crate::metrics::{fd_score, FdScore, PointMetric};
use crate::preprocess::HeartbeatSegment;
use crate::{parallel, rng, Error, LeadId, PatientId, Result};

/// Epoch-selected generators, keyed like the training run.
pub struct ModelSet {
    pub info: ModelInfo,
    pub selection: EpochSelection,
    generators: BTreeMap<ModelKey, Generator>,
}

impl ModelSet {
    pub fn new(info: ModelInfo, selection: EpochSelection, generators: BTreeMap<ModelKey, Generator>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Empty("model set"));
        }
        Ok(Self { info, selection, generators })
    }

    /// Loads `selection.csv` and the selected `gen_<lead>_<epoch>.ecgw`
    /// checkpoints from a training directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let sel_path = dir.join("selection.csv");
        if !sel_path.exists() {
            return Err(Error::MissingModel(format!(
                "expected {} and gen_<lead>_<epoch>.ecgw checkpoints in {}",
                sel_path.display(),
                dir.display()
            )));
        }
        let info = ModelInfo::load(dir).map_err(|e| match e {
            Error::MissingFile(p) => Error::MissingModel(format!("expected {}", p.display())),
            e => e,
        })?;
        let selection = EpochSelection::load(&sel_path)?;
        let mut generators = BTreeMap::new();
        for (&key, choice) in &selection.choices {
            let path = checkpoint_path(dir, "gen", key, choice.epoch);
            if !path.exists() {
                return Err(Error::MissingModel(format!("expected checkpoint {}", path.display())));
            }
            generators.insert(key, Generator::load(&path)?);
        }
        Self::new(info, selection, generators)
    }

    pub fn mode(&self) -> Mode {
        self.info.mode
    }

    pub fn key_for(&self, target: LeadId) -> Result<ModelKey> {
        [ModelKey::All, ModelKey::Lead(target)]
            .into_iter()
            .find(|k| self.generators.contains_key(k))
            .ok_or_else(|| Error::MissingModel(format!("no generator for target lead {target}")))
    }

    pub fn generator_for(&mut self, target: LeadId) -> Result<&mut Generator> {
        let key = self.key_for(target)?;
        Ok(self.generators.get_mut(&key).expect("key present"))
    }
}

/// All twelve leads from one beat: the input lead unchanged, every other lead
/// generated.
pub fn generate_full_set(models: &mut ModelSet, input: &HeartbeatSegment) -> Result<BTreeMap<LeadId, Vec<f64>>> {
    let targets: Vec<LeadId> = LeadId::ALL.into_iter().filter(|&l| l != input.lead).collect();
    for &t in &targets {
        models.key_for(t)?;
    }
    let mut out = BTreeMap::new();
    out.insert(input.lead, input.samples().to_vec());
    for t in targets {
        let g = models.generator_for(t)?;
        let beat = g.generate(&[input.samples()], &[input.lead])?.remove(0);
        out.insert(t, beat);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPair {
    pub pair: PairRef,
    pub score: FdScore,
    /// Full-length generated beat.
    pub generated: Vec<f64>,
}

/// Generates the target of every pair and scores it against the true beat's
/// unpadded prefix. Results follow the input order.
pub fn evaluate_split(
    models: &mut ModelSet,
    corpus: &Corpus,
    pairs: &[PairRef],
    metric: PointMetric,
    batch_size: usize,
) -> Result<Vec<EvaluatedPair>> {
    if pairs.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    for p in pairs {
        models.key_for(p.target)?;
    }
    let batch_size = batch_size.max(1);
    let jobs: Vec<(ModelKey, &mut Generator)> = models.generators.iter_mut().map(|(k, g)| (*k, g)).collect();
    let results: Vec<Result<Vec<EvaluatedPair>>> = parallel::run(|| {
        jobs.into_par_iter()
            .map(|(key, g)| {
                let mine = pairs_for(pairs, key);
                let mut out = Vec::with_capacity(mine.len());
                for chunk in mine.chunks(batch_size) {
                    let resolved = chunk.iter().map(|p| corpus.resolve(p)).collect::<Result<Vec<_>>>()?;
                    let src: Vec<&[f64]> = resolved.iter().map(|p| p.source.samples()).collect();
                    let leads: Vec<LeadId> = resolved.iter().map(|p| p.source.lead).collect();
                    for ((gen, bp), pair) in g.generate(&src, &leads)?.into_iter().zip(&resolved).zip(chunk) {
                        let n = bp.target.valid_len();
                        let score = fd_score(&gen[..n], bp.target.valid(), pair.source, pair.target, metric)?;
                        out.push(EvaluatedPair { pair: (*pair).clone(), score, generated: gen });
                    }
                }
                Ok(out)
            })
            .collect()
    })?;
    let mut all = Vec::with_capacity(pairs.len());
    for r in results {
        all.extend(r?);
    }
    let pos: BTreeMap<usize, usize> = pairs.iter().enumerate().map(|(k, p)| (p.id, k)).collect();
    all.sort_by_key(|e| pos[&e.pair.id]);
    Ok(all)
}

/// For each pair, the target lead's beat from a different patient: patients
/// are rotated by a seeded non-zero offset and the beat index wraps around
/// the partner's beat count. Needs at least two patients.
pub fn control_beats<'a>(corpus: &'a Corpus, pairs: &[PairRef], seed: u64) -> Result<Vec<&'a HeartbeatSegment>> {
    let patients = corpus.patients();
    if patients.len() < 2 {
        return Err(Error::InvalidArgument("a patient-permuted control needs two patients".into()));
    }
    let n = patients.len();
    let offset = 1 + rng::below(&mut rng::seeded(seed, 0xC0), n as u64 - 1) as usize;
    let mut beats: BTreeMap<&PatientId, usize> = BTreeMap::new();
    for s in corpus.segments() {
        let e = beats.entry(&s.patient_id).or_default();
        *e = (*e).max(s.beat_index + 1);
    }
    let pos: BTreeMap<&PatientId, usize> = patients.iter().enumerate().map(|(k, p)| (p, k)).collect();
    pairs
        .iter()
        .map(|p| {
            let i = *pos.get(&p.patient).ok_or_else(|| Error::InvalidArgument(format!("unknown patient {}", p.patient)))?;
            let partner = &patients[(i + offset) % n];
            let beat = p.beat % beats[partner];
            corpus
                .segment(partner, beat, p.target)
                .ok_or_else(|| Error::InvalidArgument(format!("no beat {beat} lead {} for {partner}", p.target)))
        })
        .collect()
}
