use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array3;
use rayon::prelude::*;

use super::model::{Discriminator, DiscriminatorConfig, Generator, GeneratorConfig, FAKE, REAL};
use super::select::{trace_csv, EpochSelection, ModelKey, TraceRow};
use crate::data::{Corpus, PairRef, SplitName};
use crate::metrics::{frechet_distance, PointMetric};
use crate::nn::{softmax_cross_entropy, Adam, AdamConfig, Layer, PROB_CLAMP};
use crate::{fsutil, parallel, rng, Error, LeadId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One generator for every target lead.
    Baseline,
    /// One generator per target lead.
    Advanced,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Advanced => "advanced",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "advanced" => Ok(Mode::Advanced),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?} (baseline|advanced)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    /// Weight of the BCE between generated and true target beats in the
    /// generator loss; 0 leaves the adversarial term alone.
    pub recon_weight: f64,
    pub metric: PointMetric,
    /// Training pairs drawn per model and epoch; `None` uses all.
    pub max_train_pairs: Option<usize>,
    /// Validation pairs scored per model and epoch; `None` uses all.
    pub max_val_pairs: Option<usize>,
    /// Target leads trained in advanced mode.
    pub leads: Vec<LeadId>,
}

impl TrainConfig {
    pub fn for_mode(mode: Mode) -> Self {
        let (epochs, batch_size) = match mode {
            Mode::Baseline => (9, 256),
            Mode::Advanced => (10, 128),
        };
        Self {
            mode,
            epochs,
            batch_size,
            adam: AdamConfig::default(),
            seed: 0,
            generator: GeneratorConfig::default(),
            discriminator: DiscriminatorConfig::default(),
            recon_weight: 10.0,
            metric: PointMetric::Amplitude,
            max_train_pairs: None,
            max_val_pairs: None,
            leads: LeadId::ALL.to_vec(),
        }
    }

    pub fn keys(&self) -> Vec<ModelKey> {
        match self.mode {
            Mode::Baseline => vec![ModelKey::All],
            Mode::Advanced => self.leads.iter().map(|&l| ModelKey::Lead(l)).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        if !(self.recon_weight >= 0.0 && self.recon_weight.is_finite()) {
            return Err(Error::InvalidArgument("reconstruction weight must be finite and non-negative".into()));
        }
        if self.keys().is_empty() {
            return Err(Error::InvalidArgument("no target leads to train".into()));
        }
        Ok(())
    }
}

/// Facts about a trained model set that inference needs, kept in
/// `model.cfg` next to the checkpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelInfo {
    pub mode: Mode,
    pub target_len: usize,
    pub sampling_rate_hz: f64,
}

impl ModelInfo {
    pub const FILE: &'static str = "model.cfg";

    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = format!(
            "mode = {}\ntarget_len = {}\nsampling_rate_hz = {}\n",
            self.mode, self.target_len, self.sampling_rate_hz
        );
        fsutil::atomic_write(&dir.join(Self::FILE), text.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let kv = fsutil::parse_kv(&fsutil::read_to_string(&path)?, &path)?;
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::format(&path, format!("missing key {k}")));
        let bad = |k: &str| Error::format(&path, format!("bad value for {k}"));
        Ok(Self {
            mode: get("mode")?.parse()?,
            target_len: get("target_len")?.parse().map_err(|_| bad("target_len"))?,
            sampling_rate_hz: get("sampling_rate_hz")?.parse().map_err(|_| bad("sampling_rate_hz"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub trace: Vec<TraceRow>,
    pub selection: EpochSelection,
}

fn model_tag(key: ModelKey) -> u64 {
    match key {
        ModelKey::All => 0x4700,
        ModelKey::Lead(l) => 0x4701 + l.code() as u64,
    }
}

/// The generator `train` starts from for `key`.
pub fn init_generator(cfg: &TrainConfig, key: ModelKey) -> Result<Generator> {
    Generator::new(cfg.generator, &mut rng::seeded(cfg.seed, model_tag(key)))
}

pub fn init_discriminator(cfg: &TrainConfig, key: ModelKey, beat_len: usize) -> Result<Discriminator> {
    Discriminator::new(cfg.discriminator, beat_len, &mut rng::seeded(cfg.seed, model_tag(key) + 0x100))
}

pub(crate) fn checkpoint_path(dir: &Path, kind: &str, key: ModelKey, epoch: usize) -> PathBuf {
    dir.join(format!("{kind}_{key}_{epoch}.ecgw"))
}

pub(crate) fn pairs_for(pairs: &[PairRef], key: ModelKey) -> Vec<&PairRef> {
    pairs
        .iter()
        .filter(|p| match key {
            ModelKey::All => true,
            ModelKey::Lead(l) => p.target == l,
        })
        .collect()
}

/// Trains every model of `cfg.mode` on the corpus's training split. After each
/// epoch the generator and discriminator are checkpointed into `out` and the
/// generator's mean validation FD is recorded; `trace.csv` and
/// `selection.csv` are written at the end. Models train in parallel and
/// independently, so results do not depend on the thread count.
pub fn train(corpus: &Corpus, cfg: &TrainConfig, out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    if corpus.split(SplitName::Train).is_empty() {
        return Err(Error::Empty("training split"));
    }
    if corpus.split(SplitName::Val).is_empty() {
        return Err(Error::Empty("validation split"));
    }
    let keys = cfg.keys();
    let results: Vec<Result<Vec<TraceRow>>> =
        parallel::run(|| keys.par_iter().map(|&k| train_one(corpus, cfg, k, out)).collect())?;
    let mut trace = Vec::new();
    for r in results {
        trace.extend(r?);
    }
    let selection = EpochSelection::from_trace(&trace)?;
    fsutil::atomic_write(&out.join("trace.csv"), trace_csv(&trace).as_bytes())?;
    fsutil::atomic_write(&out.join("selection.csv"), selection.to_csv().as_bytes())?;
    let info = ModelInfo { mode: cfg.mode, target_len: corpus.info.target_len, sampling_rate_hz: corpus.info.sampling_rate_hz };
    info.save(out)?;
    Ok(TrainOutcome { trace, selection })
}

struct Trainer<'a> {
    corpus: &'a Corpus,
    cfg: &'a TrainConfig,
    gen: Generator,
    disc: Discriminator,
    opt_g: Adam,
    opt_d: Adam,
}

#[derive(Debug, Clone, Copy)]
struct StepLoss {
    disc: f64,
    gen: f64,
    recon: f64,
}

impl StepLoss {
    fn is_finite(&self) -> bool {
        self.disc.is_finite() && self.gen.is_finite() && self.recon.is_finite()
    }
}

impl Trainer<'_> {
    fn step(&mut self, batch: &[&PairRef]) -> Result<StepLoss> {
        let resolved = batch.iter().map(|p| self.corpus.resolve(p)).collect::<Result<Vec<_>>>()?;
        let src: Vec<&[f64]> = resolved.iter().map(|p| p.source.samples()).collect();
        let tgt: Vec<&[f64]> = resolved.iter().map(|p| p.target.samples()).collect();
        let leads: Vec<LeadId> = resolved.iter().map(|p| p.source.lead).collect();
        let b = batch.len();

        let x = self.gen.input(&src, &leads)?;
        let fake = self.gen.forward(&x)?;
        let fake_beats = fake.view().permuted_axes([1, 2, 0]).as_standard_layout().to_owned();
        let real = Discriminator::input(&tgt)?;

        self.disc.zero_grad();
        let (loss_real, d_real) = softmax_cross_entropy(&self.disc.forward(&real)?, &vec![REAL; b])?;
        self.disc.backward(&d_real)?;
        let (loss_fake, d_fake) = softmax_cross_entropy(&self.disc.forward(&fake_beats)?, &vec![FAKE; b])?;
        self.disc.backward(&d_fake)?;
        self.opt_d.step(self.disc.params_mut())?;

        let (loss_gen, d_gen) = softmax_cross_entropy(&self.disc.forward(&fake_beats)?, &vec![REAL; b])?;
        let d_beats = self.disc.backward(&d_gen)?;
        self.disc.zero_grad();
        let mut d_out: Array3<f64> = d_beats.view().permuted_axes([2, 0, 1]).as_standard_layout().to_owned();

        let (t, w) = (fake.dim().0, self.cfg.recon_weight);
        let norm = (b * t) as f64;
        let mut recon = 0.0;
        if w > 0.0 {
            for bi in 0..b {
                for ti in 0..t {
                    let p = fake[[ti, bi, 0]].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                    let y = tgt[bi][ti];
                    recon -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
                    d_out[[ti, bi, 0]] += w * (p - y) / (p * (1.0 - p)) / norm;
                }
            }
            recon /= norm;
        }
        self.gen.zero_grad();
        self.gen.backward(&d_out)?;
        self.opt_g.step(self.gen.params_mut())?;
        Ok(StepLoss { disc: loss_real + loss_fake, gen: loss_gen, recon })
    }
}

/// Mean FD between generated and true target beats, over each target's
/// unpadded prefix.
pub(crate) fn mean_fd(
    gen: &mut Generator,
    corpus: &Corpus,
    pairs: &[&PairRef],
    batch_size: usize,
    metric: PointMetric,
) -> Result<f64> {
    let mut total = 0.0;
    for chunk in pairs.chunks(batch_size) {
        let resolved = chunk.iter().map(|p| corpus.resolve(p)).collect::<Result<Vec<_>>>()?;
        let src: Vec<&[f64]> = resolved.iter().map(|p| p.source.samples()).collect();
        let leads: Vec<LeadId> = resolved.iter().map(|p| p.source.lead).collect();
        for (out, p) in gen.generate(&src, &leads)?.iter().zip(&resolved) {
            let n = p.target.valid_len();
            total += frechet_distance(&out[..n], p.target.valid(), metric)?;
        }
    }
    Ok(total / pairs.len() as f64)
}

fn train_one(corpus: &Corpus, cfg: &TrainConfig, key: ModelKey, out: &Path) -> Result<Vec<TraceRow>> {
    let train_pairs = pairs_for(corpus.split(SplitName::Train), key);
    let mut val_pairs = pairs_for(corpus.split(SplitName::Val), key);
    if train_pairs.is_empty() || val_pairs.is_empty() {
        return Err(Error::Empty("training or validation pairs for a model"));
    }
    if let Some(m) = cfg.max_val_pairs {
        val_pairs.truncate(m.max(1));
    }
    let mut tr = Trainer {
        corpus,
        cfg,
        gen: init_generator(cfg, key)?,
        disc: init_discriminator(cfg, key, corpus.info.target_len)?,
        opt_g: Adam::new(cfg.adam),
        opt_d: Adam::new(cfg.adam),
    };
    let mut meta = BTreeMap::new();
    meta.insert("lead".to_string(), key.to_string());
    meta.insert("target_len".to_string(), corpus.info.target_len.to_string());
    let mut rows = Vec::new();
    let mut last_good = None;
    for epoch in 1..=cfg.epochs {
        let mut order = train_pairs.clone();
        rng::shuffle(&mut rng::seeded(cfg.seed, rng::mix(model_tag(key), epoch as u64)), &mut order);
        if let Some(m) = cfg.max_train_pairs {
            order.truncate(m.max(1));
        }
        let diverged = || Error::Diverged { model: key.to_string(), epoch, last_good: last_good.clone() };
        for batch in order.chunks(cfg.batch_size) {
            if !tr.step(batch)?.is_finite() {
                return Err(diverged());
            }
        }
        if tr.gen.params().iter().any(|p| p.value.iter().any(|v| !v.is_finite())) {
            return Err(diverged());
        }
        let fd = mean_fd(&mut tr.gen, corpus, &val_pairs, cfg.batch_size, cfg.metric)?;
        if !fd.is_finite() {
            return Err(diverged());
        }
        meta.insert("epoch".to_string(), epoch.to_string());
        let gen_path = checkpoint_path(out, "gen", key, epoch);
        tr.gen.to_checkpoint(&meta).save(&gen_path)?;
        tr.disc.to_checkpoint(&meta).save(&checkpoint_path(out, "disc", key, epoch))?;
        last_good = Some(gen_path);
        rows.push(TraceRow { model: key, epoch, val_mean_fd: fd });
    }
    Ok(rows)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data::{CorpusInfo, RawDataset, SplitFractions, SynthConfig};
    use crate::preprocess::PipelineConfig;

    pub(crate) fn tiny_corpus(fractions: SplitFractions) -> Corpus {
        let raw = RawDataset::synthetic(&SynthConfig { patients: 3, seed: 2, duration_s: 4.0, ..Default::default() }).unwrap();
        let (segs, len) = raw.segments(&PipelineConfig::default()).unwrap();
        Corpus::build(CorpusInfo { target_len: len, fractions, ..Default::default() }, segs).unwrap()
    }

    pub(crate) fn tiny_config() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 8,
            adam: AdamConfig { lr: 1e-2, ..Default::default() },
            generator: GeneratorConfig { hidden: 3, depth: 1, source_onehot: true },
            discriminator: DiscriminatorConfig { kernels: 3, fc_units: 4, ..Default::default() },
            max_train_pairs: Some(24),
            max_val_pairs: Some(6),
            leads: vec![LeadId::V1, LeadId::AVR],
            ..TrainConfig::for_mode(Mode::Advanced)
        }
    }

    #[test]
    fn one_checkpoint_pair_and_fd_per_epoch() {
        let corpus = tiny_corpus(SplitFractions::default());
        let dir = tempfile::tempdir().unwrap();
        let out = train(&corpus, &tiny_config(), dir.path()).unwrap();
        assert_eq!(out.trace.len(), 6);
        for key in [ModelKey::Lead(LeadId::V1), ModelKey::Lead(LeadId::AVR)] {
            let epochs: Vec<usize> = out.trace.iter().filter(|r| r.model == key).map(|r| r.epoch).collect();
            assert_eq!(epochs, [1, 2, 3]);
            for e in 1..=3 {
                assert!(checkpoint_path(dir.path(), "gen", key, e).exists());
                assert!(checkpoint_path(dir.path(), "disc", key, e).exists());
            }
        }
        assert!(!checkpoint_path(dir.path(), "gen", ModelKey::Lead(LeadId::I), 1).exists());
        assert!(dir.path().join("trace.csv").exists());
        assert_eq!(out.selection.choices.len(), 2);
        let info = ModelInfo::load(dir.path()).unwrap();
        assert_eq!(info.target_len, corpus.info.target_len);
        assert_eq!(info.mode, Mode::Advanced);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let corpus = tiny_corpus(SplitFractions::default());
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = TrainConfig { epochs: 2, ..tiny_config() };
        let ta = train(&corpus, &cfg, a.path()).unwrap();
        let tb = train(&corpus, &cfg, b.path()).unwrap();
        assert_eq!(ta, tb);
        let key = ModelKey::Lead(LeadId::AVR);
        for kind in ["gen", "disc"] {
            let fa = std::fs::read(checkpoint_path(a.path(), kind, key, 2)).unwrap();
            let fb = std::fs::read(checkpoint_path(b.path(), kind, key, 2)).unwrap();
            assert_eq!(fa, fb);
        }
        let other = train(&corpus, &TrainConfig { seed: 9, ..cfg }, b.path()).unwrap();
        assert_ne!(other.trace, ta.trace);
    }

    #[test]
    fn baseline_trains_a_single_model() {
        let corpus = tiny_corpus(SplitFractions::default());
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig { mode: Mode::Baseline, epochs: 1, ..tiny_config() };
        let out = train(&corpus, &cfg, dir.path()).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].model, ModelKey::All);
        assert!(dir.path().join("gen_all_1.ecgw").exists());
    }

    #[test]
    fn nan_learning_rate_diverges() {
        let corpus = tiny_corpus(SplitFractions::default());
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig { adam: AdamConfig { lr: f64::NAN, ..Default::default() }, leads: vec![LeadId::V1], ..tiny_config() };
        match train(&corpus, &cfg, dir.path()) {
            Err(Error::Diverged { epoch: 1, last_good: None, .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn empty_validation_split_rejected() {
        let corpus = tiny_corpus(SplitFractions { train: 0.9998, val: 0.0001, test: 0.0001 });
        assert!(corpus.split(SplitName::Val).is_empty());
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(train(&corpus, &tiny_config(), dir.path()), Err(Error::Empty(_))));
    }

    #[test]
    fn bad_config_rejected() {
        let corpus = tiny_corpus(SplitFractions::default());
        let dir = tempfile::tempdir().unwrap();
        for cfg in [
            TrainConfig { epochs: 0, ..tiny_config() },
            TrainConfig { batch_size: 0, ..tiny_config() },
            TrainConfig { recon_weight: -1.0, ..tiny_config() },
            TrainConfig { leads: vec![], ..tiny_config() },
        ] {
            assert!(train(&corpus, &cfg, dir.path()).is_err());
        }
    }
}
