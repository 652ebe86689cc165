//! Run configuration: every tunable of the pipeline as a flat `key = value`
//! document with `#` comments.
//!
//! [`RunConfig::dump`] writes all keys with their current values; feeding the
//! dump back through [`RunConfig::parse`] reproduces the same configuration.
//! Keys absent from a document keep their defaults; unknown keys are errors.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::data::{CorpusInfo, SplitFractions, SynthConfig};
use crate::gan::{DiscriminatorConfig, GeneratorConfig, Mode, TrainConfig};
use crate::metrics::PointMetric;
use crate::nn::AdamConfig;
use crate::preprocess::{PipelineConfig, Wavelet};
use crate::{fsutil, Error, LeadId, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub metric: PointMetric,
    /// Seed of the patient rotation behind the control beats.
    pub control_seed: u64,
    pub batch_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { metric: PointMetric::Amplitude, control_seed: 0, batch_size: 256 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub pipeline: PipelineConfig,
    pub split_seed: u64,
    pub fractions: SplitFractions,
    pub split_by_patient: bool,
    pub mode: Mode,
    /// `None` takes the mode's preset.
    pub epochs: Option<usize>,
    /// `None` takes the mode's preset.
    pub batch_size: Option<usize>,
    pub adam: AdamConfig,
    pub train_seed: u64,
    pub recon_weight: f64,
    pub max_train_pairs: Option<usize>,
    pub max_val_pairs: Option<usize>,
    pub leads: Vec<LeadId>,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig { seed: 7, ..Default::default() },
            pipeline: PipelineConfig::default(),
            split_seed: 0,
            fractions: SplitFractions::default(),
            split_by_patient: false,
            mode: Mode::Advanced,
            epochs: None,
            batch_size: None,
            adam: AdamConfig::default(),
            train_seed: 0,
            recon_weight: 100.0,
            max_train_pairs: None,
            max_val_pairs: None,
            leads: LeadId::ALL.to_vec(),
            generator: GeneratorConfig { source_onehot: true, ..Default::default() },
            discriminator: DiscriminatorConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn metric_name(m: PointMetric) -> &'static str {
    match m {
        PointMetric::Amplitude => "amplitude",
        PointMetric::TimeAmplitude => "time-amplitude",
    }
}

fn opt(v: Option<usize>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |n| n.to_string())
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse {v:?}")))
}

fn parse_opt(key: &str, v: &str, none: &str) -> Result<Option<usize>> {
    if v == none {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl RunConfig {
    /// `(key, value, description)` for every key, in dump order.
    pub fn entries(&self) -> Vec<(&'static str, String, &'static str)> {
        let p = &self.pipeline;
        let leads = if self.leads == LeadId::ALL {
            "all".to_string()
        } else {
            self.leads.iter().map(|l| l.name()).collect::<Vec<_>>().join(",")
        };
        vec![
            ("synth.patients", self.synth.patients.to_string(), "synthetic patients to generate"),
            ("synth.seed", self.synth.seed.to_string(), "seed of the synthetic corpus"),
            ("synth.duration_s", self.synth.duration_s.to_string(), "recording length per patient, seconds"),
            ("synth.noise_mv", self.synth.noise_amplitude.to_string(), "white-noise standard deviation, mV"),
            ("synth.wander_mv", self.synth.baseline_wander_amplitude.to_string(), "0.3 Hz baseline drift amplitude, mV"),
            ("synth.sampling_rate_hz", self.synth.sampling_rate_hz.to_string(), "sampling rate of the raw signals"),
            ("preprocess.wavelet_order", p.denoise.wavelet.order().to_string(), "Daubechies order: 2, 4 or 8"),
            ("preprocess.n_filters", p.denoise.n_filters.to_string(), "decomposition levels"),
            ("preprocess.window_r", p.denoise.threshold.window_r.to_string(), "adaptive threshold window, coefficients"),
            ("preprocess.reference_lead", p.reference_lead.name().to_string(), "lead whose R peaks cut every lead"),
            ("preprocess.target_rate_hz", p.target_rate_hz.to_string(), "rate beats are resampled to"),
            ("preprocess.target_len", opt(p.target_len, "auto"), "padded beat length; auto = longest R-R interval"),
            ("rpeaks.threshold_ratio", p.rpeaks.threshold_ratio.to_string(), "fraction of the rolling maximum"),
            ("rpeaks.window_s", p.rpeaks.window_s.to_string(), "rolling maximum window, seconds"),
            ("rpeaks.refractory_s", p.rpeaks.refractory_s.to_string(), "minimum peak spacing, seconds"),
            ("split.seed", self.split_seed.to_string(), "shuffle seed of the train/val/test split"),
            ("split.train", self.fractions.train.to_string(), "training fraction"),
            ("split.val", self.fractions.val.to_string(), "validation fraction"),
            ("split.test", self.fractions.test.to_string(), "test fraction"),
            ("split.by_patient", self.split_by_patient.to_string(), "keep each patient in one split"),
            ("train.mode", self.mode.to_string(), "baseline (one generator) or advanced (one per target lead)"),
            ("train.epochs", opt(self.epochs, "auto"), "auto = 9 baseline, 10 advanced"),
            ("train.batch_size", opt(self.batch_size, "auto"), "auto = 256 baseline, 128 advanced"),
            ("train.learning_rate", self.adam.lr.to_string(), "Adam step size"),
            ("train.beta1", self.adam.beta1.to_string(), "Adam first-moment decay"),
            ("train.beta2", self.adam.beta2.to_string(), "Adam second-moment decay"),
            ("train.eps", self.adam.eps.to_string(), "Adam denominator floor"),
            ("train.seed", self.train_seed.to_string(), "weight init and batch order seed"),
            ("train.recon_weight", self.recon_weight.to_string(), "weight of the generator's BCE to the true target"),
            ("train.max_train_pairs", opt(self.max_train_pairs, "all"), "training pairs per model and epoch"),
            ("train.max_val_pairs", opt(self.max_val_pairs, "all"), "validation pairs scored per model and epoch"),
            ("train.leads", leads, "advanced-mode target leads, comma separated or all"),
            ("generator.hidden", self.generator.hidden.to_string(), "LSTM units per direction"),
            ("generator.depth", self.generator.depth.to_string(), "stacked bidirectional layers"),
            ("generator.source_onehot", self.generator.source_onehot.to_string(), "feed the source lead identity"),
            ("discriminator.conv_blocks", self.discriminator.conv_blocks.to_string(), "conv/pool blocks"),
            ("discriminator.kernels", self.discriminator.kernels.to_string(), "filters per conv layer"),
            ("discriminator.kernel_size", self.discriminator.kernel_size.to_string(), "conv kernel size"),
            ("discriminator.kernel_stride", self.discriminator.kernel_stride.to_string(), "conv stride"),
            ("discriminator.pool_size", self.discriminator.pool_size.to_string(), "max-pool window"),
            ("discriminator.pool_stride", self.discriminator.pool_stride.to_string(), "max-pool stride"),
            ("discriminator.fc_units", self.discriminator.fc_units.to_string(), "dense ReLU units"),
            ("eval.metric", metric_name(self.eval.metric).to_string(), "FD point distance: amplitude or time-amplitude"),
            ("eval.control_seed", self.eval.control_seed.to_string(), "seed of the permuted-patient control"),
            ("eval.batch_size", self.eval.batch_size.to_string(), "beats generated per forward pass"),
        ]
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let p = &mut self.pipeline;
        match key {
            "synth.patients" => self.synth.patients = parse_num(key, v)?,
            "synth.seed" => self.synth.seed = parse_num(key, v)?,
            "synth.duration_s" => self.synth.duration_s = parse_num(key, v)?,
            "synth.noise_mv" => self.synth.noise_amplitude = parse_num(key, v)?,
            "synth.wander_mv" => self.synth.baseline_wander_amplitude = parse_num(key, v)?,
            "synth.sampling_rate_hz" => self.synth.sampling_rate_hz = parse_num(key, v)?,
            "preprocess.wavelet_order" => p.denoise.wavelet = Wavelet::from_order(parse_num(key, v)?)?,
            "preprocess.n_filters" => p.denoise.n_filters = parse_num(key, v)?,
            "preprocess.window_r" => p.denoise.threshold.window_r = parse_num(key, v)?,
            "preprocess.reference_lead" => p.reference_lead = v.parse()?,
            "preprocess.target_rate_hz" => p.target_rate_hz = parse_num(key, v)?,
            "preprocess.target_len" => p.target_len = parse_opt(key, v, "auto")?,
            "rpeaks.threshold_ratio" => p.rpeaks.threshold_ratio = parse_num(key, v)?,
            "rpeaks.window_s" => p.rpeaks.window_s = parse_num(key, v)?,
            "rpeaks.refractory_s" => p.rpeaks.refractory_s = parse_num(key, v)?,
            "split.seed" => self.split_seed = parse_num(key, v)?,
            "split.train" => self.fractions.train = parse_num(key, v)?,
            "split.val" => self.fractions.val = parse_num(key, v)?,
            "split.test" => self.fractions.test = parse_num(key, v)?,
            "split.by_patient" => self.split_by_patient = parse_bool(key, v)?,
            "train.mode" => self.mode = v.parse()?,
            "train.epochs" => self.epochs = parse_opt(key, v, "auto")?,
            "train.batch_size" => self.batch_size = parse_opt(key, v, "auto")?,
            "train.learning_rate" => self.adam.lr = parse_num(key, v)?,
            "train.beta1" => self.adam.beta1 = parse_num(key, v)?,
            "train.beta2" => self.adam.beta2 = parse_num(key, v)?,
            "train.eps" => self.adam.eps = parse_num(key, v)?,
            "train.seed" => self.train_seed = parse_num(key, v)?,
            "train.recon_weight" => self.recon_weight = parse_num(key, v)?,
            "train.max_train_pairs" => self.max_train_pairs = parse_opt(key, v, "all")?,
            "train.max_val_pairs" => self.max_val_pairs = parse_opt(key, v, "all")?,
            "train.leads" => {
                self.leads = if v == "all" {
                    LeadId::ALL.to_vec()
                } else {
                    v.split(',').map(str::parse).collect::<Result<_>>()?
                }
            }
            "generator.hidden" => self.generator.hidden = parse_num(key, v)?,
            "generator.depth" => self.generator.depth = parse_num(key, v)?,
            "generator.source_onehot" => self.generator.source_onehot = parse_bool(key, v)?,
            "discriminator.conv_blocks" => self.discriminator.conv_blocks = parse_num(key, v)?,
            "discriminator.kernels" => self.discriminator.kernels = parse_num(key, v)?,
            "discriminator.kernel_size" => self.discriminator.kernel_size = parse_num(key, v)?,
            "discriminator.kernel_stride" => self.discriminator.kernel_stride = parse_num(key, v)?,
            "discriminator.pool_size" => self.discriminator.pool_size = parse_num(key, v)?,
            "discriminator.pool_stride" => self.discriminator.pool_stride = parse_num(key, v)?,
            "discriminator.fc_units" => self.discriminator.fc_units = parse_num(key, v)?,
            "eval.metric" => {
                self.eval.metric = match v {
                    "amplitude" => PointMetric::Amplitude,
                    "time-amplitude" => PointMetric::TimeAmplitude,
                    _ => return Err(Error::InvalidArgument(format!("{key}: unknown metric {v:?}"))),
                }
            }
            "eval.control_seed" => self.eval.control_seed = parse_num(key, v)?,
            "eval.batch_size" => self.eval.batch_size = parse_num(key, v)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut s = String::from("# ecgforge run configuration\n");
        let mut section = "";
        for (k, v, doc) in self.entries() {
            let head = k.split('.').next().unwrap_or("");
            if head != section {
                let _ = writeln!(s, "\n# {head}");
                section = head;
            }
            let _ = writeln!(s, "{k} = {v}  # {doc}");
        }
        s
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in fsutil::parse_kv(text, origin)? {
            cfg.set(&k, &v).map_err(|e| Error::format(origin, e.to_string()))?;
        }
        cfg.validate().map_err(|e| Error::format(origin, e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fsutil::read_to_string(path)?, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.fractions.validate()?;
        if self.pipeline.denoise.threshold.window_r == 0 || self.pipeline.denoise.n_filters == 0 {
            return Err(Error::InvalidArgument("window_r and n_filters must be positive".into()));
        }
        if !(self.pipeline.target_rate_hz > 0.0) || !(self.synth.sampling_rate_hz > 0.0) {
            return Err(Error::InvalidArgument("sampling rates must be positive".into()));
        }
        if self.leads.is_empty() {
            return Err(Error::InvalidArgument("train.leads is empty".into()));
        }
        Ok(())
    }

    pub fn corpus_info(&self, target_len: usize) -> CorpusInfo {
        CorpusInfo {
            target_len,
            sampling_rate_hz: self.pipeline.target_rate_hz,
            split_seed: self.split_seed,
            fractions: self.fractions,
            split_by_patient: self.split_by_patient,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let preset = TrainConfig::for_mode(self.mode);
        TrainConfig {
            epochs: self.epochs.unwrap_or(preset.epochs),
            batch_size: self.batch_size.unwrap_or(preset.batch_size),
            adam: self.adam,
            seed: self.train_seed,
            generator: self.generator,
            discriminator: self.discriminator,
            recon_weight: self.recon_weight,
            metric: self.eval.metric,
            max_train_pairs: self.max_train_pairs,
            max_val_pairs: self.max_val_pairs,
            leads: self.leads.clone(),
            ..preset
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_parse_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("train.leads", "V1,aVR").unwrap();
        cfg.set("train.epochs", "3").unwrap();
        cfg.set("train.learning_rate", "0.02").unwrap();
        cfg.set("preprocess.wavelet_order", "8").unwrap();
        cfg.set("eval.metric", "time-amplitude").unwrap();
        cfg.set("synth.noise_mv", "0.1").unwrap();
        let back = RunConfig::parse(&cfg.dump(), Path::new("c")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.dump(), cfg.dump());
        assert_eq!(RunConfig::parse(&RunConfig::default().dump(), Path::new("c")).unwrap(), RunConfig::default());
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = RunConfig::default();
        let mut other = RunConfig::default();
        for (k, v, _) in cfg.entries() {
            other.set(k, &v).unwrap();
        }
        assert_eq!(other, cfg);
    }

    #[test]
    fn unknown_and_malformed_keys_rejected() {
        let p = Path::new("c");
        assert!(RunConfig::parse("train.epochz = 3", p).is_err());
        assert!(RunConfig::parse("train.epochs = three", p).is_err());
        assert!(RunConfig::parse("split.by_patient = yes", p).is_err());
        assert!(RunConfig::parse("split.train = 0.9", p).is_err());
        let cfg = RunConfig::parse("# comment only\n\ntrain.mode = baseline # inline\n", p).unwrap();
        assert_eq!(cfg.mode, Mode::Baseline);
        assert_eq!(cfg.train_config().batch_size, 256);
        assert_eq!(cfg.train_config().epochs, 9);
    }
}
