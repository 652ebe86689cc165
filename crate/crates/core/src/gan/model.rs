use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, Array3, Ix2, Ix3};
use rand::RngCore;

use crate::nn::checkpoint::Checkpoint;
use crate::nn::{Activation, BiLstm, Conv1d, Dense, Flatten, Layer, MaxPool1d, Param, TimeDistributedDense};
use crate::{Error, LeadId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub hidden: usize,
    /// Stacked bidirectional layers.
    pub depth: usize,
    /// Append a one-hot code of the source lead to every input step.
    pub source_onehot: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { hidden: 64, depth: 2, source_onehot: false }
    }
}

impl GeneratorConfig {
    pub fn input_features(&self) -> usize {
        if self.source_onehot {
            13
        } else {
            1
        }
    }
}

/// Stacked bidirectional LSTMs and a time-distributed one-unit sigmoid head.
/// Maps `(time, batch, features)` to `(time, batch, 1)`.
pub struct Generator {
    pub config: GeneratorConfig,
    layers: Vec<BiLstm>,
    head: TimeDistributedDense,
}

impl Generator {
    pub fn new(config: GeneratorConfig, rng: &mut impl RngCore) -> Result<Self> {
        if config.hidden == 0 || config.depth == 0 {
            return Err(Error::InvalidArgument("generator hidden size and depth must be positive".into()));
        }
        let mut inputs = config.input_features();
        let mut layers = Vec::with_capacity(config.depth);
        for k in 0..config.depth {
            layers.push(BiLstm::new(&format!("gen.bilstm{k}"), inputs, config.hidden, rng));
            inputs = 2 * config.hidden;
        }
        let head = TimeDistributedDense::new(Dense::new("gen.head", inputs, 1, Activation::Sigmoid, rng));
        Ok(Self { config, layers, head })
    }

    /// Packs beats (all the same length) into a `(time, batch, features)`
    /// input.
    pub fn input(&self, beats: &[&[f64]], sources: &[LeadId]) -> Result<Array3<f64>> {
        let t = beats.first().map_or(0, |b| b.len());
        if beats.is_empty() || t == 0 || beats.iter().any(|b| b.len() != t) {
            return Err(Error::Shape("generator batch needs non-empty beats of equal length".into()));
        }
        if self.config.source_onehot && sources.len() != beats.len() {
            return Err(Error::Shape("one source lead per beat required".into()));
        }
        let f = self.config.input_features();
        let mut x = Array3::zeros((t, beats.len(), f));
        for (b, beat) in beats.iter().enumerate() {
            for (ti, &v) in beat.iter().enumerate() {
                x[[ti, b, 0]] = v;
                if self.config.source_onehot {
                    x[[ti, b, 1 + sources[b].index()]] = 1.0;
                }
            }
        }
        Ok(x)
    }

    /// Generated beats, one per input, each as long as the input.
    pub fn generate(&mut self, beats: &[&[f64]], sources: &[LeadId]) -> Result<Vec<Vec<f64>>> {
        let y = self.forward(&self.input(beats, sources)?)?;
        Ok((0..beats.len()).map(|b| y.slice(ndarray::s![.., b, 0]).to_vec()).collect())
    }

    pub fn to_checkpoint(&self, extra: &BTreeMap<String, String>) -> Checkpoint {
        let mut meta = extra.clone();
        meta.insert("kind".into(), "generator".into());
        meta.insert("hidden".into(), self.config.hidden.to_string());
        meta.insert("depth".into(), self.config.depth.to_string());
        meta.insert("source_onehot".into(), self.config.source_onehot.to_string());
        Checkpoint::from_params(meta, self.params())
    }

    pub fn from_checkpoint(ck: &Checkpoint, origin: &Path) -> Result<Self> {
        if ck.meta_value("kind") != Some("generator") {
            return Err(Error::format(origin, "not a generator checkpoint"));
        }
        let config = GeneratorConfig {
            hidden: meta_num(ck, "hidden", origin)?,
            depth: meta_num(ck, "depth", origin)?,
            source_onehot: ck.meta_value("source_onehot") == Some("true"),
        };
        let mut g = Self::new(config, &mut crate::rng::seeded(0, 0))?;
        ck.restore_into(g.params_mut())?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?, path)
    }
}

fn meta_num(ck: &Checkpoint, key: &str, origin: &Path) -> Result<usize> {
    ck.meta_value(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::format(origin, format!("missing or bad metadata {key}")))
}

impl Layer for Generator {
    type In = Ix3;
    type Out = Ix3;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let mut h = x.clone();
        for l in &mut self.layers {
            h = l.forward(&h)?;
        }
        self.head.forward(&h)
    }

    fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let mut d = self.head.backward(dy)?;
        for l in self.layers.iter_mut().rev() {
            d = l.backward(&d)?;
        }
        Ok(d)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p: Vec<&Param> = self.layers.iter().flat_map(|l| l.params()).collect();
        p.extend(self.head.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p: Vec<&mut Param> = self.layers.iter_mut().flat_map(|l| l.params_mut()).collect();
        p.extend(self.head.params_mut());
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscriminatorConfig {
    pub conv_blocks: usize,
    pub kernels: usize,
    pub kernel_size: usize,
    pub kernel_stride: usize,
    pub pool_size: usize,
    pub pool_stride: usize,
    pub fc_units: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self { conv_blocks: 2, kernels: 64, kernel_size: 3, kernel_stride: 3, pool_size: 2, pool_stride: 2, fc_units: 100 }
    }
}

/// Repeated conv(ReLU)/max-pool blocks, a ReLU dense layer and two logits,
/// index 1 meaning "real". Input is `(batch, 1, input_len)`.
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub input_len: usize,
    blocks: Vec<(Conv1d, MaxPool1d)>,
    flatten: Flatten,
    fc: Dense,
    out: Dense,
}

pub const REAL: usize = 1;
pub const FAKE: usize = 0;

impl Discriminator {
    pub fn new(config: DiscriminatorConfig, input_len: usize, rng: &mut impl RngCore) -> Result<Self> {
        let mut len = input_len;
        let mut channels = 1;
        let mut blocks = Vec::new();
        for k in 0..config.conv_blocks {
            let conv = Conv1d::new(
                &format!("disc.conv{k}"),
                channels,
                config.kernels,
                config.kernel_size,
                config.kernel_stride,
                Activation::Relu,
                rng,
            );
            let pool = MaxPool1d::new(config.pool_size, config.pool_stride);
            len = conv
                .output_len(len)
                .and_then(|l| pool.output_len(l))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "beat length {input_len} too short for {} conv/pool blocks",
                        config.conv_blocks
                    ))
                })?;
            channels = config.kernels;
            blocks.push((conv, pool));
        }
        let fc = Dense::new("disc.fc", channels * len, config.fc_units, Activation::Relu, rng);
        let out = Dense::new("disc.out", config.fc_units, 2, Activation::None, rng);
        Ok(Self { config, input_len, blocks, flatten: Flatten::new(), fc, out })
    }

    pub fn input(beats: &[&[f64]]) -> Result<Array3<f64>> {
        let t = beats.first().map_or(0, |b| b.len());
        if beats.is_empty() || beats.iter().any(|b| b.len() != t) {
            return Err(Error::Shape("discriminator batch needs beats of equal length".into()));
        }
        Ok(Array3::from_shape_fn((beats.len(), 1, t), |(b, _, i)| beats[b][i]))
    }

    /// `P(real)` for each beat.
    pub fn prob_real(&mut self, x: &Array3<f64>) -> Result<Vec<f64>> {
        let p = crate::nn::softmax(&self.forward(x)?);
        Ok(p.column(REAL).to_vec())
    }

    pub fn to_checkpoint(&self, extra: &BTreeMap<String, String>) -> Checkpoint {
        let c = &self.config;
        let mut meta = extra.clone();
        for (k, v) in [
            ("conv_blocks", c.conv_blocks),
            ("kernels", c.kernels),
            ("kernel_size", c.kernel_size),
            ("kernel_stride", c.kernel_stride),
            ("pool_size", c.pool_size),
            ("pool_stride", c.pool_stride),
            ("fc_units", c.fc_units),
            ("input_len", self.input_len),
        ] {
            meta.insert(k.into(), v.to_string());
        }
        meta.insert("kind".into(), "discriminator".into());
        Checkpoint::from_params(meta, self.params())
    }

    pub fn from_checkpoint(ck: &Checkpoint, origin: &Path) -> Result<Self> {
        if ck.meta_value("kind") != Some("discriminator") {
            return Err(Error::format(origin, "not a discriminator checkpoint"));
        }
        let n = |k| meta_num(ck, k, origin);
        let config = DiscriminatorConfig {
            conv_blocks: n("conv_blocks")?,
            kernels: n("kernels")?,
            kernel_size: n("kernel_size")?,
            kernel_stride: n("kernel_stride")?,
            pool_size: n("pool_size")?,
            pool_stride: n("pool_stride")?,
            fc_units: n("fc_units")?,
        };
        let mut d = Self::new(config, n("input_len")?, &mut crate::rng::seeded(0, 0))?;
        ck.restore_into(d.params_mut())?;
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?, path)
    }
}

impl Layer for Discriminator {
    type In = Ix3;
    type Out = Ix2;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array2<f64>> {
        if x.dim().2 != self.input_len {
            return Err(Error::Shape(format!(
                "discriminator expects beats of {} samples, got {}",
                self.input_len,
                x.dim().2
            )));
        }
        let mut h = x.clone();
        for (conv, pool) in &mut self.blocks {
            h = pool.forward(&conv.forward(&h)?)?;
        }
        let f = self.flatten.forward(&h)?;
        self.out.forward(&self.fc.forward(&f)?)
    }

    fn backward(&mut self, dy: &Array2<f64>) -> Result<Array3<f64>> {
        let d = self.fc.backward(&self.out.backward(dy)?)?;
        let mut d = self.flatten.backward(&d)?;
        for (conv, pool) in self.blocks.iter_mut().rev() {
            d = conv.backward(&pool.backward(&d)?)?;
        }
        Ok(d)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p: Vec<&Param> = self.blocks.iter().flat_map(|(c, _)| c.params()).collect();
        p.extend(self.fc.params());
        p.extend(self.out.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p: Vec<&mut Param> = self.blocks.iter_mut().flat_map(|(c, _)| c.params_mut()).collect();
        p.extend(self.fc.params_mut());
        p.extend(self.out.params_mut());
        p
    }

    fn nonsmooth_margin(&self) -> f64 {
        let convs = self.blocks.iter().map(|(c, p)| c.nonsmooth_margin().min(p.nonsmooth_margin()));
        convs.fold(self.fc.nonsmooth_margin(), f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn small_gen(seed: u64) -> Generator {
        Generator::new(GeneratorConfig { hidden: 4, depth: 2, source_onehot: false }, &mut rng::seeded(seed, 0)).unwrap()
    }

    #[test]
    fn generator_output_is_bounded() {
        let mut g = small_gen(1);
        let zeros = vec![0.0; 30];
        let ramp: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let out = g.generate(&[&zeros, &ramp], &[]).unwrap();
        assert_eq!(out.len(), 2);
        for beat in &out {
            assert_eq!(beat.len(), 30);
            assert!(beat.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn onehot_input_layout() {
        let cfg = GeneratorConfig { hidden: 2, depth: 1, source_onehot: true };
        let g = Generator::new(cfg, &mut rng::seeded(0, 0)).unwrap();
        let x = g.input(&[&[0.5, 0.25]], &[LeadId::V1]).unwrap();
        assert_eq!(x.dim(), (2, 1, 13));
        assert_eq!(x[[1, 0, 0]], 0.25);
        assert_eq!(x[[0, 0, 1 + LeadId::V1.index()]], 1.0);
        assert!(g.input(&[&[0.5]], &[]).is_err());
    }

    #[test]
    fn discriminator_is_a_simplex_point() {
        let mut d = Discriminator::new(DiscriminatorConfig::default(), 125, &mut rng::seeded(2, 0)).unwrap();
        let beat: Vec<f64> = (0..125).map(|i| (i as f64 * 0.1).sin().abs()).collect();
        let x = Discriminator::input(&[&beat, &vec![0.0; 125]]).unwrap();
        let logits = d.forward(&x).unwrap();
        let p = crate::nn::softmax(&logits);
        for row in p.outer_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12 && row.iter().all(|v| *v >= 0.0));
        }
        assert!(Discriminator::new(DiscriminatorConfig::default(), 20, &mut rng::seeded(2, 0)).is_err());
        assert!(d.forward(&Array3::zeros((1, 1, 124))).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_identical() {
        let mut g = small_gen(3);
        let beat: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).cos().abs()).collect();
        let before = g.generate(&[&beat], &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen_V1_1.ecgw");
        g.to_checkpoint(&BTreeMap::new()).save(&path).unwrap();
        let mut back = Generator::load(&path).unwrap();
        assert_eq!(back.generate(&[&beat], &[]).unwrap(), before);

        let mut d = Discriminator::new(DiscriminatorConfig { kernels: 4, fc_units: 5, ..Default::default() }, 60, &mut rng::seeded(4, 0)).unwrap();
        let x = Discriminator::input(&[&vec![0.3; 60]]).unwrap();
        let p = d.prob_real(&x).unwrap();
        let dpath = dir.path().join("disc_V1_1.ecgw");
        d.to_checkpoint(&BTreeMap::new()).save(&dpath).unwrap();
        assert_eq!(Discriminator::load(&dpath).unwrap().prob_real(&x).unwrap(), p);
        assert!(Generator::load(&dpath).is_err());
    }
}
