//! Lead-to-lead GAN: bidirectional-LSTM generator, convolutional
//! discriminator, training with per-epoch checkpoints and FD-based epoch
//! selection.

mod eval;
mod model;
mod select;
mod train;

pub use eval::{control_beats, evaluate_split, generate_full_set, EvaluatedPair, ModelSet};
pub use model::{Discriminator, DiscriminatorConfig, Generator, GeneratorConfig, FAKE, REAL};
pub use select::{parse_trace_csv, select_epoch, trace_csv, Choice, EpochSelection, ModelKey, TraceRow};
pub use train::{init_discriminator, init_generator, train, Mode, ModelInfo, TrainConfig, TrainOutcome};

use crate::nn::PROB_CLAMP;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanLoss {
    /// Non-saturating `-E[log D(G(s))]`, the loss the generator trains on.
    pub generator: f64,
    /// `-(E[log D(q)] + E[log(1 - D(G(s)))])`.
    pub discriminator: f64,
    /// `E[log(1 - D(G(s)))]`, the generator's term of the minimax value.
    pub minimax_generator: f64,
}

/// Losses from `P(real)` on a real batch and a generated batch.
pub fn gan_loss(d_real: &[f64], d_fake: &[f64]) -> Result<GanLoss> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(Error::Empty("discriminator output batch"));
    }
    if d_real.iter().chain(d_fake).any(|p| p.is_nan()) {
        return Err(Error::InvalidArgument("NaN discriminator probability".into()));
    }
    let clamp = |p: f64| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|&p| f(clamp(p))).sum::<f64>() / v.len() as f64;
    let log_real = mean(d_real, &|p| p.ln());
    let log_not_fake = mean(d_fake, &|p| (1.0 - p).ln());
    Ok(GanLoss {
        generator: -mean(d_fake, &|p| p.ln()),
        discriminator: -(log_real + log_not_fake),
        minimax_generator: log_not_fake,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn optimum_and_max_entropy() {
        let l = gan_loss(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(l.discriminator.abs() < 1e-6);
        let l = gan_loss(&[0.5; 3], &[0.5; 4]).unwrap();
        assert!((l.discriminator - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((l.generator - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn matches_scalar_recomputation() {
        let mut r = rng::seeded(5, 5);
        let real: Vec<f64> = (0..17).map(|_| rng::uniform(&mut r, 0.01, 0.99)).collect();
        let fake: Vec<f64> = (0..9).map(|_| rng::uniform(&mut r, 0.01, 0.99)).collect();
        let l = gan_loss(&real, &fake).unwrap();
        let mut er = 0.0;
        for p in &real {
            er += p.ln();
        }
        er /= 17.0;
        let (mut ef, mut eg) = (0.0, 0.0);
        for p in &fake {
            ef += (1.0 - p).ln();
            eg += p.ln();
        }
        ef /= 9.0;
        eg /= 9.0;
        assert!((l.discriminator + er + ef).abs() < 1e-12);
        assert!((l.generator + eg).abs() < 1e-12);
    }

    #[test]
    fn nan_rejected() {
        assert!(gan_loss(&[f64::NAN], &[0.5]).is_err());
        assert!(gan_loss(&[], &[0.5]).is_err());
    }
}
