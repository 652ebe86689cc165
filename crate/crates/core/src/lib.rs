//! Single-lead to twelve-lead ECG reconstruction.
//!
//! The crate is organised as a pipeline:
//!
//! - [`signal`]: lead identities, waveforms, the binary/CSV signal formats and a
//!   synthetic PQRST generator used in place of clinical recordings.
//! - [`preprocess`]: Daubechies wavelet denoising with windowed adaptive
//!   thresholding, min-max normalisation, R-peak detection and heartbeat
//!   segmentation.
//! - [`nn`]: a small from-scratch neural network kernel (dense, LSTM,
//!   bidirectional LSTM, 1D convolution, pooling, losses, Adam, gradient checks,
//!   checkpoints).
//! - [`gan`]: the BiLSTM generator / 1D-CNN discriminator pair, its training
//!   loop and validation-driven epoch selection.
//! - [`metrics`]: discrete Fréchet distance, cross/auto-correlation, Pearson
//!   matrices and evaluation reports.
//! - [`data`]: beat-pair construction, seeded splits and corpus persistence.
//! - [`cli`]: the command implementations behind the `ecgforge` binary.

pub mod cli;
pub mod config;
pub mod data;
mod error;
pub mod fsutil;
pub mod gan;
pub mod metrics;
pub mod nn;
pub mod parallel;
pub mod preprocess;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{EcgSignal, LeadId, PatientId};
