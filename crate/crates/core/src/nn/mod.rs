//! From-scratch neural network kernel.
//!
//! Layers own their parameters and a cache of the last forward pass;
//! `backward` consumes that cache, accumulates parameter gradients and returns
//! the gradient with respect to the layer input. Sequences are laid out
//! `(time, batch, features)` and convolution inputs `(batch, channels, length)`.
//! Everything runs in `f64`.

mod adam;
pub mod checkpoint;
mod conv;
mod dense;
pub mod gradcheck;
mod loss;
mod lstm;
mod param;

pub use adam::{Adam, AdamConfig};
pub use conv::{Conv1d, Flatten, MaxPool1d};
pub use dense::{Activation, Dense, TimeDistributedDense};
pub use loss::{
    binary_cross_entropy, cross_entropy, softmax, softmax_cross_entropy, PROB_CLAMP,
};
pub use lstm::{lstm_cell_forward, BiLstm, Lstm, LstmCell};
pub use param::Param;

use ndarray::{Array, Dimension};

use crate::Result;

pub trait Layer {
    type In: Dimension;
    type Out: Dimension;

    fn forward(&mut self, x: &Array<f64, Self::In>) -> Result<Array<f64, Self::Out>>;

    /// Requires a preceding [`forward`](Layer::forward); gradients accumulate
    /// into the parameters until [`zero_grad`](Layer::zero_grad).
    fn backward(&mut self, dy: &Array<f64, Self::Out>) -> Result<Array<f64, Self::In>>;

    fn params(&self) -> Vec<&Param>;

    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Distance of the last forward pass from a non-differentiable point
    /// (ReLU hinge, pooling tie). Smooth layers report infinity.
    fn nonsmooth_margin(&self) -> f64 {
        f64::INFINITY
    }
}
