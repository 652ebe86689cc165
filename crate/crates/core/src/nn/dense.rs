use ndarray::{Array2, Array3, Axis, Ix2, Ix3};
use rand::RngCore;

use super::{Layer, Param};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

impl Activation {
    pub(crate) fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::None => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Sigmoid => z.mapv_inplace(sigmoid),
        }
    }

    /// Turns `dy` into the gradient w.r.t. the pre-activation, given the
    /// activated output `y`.
    pub(crate) fn backprop(self, y: &Array2<f64>, dy: &mut Array2<f64>) {
        match self {
            Activation::None => {}
            Activation::Relu => dy.zip_mut_with(y, |d, &v| {
                if v <= 0.0 {
                    *d = 0.0
                }
            }),
            Activation::Sigmoid => dy.zip_mut_with(y, |d, &v| *d *= v * (1.0 - v)),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct DenseCache {
    x: Array2<f64>,
    y: Array2<f64>,
    pre: Array2<f64>,
}

/// Fully connected layer `y = act(x W + b)` on `(batch, in)` inputs.
pub struct Dense {
    pub w: Param,
    pub b: Param,
    pub activation: Activation,
    cache: Option<DenseCache>,
}

impl Dense {
    pub fn new(
        name: &str,
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut impl RngCore,
    ) -> Self {
        Self {
            w: Param::uniform(format!("{name}.w"), inputs, outputs, inputs, rng),
            b: Param::zeros(format!("{name}.b"), 1, outputs),
            activation,
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.value.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.value.ncols()
    }
}

impl Layer for Dense {
    type In = Ix2;
    type Out = Ix2;

    fn forward(&mut self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs() {
            return Err(Error::Shape(format!(
                "{}: expected {} input features, got {}",
                self.w.name,
                self.inputs(),
                x.ncols()
            )));
        }
        let pre = x.dot(&self.w.value) + &self.b.value;
        let mut y = pre.clone();
        self.activation.apply(&mut y);
        self.cache = Some(DenseCache {
            x: x.clone(),
            y: y.clone(),
            pre,
        });
        Ok(y)
    }

    fn backward(&mut self, dy: &Array2<f64>) -> Result<Array2<f64>> {
        let cache = self.cache.as_ref().ok_or(Error::NoForward("dense"))?;
        if dy.dim() != cache.y.dim() {
            return Err(Error::Shape("dense: gradient shape differs from output".into()));
        }
        let mut dz = dy.clone();
        self.activation.backprop(&cache.y, &mut dz);
        self.w.grad += &cache.x.t().dot(&dz);
        self.b.grad += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
        Ok(dz.dot(&self.w.value.t()))
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    fn nonsmooth_margin(&self) -> f64 {
        match (&self.cache, self.activation) {
            (Some(c), Activation::Relu) => c.pre.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
            _ => f64::INFINITY,
        }
    }
}

/// The same dense layer applied at every time step of a `(time, batch, in)`
/// sequence.
pub struct TimeDistributedDense {
    pub inner: Dense,
    steps: Option<(usize, usize)>,
}

impl TimeDistributedDense {
    pub fn new(inner: Dense) -> Self {
        Self { inner, steps: None }
    }
}

impl Layer for TimeDistributedDense {
    type In = Ix3;
    type Out = Ix3;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (t, b, f) = x.dim();
        let flat = x
            .to_shape((t * b, f))
            .map_err(|e| Error::Shape(e.to_string()))?
            .to_owned();
        let y = self.inner.forward(&flat)?;
        self.steps = Some((t, b));
        let out = self.inner.outputs();
        Ok(y.to_shape((t, b, out))
            .map_err(|e| Error::Shape(e.to_string()))?
            .to_owned())
    }

    fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let (t, b) = self.steps.ok_or(Error::NoForward("time-distributed dense"))?;
        let flat = dy
            .to_shape((t * b, dy.dim().2))
            .map_err(|e| Error::Shape(e.to_string()))?
            .to_owned();
        let dx = self.inner.backward(&flat)?;
        let f = dx.ncols();
        Ok(dx
            .to_shape((t, b, f))
            .map_err(|e| Error::Shape(e.to_string()))?
            .to_owned())
    }

    fn params(&self) -> Vec<&Param> {
        self.inner.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.inner.params_mut()
    }

    fn nonsmooth_margin(&self) -> f64 {
        self.inner.nonsmooth_margin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    #[test]
    fn dense_forward_by_hand() {
        let mut r = rng::seeded(1, 1);
        let mut d = Dense::new("d", 2, 1, Activation::None, &mut r);
        d.w.value = array![[2.0], [-1.0]];
        d.b.value = array![[0.5]];
        let y = d.forward(&array![[1.0, 3.0], [0.0, 0.0]]).unwrap();
        assert_eq!(y, array![[-0.5], [0.5]]);
        d.activation = Activation::Relu;
        assert_eq!(d.forward(&array![[1.0, 3.0]]).unwrap(), array![[0.0]]);
    }

    #[test]
    fn backward_before_forward_rejected() {
        let mut d = Dense::new("d", 2, 2, Activation::None, &mut rng::seeded(0, 0));
        assert!(matches!(d.backward(&Array2::zeros((1, 2))), Err(Error::NoForward(_))));
        assert!(d.forward(&Array2::zeros((1, 3))).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert!(sigmoid(800.0) <= 1.0);
    }
}
