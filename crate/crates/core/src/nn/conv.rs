use ndarray::{Array2, Array3, Axis, Ix2, Ix3};
use rand::RngCore;

use super::{Activation, Layer, Param};
use crate::{Error, Result};

fn out_len(len: usize, size: usize, stride: usize) -> Option<usize> {
    (len >= size).then(|| (len - size) / stride + 1)
}

struct ConvCache {
    patches: Vec<Array2<f64>>,
    y: Array3<f64>,
    pre: Array3<f64>,
    in_len: usize,
}

/// Valid-padding 1-D convolution over `(batch, channels, length)` with an
/// optional activation. The kernel is stored as `(filters, channels * size)`.
pub struct Conv1d {
    pub w: Param,
    pub b: Param,
    pub in_channels: usize,
    pub size: usize,
    pub stride: usize,
    pub activation: Activation,
    cache: Option<ConvCache>,
}

impl Conv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        in_channels: usize,
        filters: usize,
        size: usize,
        stride: usize,
        activation: Activation,
        rng: &mut impl RngCore,
    ) -> Self {
        assert!(size > 0 && stride > 0, "kernel size and stride must be positive");
        let fan_in = in_channels * size;
        Self {
            w: Param::uniform(format!("{name}.w"), filters, fan_in, fan_in, rng),
            b: Param::zeros(format!("{name}.b"), 1, filters),
            in_channels,
            size,
            stride,
            activation,
            cache: None,
        }
    }

    pub fn filters(&self) -> usize {
        self.w.value.nrows()
    }

    pub fn output_len(&self, len: usize) -> Option<usize> {
        out_len(len, self.size, self.stride)
    }
}

impl Layer for Conv1d {
    type In = Ix3;
    type Out = Ix3;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (batch, ch, len) = x.dim();
        if ch != self.in_channels {
            return Err(Error::Shape(format!(
                "{}: expected {} channels, got {ch}",
                self.w.name, self.in_channels
            )));
        }
        let lo = self.output_len(len).ok_or_else(|| {
            Error::Shape(format!("{}: input length {len} below kernel {}", self.w.name, self.size))
        })?;
        let k = self.filters();
        let mut pre = Array3::zeros((batch, k, lo));
        let mut patches = Vec::with_capacity(batch);
        for bi in 0..batch {
            let mut p = Array2::zeros((lo, ch * self.size));
            for o in 0..lo {
                for c in 0..ch {
                    for f in 0..self.size {
                        p[[o, c * self.size + f]] = x[[bi, c, o * self.stride + f]];
                    }
                }
            }
            let z = p.dot(&self.w.value.t()) + &self.b.value;
            pre.index_axis_mut(Axis(0), bi).assign(&z.t());
            patches.push(p);
        }
        let mut y = pre.clone();
        match self.activation {
            Activation::None => {}
            Activation::Relu => y.mapv_inplace(|v| v.max(0.0)),
            Activation::Sigmoid => y.mapv_inplace(super::dense::sigmoid),
        }
        self.cache = Some(ConvCache { patches, y: y.clone(), pre, in_len: len });
        Ok(y)
    }

    fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let cache = self.cache.as_ref().ok_or(Error::NoForward("conv1d"))?;
        if dy.dim() != cache.y.dim() {
            return Err(Error::Shape("conv1d: gradient shape differs from output".into()));
        }
        let (batch, _, lo) = dy.dim();
        let ch = self.in_channels;
        let mut dx = Array3::zeros((batch, ch, cache.in_len));
        for bi in 0..batch {
            let mut dz = dy.index_axis(Axis(0), bi).t().to_owned();
            let y = cache.y.index_axis(Axis(0), bi).t().to_owned();
            self.activation.backprop(&y, &mut dz);
            let p = &cache.patches[bi];
            self.w.grad += &dz.t().dot(p);
            self.b.grad += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
            let dp = dz.dot(&self.w.value);
            for o in 0..lo {
                for c in 0..ch {
                    for f in 0..self.size {
                        dx[[bi, c, o * self.stride + f]] += dp[[o, c * self.size + f]];
                    }
                }
            }
        }
        Ok(dx)
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

/// Max pooling along the length axis. Ties go to the first maximum.
pub struct MaxPool1d {
    pub size: usize,
    pub stride: usize,
    cache: Option<(Array3<usize>, usize, f64)>,
}

impl MaxPool1d {
    pub fn new(size: usize, stride: usize) -> Self {
        assert!(size > 0 && stride > 0, "pool size and stride must be positive");
        Self { size, stride, cache: None }
    }

    pub fn output_len(&self, len: usize) -> Option<usize> {
        out_len(len, self.size, self.stride)
    }
}

impl Layer for MaxPool1d {
    type In = Ix3;
    type Out = Ix3;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (batch, ch, len) = x.dim();
        let lo = self.output_len(len).ok_or_else(|| {
            Error::Shape(format!("maxpool: input length {len} below window {}", self.size))
        })?;
        let mut y = Array3::zeros((batch, ch, lo));
        let mut arg = Array3::zeros((batch, ch, lo));
        let mut margin = f64::INFINITY;
        for bi in 0..batch {
            for c in 0..ch {
                for o in 0..lo {
                    let start = o * self.stride;
                    let mut best = start;
                    let mut second = f64::NEG_INFINITY;
                    for j in start + 1..start + self.size {
                        let v = x[[bi, c, j]];
                        if v > x[[bi, c, best]] {
                            second = x[[bi, c, best]];
                            best = j;
                        } else {
                            second = second.max(v);
                        }
                    }
                    let top = x[[bi, c, best]];
                    // an all-zero window behind a ReLU stays zero under perturbation
                    if !(top == 0.0 && second == 0.0) {
                        margin = margin.min(top - second);
                    }
                    y[[bi, c, o]] = top;
                    arg[[bi, c, o]] = best;
                }
            }
        }
        self.cache = Some((arg, len, margin));
        Ok(y)
    }

    fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let (arg, len, _) = self.cache.as_ref().ok_or(Error::NoForward("maxpool"))?;
        if dy.dim() != arg.dim() {
            return Err(Error::Shape("maxpool: gradient shape differs from output".into()));
        }
        let (batch, ch, lo) = dy.dim();
        let mut dx = Array3::zeros((batch, ch, *len));
        for bi in 0..batch {
            for c in 0..ch {
                for o in 0..lo {
                    dx[[bi, c, arg[[bi, c, o]]]] += dy[[bi, c, o]];
                }
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    fn nonsmooth_margin(&self) -> f64 {
        self.cache.as_ref().map_or(f64::INFINITY, |c| c.2)
    }
}

/// `(batch, channels, length)` to `(batch, channels * length)`, row-major.
#[derive(Default)]
pub struct Flatten {
    shape: Option<(usize, usize, usize)>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for Flatten {
    type In = Ix3;
    type Out = Ix2;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array2<f64>> {
        let (b, c, l) = x.dim();
        self.shape = Some((b, c, l));
        Ok(x.to_shape((b, c * l))
            .map_err(|e| Error::Shape(e.to_string()))?
            .to_owned())
    }

    fn backward(&mut self, dy: &Array2<f64>) -> Result<Array3<f64>> {
        let shape = self.shape.ok_or(Error::NoForward("flatten"))?;
        Ok(dy.to_shape(shape)
            .map_err(|e| Error::Shape(e.to_string()))?
            .to_owned())
    }

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    fn naive_conv(x: &Array3<f64>, w: &Array2<f64>, b: &Array2<f64>, size: usize, stride: usize) -> Array3<f64> {
        let (batch, ch, len) = x.dim();
        let lo = (len - size) / stride + 1;
        Array3::from_shape_fn((batch, w.nrows(), lo), |(n, k, o)| {
            let mut s = b[[0, k]];
            for c in 0..ch {
                for f in 0..size {
                    s += w[[k, c * size + f]] * x[[n, c, o * stride + f]];
                }
            }
            s
        })
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut r = rng::seeded(5, 0);
        let mut conv = Conv1d::new("c", 2, 4, 3, 3, Activation::None, &mut r);
        conv.b.value.mapv_inplace(|_| 0.25);
        let x = Array3::from_shape_fn((3, 2, 20), |(a, b, c)| ((a * 7 + b * 3 + c) as f64).sin());
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.dim(), (3, 4, 6));
        let want = naive_conv(&x, &conv.w.value, &conv.b.value, 3, 3);
        for (a, b) in y.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_output_lengths() {
        let conv = Conv1d::new("c", 1, 64, 3, 3, Activation::Relu, &mut rng::seeded(0, 0));
        assert_eq!(conv.output_len(125), Some(41));
        assert_eq!(conv.output_len(2), None);
        assert_eq!(MaxPool1d::new(2, 2).output_len(41), Some(20));
    }

    #[test]
    fn pool_ties_go_first() {
        let mut p = MaxPool1d::new(2, 2);
        let x = array![[[1.0, 1.0, 0.0, 3.0, 5.0]]];
        assert_eq!(p.forward(&x).unwrap(), array![[[1.0, 3.0]]]);
        let dx = p.backward(&array![[[10.0, 20.0]]]).unwrap();
        assert_eq!(dx, array![[[10.0, 0.0, 0.0, 20.0, 0.0]]]);
        assert_eq!(p.nonsmooth_margin(), 0.0);
    }

    #[test]
    fn flatten_round_trip() {
        let mut f = Flatten::new();
        let x = Array3::from_shape_fn((2, 3, 4), |(a, b, c)| (a * 100 + b * 10 + c) as f64);
        let y = f.forward(&x).unwrap();
        assert_eq!(y[[1, 5]], 111.0);
        assert_eq!(f.backward(&y).unwrap(), x);
    }

    #[test]
    fn hand_examples() {
        let mut r = rng::seeded(0, 0);
        let mut id = Conv1d::new("c", 1, 1, 1, 1, Activation::None, &mut r);
        id.w.value.fill(1.0);
        let x = array![[[0.5, -1.0, 2.0]]];
        assert_eq!(id.forward(&x).unwrap(), x);
        let mut sum3 = Conv1d::new("c", 1, 1, 3, 3, Activation::None, &mut r);
        sum3.w.value.fill(1.0);
        let y = sum3.forward(&array![[[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]]).unwrap();
        assert_eq!(y, array![[[6.0, 15.0]]]);
        assert!(sum3.forward(&array![[[1.0, 2.0]]]).is_err());
        let mut p = MaxPool1d::new(2, 2);
        assert_eq!(p.forward(&array![[[1.0, 3.0, 2.0, 5.0]]]).unwrap(), array![[[3.0, 5.0]]]);
        assert_eq!(p.forward(&array![[[4.0, 4.0, 4.0, 4.0]]]).unwrap(), array![[[4.0, 4.0]]]);
    }

    #[test]
    fn pool_matches_naive() {
        let x = Array3::from_shape_fn((2, 3, 13), |(a, b, c)| ((a * 31 + b * 7 + c * 3) as f64).cos());
        let y = MaxPool1d::new(2, 2).forward(&x).unwrap();
        for ((a, b, o), v) in y.indexed_iter() {
            assert_eq!(*v, x[[a, b, 2 * o]].max(x[[a, b, 2 * o + 1]]));
        }
    }
}
