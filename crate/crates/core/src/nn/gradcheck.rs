//! Central-difference gradient checks.
//!
//! The probe loss is `sum(p * y)` for a fixed random projection `p`, so the
//! analytic path receives `p` as the output gradient.

use ndarray::{Array, Array2, Dimension};
use rand::RngCore;

use super::{softmax_cross_entropy, Layer, LstmCell};
use crate::{rng, Result};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor for the relative error.
pub const DENOM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub step: f64,
    /// Entries sampled per tensor; larger tensors are subsampled.
    pub max_entries: usize,
    pub seed: u64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self { step: STEP, max_entries: 64, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub max_rel_error: f64,
    pub worst: String,
    pub checked: usize,
    /// Distance of the unperturbed pass from the nearest kink.
    pub margin: f64,
}

impl GradReport {
    fn new(margin: f64) -> Self {
        Self { max_rel_error: 0.0, worst: String::new(), checked: 0, margin }
    }

    fn record(&mut self, what: impl FnOnce() -> String, analytic: f64, numeric: f64) {
        let e = relative_error(analytic, numeric);
        self.checked += 1;
        if e > self.max_rel_error || self.worst.is_empty() {
            self.max_rel_error = e.max(self.max_rel_error);
            if e >= self.max_rel_error {
                self.worst = format!("{} (analytic {analytic:e}, numeric {numeric:e})", what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
}

fn sample_indices(len: usize, max: usize, rng: &mut impl RngCore) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    (0..max).map(|_| rng::below(rng, len as u64) as usize).collect()
}

fn projection<D: Dimension>(shape: D, rng: &mut impl RngCore) -> Array<f64, D> {
    Array::from_shape_simple_fn(shape, || rng::uniform(rng, -1.0, 1.0))
}

fn probe<D: Dimension>(y: &Array<f64, D>, p: &Array<f64, D>) -> f64 {
    y.iter().zip(p.iter()).map(|(a, b)| a * b).sum()
}

/// Checks input and parameter gradients of `layer` at `x`.
pub fn check_layer<L: Layer>(layer: &mut L, x: &Array<f64, L::In>, opts: &GradCheck) -> Result<GradReport> {
    let mut r = rng::seeded(opts.seed, 0x6772);
    let x = x.as_standard_layout().to_owned();
    let y = layer.forward(&x)?;
    let margin = layer.nonsmooth_margin();
    let p = projection(y.raw_dim(), &mut r);
    layer.zero_grad();
    let dx = layer.backward(&p)?;
    let analytic: Vec<Vec<f64>> = layer.params().iter().map(|q| q.grad.iter().copied().collect()).collect();
    let mut report = GradReport::new(margin);
    let h = opts.step;

    let dx = dx.as_standard_layout().to_owned();
    let dxs = dx.as_slice().expect("standard layout");
    for k in sample_indices(x.len(), opts.max_entries, &mut r) {
        let mut xp = x.clone();
        xp.as_slice_mut().expect("standard layout")[k] += h;
        let lp = probe(&layer.forward(&xp)?, &p);
        xp.as_slice_mut().expect("standard layout")[k] -= 2.0 * h;
        let lm = probe(&layer.forward(&xp)?, &p);
        report.record(|| format!("input[{k}]"), dxs[k], (lp - lm) / (2.0 * h));
    }

    let n_params = analytic.len();
    for pi in 0..n_params {
        let len = analytic[pi].len();
        for k in sample_indices(len, opts.max_entries, &mut r) {
            let orig = nudge(layer, pi, k, None);
            nudge(layer, pi, k, Some(orig + h));
            let lp = probe(&layer.forward(&x)?, &p);
            nudge(layer, pi, k, Some(orig - h));
            let lm = probe(&layer.forward(&x)?, &p);
            nudge(layer, pi, k, Some(orig));
            let name = layer.params()[pi].name.clone();
            report.record(|| format!("{name}[{k}]"), analytic[pi][k], (lp - lm) / (2.0 * h));
        }
    }
    Ok(report)
}

fn nudge<L: Layer>(layer: &mut L, pi: usize, k: usize, set: Option<f64>) -> f64 {
    let mut params = layer.params_mut();
    let v = params[pi].value.iter_mut().nth(k).expect("index in range");
    let old = *v;
    if let Some(s) = set {
        *v = s;
    }
    old
}

/// One LSTM cell step with probe loss `sum(p * h') + sum(q * c')`, checking
/// gradients w.r.t. `x`, `h`, `c` and the weights.
pub fn check_lstm_cell(
    cell: &mut LstmCell,
    x: &Array2<f64>,
    h: &Array2<f64>,
    c: &Array2<f64>,
    opts: &GradCheck,
) -> Result<GradReport> {
    let mut r = rng::seeded(opts.seed, 0x6c73);
    let (h1, c1, cache) = cell.step(x.view(), h, c)?;
    let ph = projection(h1.raw_dim(), &mut r);
    let pc = projection(c1.raw_dim(), &mut r);
    for q in cell.params_mut() {
        q.zero_grad();
    }
    let (dx, dh, dc) = cell.step_backward(&cache, &ph, &pc);
    let loss = |cell: &LstmCell, x: &Array2<f64>, h: &Array2<f64>, c: &Array2<f64>| -> Result<f64> {
        let (h1, c1, _) = cell.step(x.view(), h, c)?;
        Ok(probe(&h1, &ph) + probe(&c1, &pc))
    };
    let hs = opts.step;
    let mut report = GradReport::new(f64::INFINITY);
    let inputs = [("x", x, &dx), ("h", h, &dh), ("c", c, &dc)];
    for (which, (tag, base, grad)) in inputs.into_iter().enumerate() {
        for k in sample_indices(base.len(), opts.max_entries, &mut r) {
            let mut vals = [x.clone(), h.clone(), c.clone()];
            let slot = vals[which].iter_mut().nth(k).unwrap();
            *slot += hs;
            let lp = loss(cell, &vals[0], &vals[1], &vals[2])?;
            *vals[which].iter_mut().nth(k).unwrap() -= 2.0 * hs;
            let lm = loss(cell, &vals[0], &vals[1], &vals[2])?;
            let a = *grad.iter().nth(k).unwrap();
            report.record(|| format!("{tag}[{k}]"), a, (lp - lm) / (2.0 * hs));
        }
        let _ = base;
    }
    let analytic: Vec<Vec<f64>> = cell.params().iter().map(|q| q.grad.iter().copied().collect()).collect();
    for (pi, grads) in analytic.iter().enumerate() {
        for k in sample_indices(grads.len(), opts.max_entries, &mut r) {
            let orig = *cell.params_mut()[pi].value.iter().nth(k).unwrap();
            *cell.params_mut()[pi].value.iter_mut().nth(k).unwrap() = orig + hs;
            let lp = loss(cell, x, h, c)?;
            *cell.params_mut()[pi].value.iter_mut().nth(k).unwrap() = orig - hs;
            let lm = loss(cell, x, h, c)?;
            *cell.params_mut()[pi].value.iter_mut().nth(k).unwrap() = orig;
            let name = cell.params()[pi].name.clone();
            report.record(|| format!("{name}[{k}]"), grads[k], (lp - lm) / (2.0 * hs));
        }
    }
    Ok(report)
}

/// Gradient of the mean softmax cross-entropy w.r.t. the logits.
pub fn check_softmax_cross_entropy(logits: &Array2<f64>, labels: &[usize], opts: &GradCheck) -> Result<GradReport> {
    let (_, grad) = softmax_cross_entropy(logits, labels)?;
    let mut report = GradReport::new(f64::INFINITY);
    let h = opts.step;
    for k in 0..logits.len() {
        let mut l = logits.as_standard_layout().to_owned();
        l.as_slice_mut().unwrap()[k] += h;
        let lp = softmax_cross_entropy(&l, labels)?.0;
        l.as_slice_mut().unwrap()[k] -= 2.0 * h;
        let lm = softmax_cross_entropy(&l, labels)?.0;
        let a = grad.as_standard_layout().as_slice().unwrap()[k];
        report.record(|| format!("logit[{k}]"), a, (lp - lm) / (2.0 * h));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, BiLstm, Conv1d, Dense, Flatten, Lstm, MaxPool1d, TimeDistributedDense};
    use ndarray::{Array2, Array3};

    fn rand2(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::seeded(seed, 99);
        Array2::from_shape_simple_fn((rows, cols), || rng::uniform(&mut r, -1.0, 1.0))
    }

    fn rand3(shape: (usize, usize, usize), seed: u64) -> Array3<f64> {
        let mut r = rng::seeded(seed, 98);
        Array3::from_shape_simple_fn(shape, || rng::uniform(&mut r, -1.0, 1.0))
    }

    fn assert_ok(report: GradReport) {
        assert!(report.passed(), "{report:?}");
        assert!(report.checked > 0);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.0001) - 1e-4 / 1.0001).abs() < 1e-12);
        assert_eq!(relative_error(0.0, 1e-12), 1e-6);
    }

    #[test]
    fn dense_sigmoid() {
        let mut d = Dense::new("d", 4, 3, Activation::Sigmoid, &mut rng::seeded(1, 0));
        assert_ok(check_layer(&mut d, &rand2(5, 4, 1), &GradCheck::default()).unwrap());
    }

    #[test]
    fn lstm_cell_all_inputs() {
        let mut cell = LstmCell::new("c", 3, 4, &mut rng::seeded(2, 0));
        let r = check_lstm_cell(&mut cell, &rand2(2, 3, 1), &rand2(2, 4, 2), &rand2(2, 4, 3), &GradCheck::default());
        assert_ok(r.unwrap());
    }

    #[test]
    fn lstm_and_bilstm_sequences() {
        let mut l = Lstm::new("l", 2, 3, true, &mut rng::seeded(3, 0));
        assert_ok(check_layer(&mut l, &rand3((6, 2, 2), 4), &GradCheck::default()).unwrap());
        let mut b = BiLstm::new("b", 2, 3, &mut rng::seeded(4, 0));
        assert_ok(check_layer(&mut b, &rand3((5, 2, 2), 5), &GradCheck::default()).unwrap());
    }

    #[test]
    fn time_distributed() {
        let mut t = TimeDistributedDense::new(Dense::new("t", 3, 1, Activation::Sigmoid, &mut rng::seeded(5, 0)));
        assert_ok(check_layer(&mut t, &rand3((4, 2, 3), 6), &GradCheck::default()).unwrap());
    }

    #[test]
    fn conv_pool_flatten() {
        let mut c = Conv1d::new("c", 2, 3, 3, 2, Activation::None, &mut rng::seeded(6, 0));
        assert_ok(check_layer(&mut c, &rand3((2, 2, 11), 7), &GradCheck::default()).unwrap());
        let mut p = MaxPool1d::new(2, 2);
        let rep = check_layer(&mut p, &rand3((2, 2, 9), 8), &GradCheck::default()).unwrap();
        assert!(rep.margin > 1e-3);
        assert_ok(rep);
        assert_ok(check_layer(&mut Flatten::new(), &rand3((2, 3, 4), 9), &GradCheck::default()).unwrap());
    }

    #[test]
    fn softmax_ce() {
        let r = check_softmax_cross_entropy(&rand2(4, 2, 3), &[0, 1, 1, 0], &GradCheck::default());
        assert_ok(r.unwrap());
    }

    #[test]
    fn broken_gradient_is_caught() {
        struct Wrong(Dense);
        impl Layer for Wrong {
            type In = ndarray::Ix2;
            type Out = ndarray::Ix2;
            fn forward(&mut self, x: &Array2<f64>) -> Result<Array2<f64>> {
                self.0.forward(x)
            }
            fn backward(&mut self, dy: &Array2<f64>) -> Result<Array2<f64>> {
                Ok(self.0.backward(dy)? * 1.01)
            }
            fn params(&self) -> Vec<&crate::nn::Param> {
                self.0.params()
            }
            fn params_mut(&mut self) -> Vec<&mut crate::nn::Param> {
                self.0.params_mut()
            }
        }
        let mut w = Wrong(Dense::new("d", 3, 2, Activation::None, &mut rng::seeded(0, 0)));
        assert!(!check_layer(&mut w, &rand2(2, 3, 0), &GradCheck::default()).unwrap().passed());
    }
}
