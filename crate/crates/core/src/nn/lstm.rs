use ndarray::{concatenate, s, Array2, Array3, ArrayView2, Axis, Ix3};
use rand::RngCore;

use super::dense::sigmoid;
use super::{Layer, Param};
use crate::{Error, Result};

/// Weights of one LSTM cell with gates packed `[input, forget, cell, output]`
/// along the columns.
pub struct LstmCell {
    pub w_x: Param,
    pub w_h: Param,
    pub b: Param,
}

pub(crate) struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    tanh_c: Array2<f64>,
}

impl LstmCell {
    /// Forget-gate bias starts at 1, the rest at 0.
    pub fn new(name: &str, inputs: usize, hidden: usize, rng: &mut impl RngCore) -> Self {
        let fan_in = inputs + hidden;
        let mut b = Param::zeros(format!("{name}.b"), 1, 4 * hidden);
        b.value.slice_mut(s![.., hidden..2 * hidden]).fill(1.0);
        Self {
            w_x: Param::uniform(format!("{name}.w_x"), inputs, 4 * hidden, fan_in, rng),
            w_h: Param::uniform(format!("{name}.w_h"), hidden, 4 * hidden, fan_in, rng),
            b,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w_x.value.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w_h.value.nrows()
    }

    fn check(&self, x: &ArrayView2<f64>, h: &Array2<f64>, c: &Array2<f64>) -> Result<()> {
        let hd = self.hidden();
        if x.ncols() != self.inputs() || h.dim() != (x.nrows(), hd) || c.dim() != h.dim() {
            return Err(Error::Shape(format!(
                "{}: x {:?}, h {:?}, c {:?} for {} inputs and {hd} hidden",
                self.w_x.name,
                x.dim(),
                h.dim(),
                c.dim(),
                self.inputs()
            )));
        }
        Ok(())
    }

    pub(crate) fn step(
        &self,
        x: ArrayView2<f64>,
        h: &Array2<f64>,
        c: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>, StepCache)> {
        self.check(&x, h, c)?;
        let hd = self.hidden();
        let z = x.dot(&self.w_x.value) + h.dot(&self.w_h.value) + &self.b.value;
        let i = z.slice(s![.., 0..hd]).mapv(sigmoid);
        let f = z.slice(s![.., hd..2 * hd]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * hd..3 * hd]).mapv(f64::tanh);
        let o = z.slice(s![.., 3 * hd..]).mapv(sigmoid);
        let c_new = &f * c + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        let cache = StepCache {
            x: x.to_owned(),
            h_prev: h.clone(),
            c_prev: c.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
        };
        Ok((h_new, c_new, cache))
    }

    /// Returns `(dx, dh_prev, dc_prev)` and accumulates weight gradients.
    pub(crate) fn step_backward(
        &mut self,
        cache: &StepCache,
        dh: &Array2<f64>,
        dc_next: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let StepCache { x, h_prev, c_prev, i, f, g, o, tanh_c } = cache;
        let d_o = dh * tanh_c;
        let dc = dc_next + &(dh * o * &tanh_c.mapv(|t| 1.0 - t * t));
        let dz_i = &dc * g * &i.mapv(|v| v * (1.0 - v));
        let dz_f = &dc * c_prev * &f.mapv(|v| v * (1.0 - v));
        let dz_g = &dc * i * &g.mapv(|v| 1.0 - v * v);
        let dz_o = &d_o * &o.mapv(|v| v * (1.0 - v));
        let dz = concatenate![Axis(1), dz_i, dz_f, dz_g, dz_o];
        self.w_x.grad += &x.t().dot(&dz);
        self.w_h.grad += &h_prev.t().dot(&dz);
        self.b.grad += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dx = dz.dot(&self.w_x.value.t());
        let dh_prev = dz.dot(&self.w_h.value.t());
        let dc_prev = dc * f;
        (dx, dh_prev, dc_prev)
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w_x, &self.w_h, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }
}

/// One cell step: `(x_t, h_{t-1}, c_{t-1}) -> (h_t, c_t)` on `(batch, _)` rows.
pub fn lstm_cell_forward(
    cell: &LstmCell,
    x: &Array2<f64>,
    h: &Array2<f64>,
    c: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (h, c, _) = cell.step(x.view(), h, c)?;
    Ok((h, c))
}

/// Unidirectional LSTM over `(time, batch, in)`, zero initial state, emitting
/// every hidden state. A reversed LSTM reads the sequence back to front but
/// writes each output at its original time index.
pub struct Lstm {
    pub cell: LstmCell,
    pub reverse: bool,
    caches: Vec<StepCache>,
}

impl Lstm {
    pub fn new(name: &str, inputs: usize, hidden: usize, reverse: bool, rng: &mut impl RngCore) -> Self {
        Self {
            cell: LstmCell::new(name, inputs, hidden, rng),
            reverse,
            caches: Vec::new(),
        }
    }

    fn order(&self, t: usize) -> Vec<usize> {
        if self.reverse {
            (0..t).rev().collect()
        } else {
            (0..t).collect()
        }
    }
}

impl Layer for Lstm {
    type In = Ix3;
    type Out = Ix3;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (t, b, _) = x.dim();
        if t == 0 {
            return Err(Error::Shape("lstm: empty sequence".into()));
        }
        let hd = self.cell.hidden();
        let mut h = Array2::zeros((b, hd));
        let mut c = Array2::zeros((b, hd));
        let mut out = Array3::zeros((t, b, hd));
        self.caches.clear();
        for step in self.order(t) {
            let (h2, c2, cache) = self.cell.step(x.index_axis(Axis(0), step), &h, &c)?;
            out.index_axis_mut(Axis(0), step).assign(&h2);
            self.caches.push(cache);
            h = h2;
            c = c2;
        }
        Ok(out)
    }

    fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        if self.caches.is_empty() {
            return Err(Error::NoForward("lstm"));
        }
        let (t, b, hd) = dy.dim();
        if t != self.caches.len() || hd != self.cell.hidden() {
            return Err(Error::Shape("lstm: gradient shape differs from output".into()));
        }
        let caches = std::mem::take(&mut self.caches);
        let mut dx = Array3::zeros((t, b, self.cell.inputs()));
        let mut dh_next = Array2::zeros((b, hd));
        let mut dc_next = Array2::zeros((b, hd));
        for (k, step) in self.order(t).into_iter().enumerate().rev() {
            let dh = &dy.index_axis(Axis(0), step) + &dh_next;
            let (dxs, dhp, dcp) = self.cell.step_backward(&caches[k], &dh, &dc_next);
            dx.index_axis_mut(Axis(0), step).assign(&dxs);
            dh_next = dhp;
            dc_next = dcp;
        }
        self.caches = caches;
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        self.cell.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.cell.params_mut()
    }
}

/// Forward and backward LSTMs over the same input, outputs concatenated
/// `[forward, backward]` along the feature axis.
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

impl BiLstm {
    pub fn new(name: &str, inputs: usize, hidden: usize, rng: &mut impl RngCore) -> Self {
        Self {
            fwd: Lstm::new(&format!("{name}.fwd"), inputs, hidden, false, rng),
            bwd: Lstm::new(&format!("{name}.bwd"), inputs, hidden, true, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.cell.hidden()
    }

    pub fn outputs(&self) -> usize {
        2 * self.hidden()
    }
}

impl Layer for BiLstm {
    type In = Ix3;
    type Out = Ix3;

    fn forward(&mut self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let a = self.fwd.forward(x)?;
        let b = self.bwd.forward(x)?;
        Ok(concatenate![Axis(2), a, b])
    }

    fn backward(&mut self, dy: &Array3<f64>) -> Result<Array3<f64>> {
        let hd = self.hidden();
        if dy.dim().2 != 2 * hd {
            return Err(Error::Shape("bilstm: gradient shape differs from output".into()));
        }
        let da = dy.slice(s![.., .., ..hd]).to_owned();
        let db = dy.slice(s![.., .., hd..]).to_owned();
        let dx = self.fwd.backward(&da)?;
        Ok(dx + self.bwd.backward(&db)?)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.fwd.params();
        p.extend(self.bwd.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.fwd.params_mut();
        p.extend(self.bwd.params_mut());
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    #[test]
    fn cell_by_hand() {
        // one unit, zero weights: gates are sigmoid(b), g = tanh(0) = 0
        let mut cell = LstmCell::new("c", 1, 1, &mut rng::seeded(0, 0));
        cell.w_x.value.fill(0.0);
        cell.w_h.value.fill(0.0);
        cell.b.value = array![[0.0, 0.0, 0.0, 0.0]];
        let (h, c) = lstm_cell_forward(&cell, &array![[1.0]], &array![[0.0]], &array![[2.0]]).unwrap();
        assert!((c[[0, 0]] - 1.0).abs() < 1e-15);
        assert!((h[[0, 0]] - 0.5 * 1f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn forget_bias_is_one() {
        let cell = LstmCell::new("c", 3, 4, &mut rng::seeded(0, 0));
        assert_eq!(cell.b.value.slice(s![0, 4..8]).to_vec(), vec![1.0; 4]);
        assert_eq!(cell.b.value.slice(s![0, 0..4]).to_vec(), vec![0.0; 4]);
    }

    #[test]
    fn reverse_reads_back_to_front() {
        let mut r = rng::seeded(3, 3);
        let mut fwd = Lstm::new("l", 1, 2, false, &mut r);
        let mut bwd = Lstm::new("l", 1, 2, true, &mut rng::seeded(3, 3));
        let x = Array3::from_shape_fn((5, 1, 1), |(t, _, _)| t as f64 * 0.3 - 0.5);
        let xr = Array3::from_shape_fn((5, 1, 1), |(t, _, _)| (4 - t) as f64 * 0.3 - 0.5);
        let a = fwd.forward(&x).unwrap();
        let b = bwd.forward(&xr).unwrap();
        for t in 0..5 {
            assert_eq!(a.index_axis(Axis(0), t), b.index_axis(Axis(0), 4 - t));
        }
    }

    #[test]
    fn bilstm_shapes() {
        let mut l = BiLstm::new("b", 1, 3, &mut rng::seeded(0, 1));
        let y = l.forward(&Array3::zeros((7, 2, 1))).unwrap();
        assert_eq!(y.dim(), (7, 2, 6));
        assert_eq!(l.backward(&y).unwrap().dim(), (7, 2, 1));
        assert!(l.forward(&Array3::zeros((7, 2, 2))).is_err());
    }

    fn scalar_cell(cell: &LstmCell, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hd = h.len();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut hn = vec![0.0; hd];
        let mut cn = vec![0.0; hd];
        for u in 0..hd {
            let z = |gate: usize| {
                let col = gate * hd + u;
                let mut s = cell.b.value[[0, col]];
                for (k, xv) in x.iter().enumerate() {
                    s += xv * cell.w_x.value[[k, col]];
                }
                for (k, hv) in h.iter().enumerate() {
                    s += hv * cell.w_h.value[[k, col]];
                }
                s
            };
            let (i, f, g, o) = (sig(z(0)), sig(z(1)), z(2).tanh(), sig(z(3)));
            cn[u] = f * c[u] + i * g;
            hn[u] = o * cn[u].tanh();
        }
        (hn, cn)
    }

    #[test]
    fn cell_matches_scalar_oracle() {
        let mut r = rng::seeded(11, 0);
        let cell = LstmCell::new("c", 3, 5, &mut r);
        let x = Array2::from_shape_fn((1, 3), |(_, k)| 0.3 * k as f64 - 0.4);
        let h = Array2::from_shape_fn((1, 5), |(_, k)| 0.1 * k as f64 - 0.2);
        let c = Array2::from_shape_fn((1, 5), |(_, k)| 0.5 - 0.2 * k as f64);
        let (h1, c1) = lstm_cell_forward(&cell, &x, &h, &c).unwrap();
        let (hs, cs) = scalar_cell(&cell, x.as_slice().unwrap(), h.as_slice().unwrap(), c.as_slice().unwrap());
        for u in 0..5 {
            assert!((h1[[0, u]] - hs[u]).abs() < 1e-14);
            assert!((c1[[0, u]] - cs[u]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_weights_zero_state() {
        let mut cell = LstmCell::new("c", 2, 3, &mut rng::seeded(0, 0));
        for p in cell.params_mut() {
            p.value.fill(0.0);
        }
        let z = Array2::zeros((1, 3));
        let (h, c) = lstm_cell_forward(&cell, &Array2::zeros((1, 2)), &z, &z).unwrap();
        assert_eq!(h, z);
        assert_eq!(c, z);
    }

    #[test]
    fn saturated_gates_keep_cell_state() {
        let mut cell = LstmCell::new("c", 1, 2, &mut rng::seeded(0, 0));
        cell.w_x.value.fill(0.0);
        cell.w_h.value.fill(0.0);
        cell.b.value = array![[-800.0, -800.0, 800.0, 800.0, 0.3, 0.3, 0.0, 0.0]];
        let c = array![[0.7, -1.3]];
        let (_, c1) = lstm_cell_forward(&cell, &array![[5.0]], &array![[0.2, 0.1]], &c).unwrap();
        assert_eq!(c1, c);
    }

    #[test]
    fn cell_shape_mismatch_rejected() {
        let cell = LstmCell::new("c", 2, 3, &mut rng::seeded(0, 0));
        let z = Array2::zeros((1, 3));
        assert!(lstm_cell_forward(&cell, &Array2::zeros((1, 3)), &z, &z).is_err());
        assert!(lstm_cell_forward(&cell, &Array2::zeros((1, 2)), &Array2::zeros((2, 3)), &z).is_err());
    }

    #[test]
    fn tied_directions_mirror_palindromes() {
        let mut l = BiLstm::new("b", 1, 3, &mut rng::seeded(8, 0));
        for (dst, src) in [(0, 0), (1, 1), (2, 2)] {
            let v = l.fwd.cell.params()[src].value.clone();
            l.bwd.cell.params_mut()[dst].value.assign(&v);
        }
        let seq = [0.1, 0.7, -0.4, 0.9, -0.4, 0.7, 0.1];
        let x = Array3::from_shape_fn((7, 1, 1), |(t, _, _)| seq[t]);
        let y = l.forward(&x).unwrap();
        for t in 0..7 {
            for u in 0..3 {
                assert!((y[[t, 0, 3 + u]] - y[[6 - t, 0, u]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_step_sees_same_input() {
        let mut l = BiLstm::new("b", 1, 2, &mut rng::seeded(8, 0));
        let v: Vec<_> = l.fwd.cell.params().iter().map(|p| p.value.clone()).collect();
        for (p, v) in l.bwd.cell.params_mut().into_iter().zip(v) {
            p.value.assign(&v);
        }
        let y = l.forward(&array![[[0.4]]]).unwrap();
        assert_eq!(y[[0, 0, 0]], y[[0, 0, 2]]);
        assert_eq!(y[[0, 0, 1]], y[[0, 0, 3]]);
        assert!(matches!(l.forward(&Array3::zeros((0, 1, 1))), Err(Error::Shape(_))));
    }
}
