use ndarray::Array2;

use super::Param;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam. Moment buffers are bound to the parameter order of
/// the first `step`.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: Vec<&mut Param>) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect();
            self.v = self.m.clone();
        }
        if params.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "adam: bound to {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for ((p, m), v) in params.into_iter().zip(&mut self.m).zip(&mut self.v) {
            if p.value.dim() != m.dim() {
                return Err(Error::Shape(format!("adam: {} changed shape", p.name)));
            }
            ndarray::Zip::from(&mut p.value)
                .and(&p.grad)
                .and(m)
                .and(v)
                .for_each(|w, &g, m, v| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn first_step_moves_by_lr() {
        // bias correction makes the first update lr * sign(g)
        let mut p = Param::new("w", array![[1.0, -1.0]]);
        p.grad = array![[0.3, -7.0]];
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(vec![&mut p]).unwrap();
        assert!((p.value[[0, 0]] - (1.0 - 1e-4)).abs() < 1e-9);
        assert!((p.value[[0, 1]] - (-1.0 + 1e-4)).abs() < 1e-9);
    }

    #[test]
    fn minimises_quadratic() {
        let mut p = Param::new("w", array![[5.0]]);
        let mut opt = Adam::new(AdamConfig { lr: 0.1, ..Default::default() });
        for _ in 0..500 {
            p.grad = &p.value * 2.0;
            opt.step(vec![&mut p]).unwrap();
        }
        assert!(p.value[[0, 0]].abs() < 1e-2);
    }

    #[test]
    fn parameter_count_is_fixed() {
        let mut a = Param::zeros("a", 1, 1);
        let mut b = Param::zeros("b", 1, 1);
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(vec![&mut a]).unwrap();
        assert!(opt.step(vec![&mut a, &mut b]).is_err());
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = Param::new("w", array![[0.3, -2.0]]);
        let mut opt = Adam::new(AdamConfig::default());
        for _ in 0..10 {
            opt.step(vec![&mut p]).unwrap();
        }
        assert_eq!(p.value, array![[0.3, -2.0]]);
    }

    #[test]
    fn bowl_decreases_monotonically() {
        let mut p = Param::new("w", array![[1.0, -2.0, 0.5]]);
        let mut opt = Adam::new(AdamConfig { lr: 1e-2, ..Default::default() });
        let f = |p: &Param| p.value.iter().map(|v| v * v).sum::<f64>();
        let mut last = f(&p);
        for _ in 0..100 {
            p.grad = &p.value * 2.0;
            opt.step(vec![&mut p]).unwrap();
            let now = f(&p);
            assert!(now < last);
            last = now;
        }
    }
}
