use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.05, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self { config, m: vec![0.0; num_params], v: vec![0.0; num_params], t: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), got: params.len() });
        }
        if grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), got: grad.len() });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for k in 0..params.len() {
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * grad[k];
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * grad[k] * grad[k];
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= lr * mh / (vh.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut a = Adam::new(3, AdamConfig::default());
        let mut p = vec![0.1, -0.2, 0.3];
        a.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn first_step_is_normalized() {
        let cfg = AdamConfig::default();
        let mut a = Adam::new(2, cfg);
        let g = [0.3, -4.0];
        let mut p = vec![0.0, 0.0];
        a.step(&mut p, &g).unwrap();
        for k in 0..2 {
            let want = -cfg.lr * g[k] / (g[k].abs() + cfg.eps);
            assert!((p[k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_gradient_moves_by_lr() {
        let cfg = AdamConfig::default();
        let mut a = Adam::new(1, cfg);
        let mut p = vec![0.0];
        let mut last = 0.0;
        for _ in 0..1000 {
            a.step(&mut p, &[2.5]).unwrap();
            let d = last - p[0];
            assert!(d > 0.0 && d <= cfg.lr * (1.0 + 1e-9));
            last = p[0];
        }
        let mut p2 = p.clone();
        a.step(&mut p2, &[2.5]).unwrap();
        assert!(((p[0] - p2[0]) - cfg.lr).abs() < 1e-6);
    }

    #[test]
    fn size_mismatch() {
        let mut a = Adam::new(2, AdamConfig::default());
        assert!(a.step(&mut [0.0], &[0.0]).is_err());
        assert!(a.step(&mut [0.0, 0.0], &[f64::NAN, 0.0]).is_err());
    }
}
