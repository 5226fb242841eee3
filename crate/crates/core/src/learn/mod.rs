//! Losses, gradients, Adam and the training loops.

mod adam;
mod data;
mod gate;
mod instrument;
mod qfi;

pub use adam::{Adam, AdamConfig};
pub use data::{infidelity_loss, PairDataset};
pub use gate::{DepolarizedObjective, GateObjective, PatternModel};
pub use instrument::{InstrumentObjective, TeleportModel};
pub use qfi::{qfi_oracle, qfi_state_s1, qfi_state_s2, Accuracy, QfiAnsatz, QfiModel, QfiObjective, NUM_MONOMIALS};

use crate::error::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Something trainable with Adam.
pub trait Objective: Sync {
    fn num_params(&self) -> usize;

    fn train_loss(&self, params: &[f64]) -> Result<f64>;

    fn test_loss(&self, params: &[f64]) -> Result<f64>;

    /// Defaults to the parameter-shift rule on the training loss, valid when
    /// every parameter enters once as exp(i a P / 2) and the loss is affine
    /// in the output state.
    fn gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        parameter_shift(|p| self.train_loss(p), params)
    }

    fn init_params(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        uniform_angles(self.num_params(), rng)
    }
}

/// Angles uniform on (-pi, pi].
pub fn uniform_angles<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| PI - 2.0 * PI * rng.random::<f64>()).collect()
}

/// [f(a + pi/2) - f(a - pi/2)] / 2 per coordinate.
pub fn parameter_shift<F>(f: F, params: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    shifted_difference(&f, params, FRAC_PI_2, 2.0)
}

/// Central differences with step `h`.
pub fn finite_difference<F>(f: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    shifted_difference(&f, params, h, 2.0 * h)
}

fn shifted_difference<F>(f: &F, params: &[f64], shift: f64, denom: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..params.len())
        .into_par_iter()
        .map(|k| {
            let mut p = params.to_vec();
            p[k] = params[k] + shift;
            let up = f(&p)?;
            p[k] = params[k] - shift;
            let down = f(&p)?;
            Ok((up - down) / denom)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Stop once the training loss falls to this value.
    #[serde(default)]
    pub tol: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { steps: 500, adam: AdamConfig::default(), tol: None }
    }
}

/// Loss curves and parameters of one training run. Entry `k` of the
/// histories is measured before update `k`; the last entry is final.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub seed: Option<u64>,
    pub config: TrainConfig,
    pub initial_params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
}

impl TrainRun {
    pub fn final_train_loss(&self) -> f64 {
        *self.train_loss.last().expect("history is never empty")
    }

    pub fn final_test_loss(&self) -> f64 {
        *self.test_loss.last().expect("history is never empty")
    }

    pub fn steps(&self) -> usize {
        self.train_loss.len() - 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,train_loss,test_loss\n");
        for (k, (a, b)) in self.train_loss.iter().zip(&self.test_loss).enumerate() {
            s.push_str(&format!("{k},{a:.12e},{b:.12e}\n"));
        }
        s
    }
}

pub fn train<O: Objective + ?Sized>(obj: &O, init: Vec<f64>, cfg: &TrainConfig) -> Result<TrainRun> {
    if init.len() != obj.num_params() {
        return Err(Error::DimensionMismatch { expected: obj.num_params(), got: init.len() });
    }
    let mut params = init.clone();
    let mut adam = Adam::new(params.len(), cfg.adam);
    let mut train_loss = Vec::with_capacity(cfg.steps + 1);
    let mut test_loss = Vec::with_capacity(cfg.steps + 1);
    for step in 0..=cfg.steps {
        let l = obj.train_loss(&params)?;
        if !l.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step}")));
        }
        train_loss.push(l);
        test_loss.push(obj.test_loss(&params)?);
        if step == cfg.steps || cfg.tol.is_some_and(|t| l <= t) {
            break;
        }
        let g = obj.gradient(&params)?;
        adam.step(&mut params, &g)?;
    }
    Ok(TrainRun { seed: None, config: cfg.clone(), initial_params: init, final_params: params, train_loss, test_loss })
}

/// Seeded run: initial angles come from `rng`, the seed is recorded.
pub fn train_seeded<O: Objective + ?Sized>(obj: &O, cfg: &TrainConfig, seed: u64, rng: &mut dyn rand::RngCore) -> Result<TrainRun> {
    let init = obj.init_params(rng);
    let mut run = train(obj, init, cfg)?;
    run.seed = Some(seed);
    Ok(run)
}
