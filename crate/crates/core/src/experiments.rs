//! Seeded end-to-end experiments shared by the command line runner and the
//! acceptance tests. Each run draws data and initial angles from one
//! ChaCha8 stream seeded by `seed`.

use crate::error::{Error, Result};
use crate::expressivity::{lie_closure, model_generators, variance_bound, variance_probe, ExpressivityReport};
use crate::hea::{self, GreedyConfig, SearchResult, SliceSchedule};
use crate::learn::{
    qfi_oracle, train_seeded, Accuracy, Objective, DepolarizedObjective, GateObjective, InstrumentObjective, PairDataset,
    PatternModel, QfiObjective, TeleportModel, TrainConfig, TrainRun,
};
use crate::linalg::{haar_unitary, ising_xx, CMatrix};
use crate::muta::{build_layer, LayerSpec};
use crate::sim::NoiseChannel;
use crate::state::StateVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GateTarget {
    /// Haar-random single-qubit unitary, drawn per seed.
    Haar,
    #[serde(rename = "isingxx")]
    IsingXX { angle: f64 },
    /// (T x 1) IsingXX(-pi/4)
    #[serde(rename = "t-isingxx")]
    TIsingXX,
}

impl GateTarget {
    pub fn num_qubits(&self) -> usize {
        match self {
            GateTarget::Haar => 1,
            _ => 2,
        }
    }

    pub fn resolve(&self, rng: &mut ChaCha8Rng) -> CMatrix {
        match *self {
            GateTarget::Haar => haar_unitary(2, rng),
            GateTarget::IsingXX { angle } => ising_xx(angle),
            GateTarget::TIsingXX => hea::t_isingxx_target(),
        }
    }
}

/// A bare wire for one qubit, the (2,0) layer for two.
pub fn gate_model(num_qubits: usize) -> Result<PatternModel> {
    let spec = match num_qubits {
        1 => LayerSpec::disconnected(1),
        2 => LayerSpec::fully_connected(2, 0),
        n => return Err(Error::InvalidParameter(format!("gate learning supports 1 or 2 qubits, got {n}"))),
    };
    PatternModel::from_muta(&build_layer(&spec)?)
}

pub fn gate_learning(target: GateTarget, n_pairs: usize, n_train: usize, cfg: &TrainConfig, seed: u64) -> Result<TrainRun> {
    let mut r = rng(seed);
    let u = target.resolve(&mut r);
    let data = PairDataset::haar(&u, n_pairs, n_train, &mut r)?;
    let obj = GateObjective::new(gate_model(target.num_qubits())?, data)?;
    train_seeded(&obj, cfg, seed, &mut r)
}

/// Training on noisy labels; the test loss uses clean labels.
pub fn noisy_data_learning(
    target: GateTarget,
    noise: &NoiseChannel,
    n_pairs: usize,
    n_train: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainRun> {
    let mut r = rng(seed);
    let u = target.resolve(&mut r);
    let data = PairDataset::haar(&u, n_pairs, n_train, &mut r)?.with_label_noise(noise, &mut r)?;
    let obj = GateObjective::new(gate_model(target.num_qubits())?, data)?;
    train_seeded(&obj, cfg, seed, &mut r)
}

/// Training on a depolarized resource; the test loss uses the ideal one.
pub fn depolarized_learning(
    target: GateTarget,
    p: f64,
    n_train: usize,
    n_test: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainRun> {
    let mut r = rng(seed);
    let u = target.resolve(&mut r);
    let data = PairDataset::haar(&u, n_train + n_test, n_train, &mut r)?;
    let obj = DepolarizedObjective::new(gate_model(target.num_qubits())?, data, p)?;
    train_seeded(&obj, cfg, seed, &mut r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiSettings {
    pub per_family: usize,
    pub train_fraction: f64,
    pub epsilon: f64,
    pub band: f64,
    pub haar_states: usize,
}

impl Default for QfiSettings {
    fn default() -> Self {
        Self { per_family: 50, train_fraction: 0.8, epsilon: 0.5, band: 0.1, haar_states: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiReport {
    pub run: TrainRun,
    pub train_accuracy: Accuracy,
    pub test_accuracy: Accuracy,
    pub haar_accuracy: Accuracy,
}

pub fn qfi_classification(s: &QfiSettings, cfg: &TrainConfig, seed: u64) -> Result<QfiReport> {
    let mut r = rng(seed);
    let obj = QfiObjective::sample(s.per_family, s.train_fraction, s.epsilon, &mut r)?;
    let run = train_seeded(&obj, cfg, seed, &mut r)?;
    let m = obj.model(&run.final_params)?;
    let train_accuracy = obj.ansatz.accuracy(&m, &obj.train_states, &obj.train_labels, s.band)?;
    let test_accuracy = obj.ansatz.accuracy(&m, &obj.test_states, &obj.test_labels, s.band)?;
    let haar: Vec<StateVector> = (0..s.haar_states).map(|_| StateVector::haar(2, &mut r)).collect();
    let labels = haar.iter().map(|st| Ok(qfi_oracle(st, [0.0, 0.0, 0.5])? > 2.0)).collect::<Result<Vec<_>>>()?;
    let haar_accuracy = obj.ansatz.accuracy(&m, &haar, &labels, s.band)?;
    Ok(QfiReport { run, train_accuracy, test_accuracy, haar_accuracy })
}

pub fn teleportation(n_train: usize, n_test: usize, cfg: &TrainConfig, seed: u64) -> Result<TrainRun> {
    let mut r = rng(seed);
    let train: Vec<_> = (0..n_train).map(|_| StateVector::haar(1, &mut r)).collect();
    let test: Vec<_> = (0..n_test).map(|_| StateVector::haar(1, &mut r)).collect();
    let obj = InstrumentObjective::new(TeleportModel::teleportation()?, train, test)?;
    train_seeded(&obj, cfg, seed, &mut r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaReport {
    pub seed: u64,
    pub greedy: SearchResult,
    pub random: Option<SearchResult>,
    /// Held-out infidelity of the best greedy pattern.
    pub test_loss: f64,
}

/// Greedy search for (T x 1) IsingXX(-pi/4) with |T> injected at nodes
/// 2 and 6, optionally followed by a random-search baseline with budget 3^8.
pub fn hea_search(cfg: &GreedyConfig, n_train: usize, n_test: usize, baseline: bool, seed: u64) -> Result<HeaReport> {
    let mut r = rng(seed);
    let obj = hea::t_isingxx_objective(true, n_train, n_test, &mut r)?;
    let schedule = SliceSchedule::new(&obj.model, &hea::muta20_slices())?;
    let greedy = hea::greedy_opt(hea::search_loss(&obj), &schedule, cfg, &mut r)?;
    let random = if baseline {
        let budget = hea::HEA_ANGLES.len().pow(obj.model.num_params() as u32);
        Some(hea::random_search(hea::search_loss(&obj), obj.model.num_params(), budget, cfg.delta, &mut r)?)
    } else {
        None
    };
    let test_loss = obj.test_loss(&hea::to_angles(&greedy.best, &hea::HEA_ANGLES))?;
    Ok(HeaReport { seed, greedy, random, test_loss })
}

/// Lie closure of the `(width, 0)` fully connected layer and the sampled
/// loss variance against a Haar target state.
pub fn expressivity(width: usize, samples: usize, seed: u64) -> Result<ExpressivityReport> {
    let model = PatternModel::from_muta(&build_layer(&LayerSpec::fully_connected(width, 0))?)?;
    let gens = model_generators(&model)?;
    let closure = lie_closure(&gens)?;
    let mut r = rng(seed);
    let target = StateVector::haar(width, &mut r);
    let v = variance_probe(&model, &target, samples, &mut r)?;
    Ok(ExpressivityReport {
        generators: gens.iter().map(|g| g.to_string()).collect(),
        dim: closure.dim,
        is_full: closure.is_full,
        bound: variance_bound(&closure),
        empirical_variance: v.variance,
        std_error: v.std_error,
        samples,
        seed,
    })
}
