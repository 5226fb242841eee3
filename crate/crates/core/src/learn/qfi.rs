//! Classifying two-qubit probe states by quantum Fisher information.
//!
//! The ansatz is a `(2)` layer with the two wires' angles tied per column,
//! so it applies U x U. With p+ = P(00) and p- = P(11) of a Z readout, the
//! estimate is a quadratic polynomial in (p+, p-); for h = Z/2 the exact QFI
//! is 4 (p+ + p- - (p+ - p-)^2).

use super::Objective;
use crate::error::{Error, Result};
use crate::graph::{Flow, OpenGraph};
use crate::linalg::{c, cis, kron, mat2_to_dense, pauli_x, pauli_y, pauli_z, CMatrix, ZERO};
use crate::muta::{build_layer, LayerSpec};
use crate::pattern::MeasurementPattern;
use crate::state::StateVector;
use crate::translate::pattern_unitary;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

pub const NUM_MONOMIALS: usize = 6;
const TIED_COLUMNS: usize = 4;
const SQL: f64 = 2.0;

/// 4 Var(h x 1 + 1 x h) for h = hx X + hy Y + hz Z with |h|^2 = 1/4.
pub fn qfi_oracle(state: &StateVector, h: [f64; 3]) -> Result<f64> {
    if state.num_qubits() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: state.num_qubits() });
    }
    let norm: f64 = h.iter().map(|x| x * x).sum();
    if (norm - 0.25).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("|h|^2 = {norm}, expected 1/4")));
    }
    let one = CMatrix::identity(2, 2);
    let hm = mat2_to_dense(&pauli_x()) * c(h[0], 0.0) + mat2_to_dense(&pauli_y()) * c(h[1], 0.0) + mat2_to_dense(&pauli_z()) * c(h[2], 0.0);
    let big = kron(&hm, &one) + kron(&one, &hm);
    let psi = nalgebra::DVector::from_column_slice(state.amplitudes());
    let hpsi = &big * &psi;
    let mean = psi.dotc(&hpsi).re;
    let sq = hpsi.dotc(&hpsi).re;
    Ok(4.0 * (sq - mean * mean))
}

/// cos t |00> + e^{i f} sin t |11>
pub fn qfi_state_s1(theta: f64, phi: f64) -> StateVector {
    let mut a = vec![ZERO; 4];
    a[0] = c(theta.cos(), 0.0);
    a[3] = cis(phi) * theta.sin();
    StateVector::new(a).expect("unit norm")
}

/// cos t |++> + e^{i f} sin t |-->
pub fn qfi_state_s2(theta: f64, phi: f64) -> StateVector {
    let (ct, st) = (c(theta.cos(), 0.0), cis(phi) * theta.sin());
    let signs = [[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, -1.0, 1.0]];
    let a = (0..4).map(|k| (ct * signs[0][k] + st * signs[1][k]) * 0.5).collect();
    StateVector::new(a).expect("unit norm")
}

/// Trained classifier parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiModel {
    pub alpha: Vec<f64>,
    pub beta: [f64; NUM_MONOMIALS],
    pub epsilon: f64,
}

impl QfiModel {
    pub fn from_params(params: &[f64], epsilon: f64) -> Result<Self> {
        if params.len() != TIED_COLUMNS + NUM_MONOMIALS {
            return Err(Error::DimensionMismatch { expected: TIED_COLUMNS + NUM_MONOMIALS, got: params.len() });
        }
        let mut beta = [0.0; NUM_MONOMIALS];
        beta.copy_from_slice(&params[TIED_COLUMNS..]);
        Ok(Self { alpha: params[..TIED_COLUMNS].to_vec(), beta, epsilon })
    }

    pub fn params(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.beta).copied().collect()
    }

    pub fn polynomial(&self, pp: f64, pm: f64) -> f64 {
        monomials(pp, pm).iter().zip(&self.beta).map(|(m, b)| m * b).sum()
    }
}

fn monomials(pp: f64, pm: f64) -> [f64; NUM_MONOMIALS] {
    [1.0, pp, pm, pp * pp, pm * pm, pp * pm]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub counted: usize,
    /// Estimates inside the exclusion band.
    pub excluded: usize,
}

impl Accuracy {
    pub fn value(&self) -> f64 {
        if self.counted == 0 {
            0.0
        } else {
            self.correct as f64 / self.counted as f64
        }
    }
}

/// The `(2)` layer with column-tied angles.
#[derive(Debug, Clone)]
pub struct QfiAnsatz {
    graph: OpenGraph,
    flow: Flow,
}

impl QfiAnsatz {
    pub fn new() -> Result<Self> {
        let m = build_layer(&LayerSpec::disconnected(2))?;
        Ok(Self { flow: m.flow()?, graph: m.graph })
    }

    fn unitary_nodes(&self, angles: &[f64; 2 * TIED_COLUMNS]) -> Result<CMatrix> {
        let p = MeasurementPattern::from_fn(&self.graph, |v| {
            let (row, col) = (v / 5, v % 5);
            angles[row * TIED_COLUMNS + col]
        })?;
        pattern_unitary(&self.graph, &self.flow, &p)
    }

    /// Unitary for tied angles; entry k of the untied vector is (row k / 4, column k % 4).
    pub fn unitary(&self, alpha: &[f64]) -> Result<CMatrix> {
        if alpha.len() != TIED_COLUMNS {
            return Err(Error::DimensionMismatch { expected: TIED_COLUMNS, got: alpha.len() });
        }
        let mut a = [0.0; 2 * TIED_COLUMNS];
        for k in 0..2 * TIED_COLUMNS {
            a[k] = alpha[k % TIED_COLUMNS];
        }
        self.unitary_nodes(&a)
    }

    pub fn probabilities(u: &CMatrix, s: &StateVector) -> Result<(f64, f64)> {
        let out = s.apply_matrix(u)?;
        let a = out.amplitudes();
        Ok((a[0].norm_sqr(), a[3].norm_sqr()))
    }

    pub fn estimate(&self, model: &QfiModel, s: &StateVector) -> Result<f64> {
        let (pp, pm) = Self::probabilities(&self.unitary(&model.alpha)?, s)?;
        Ok(model.polynomial(pp, pm))
    }

    /// Accuracy of `F > 2` predictions, skipping estimates with |F - 2| < `band`.
    pub fn accuracy(&self, model: &QfiModel, states: &[StateVector], labels: &[bool], band: f64) -> Result<Accuracy> {
        let u = self.unitary(&model.alpha)?;
        let mut acc = Accuracy { correct: 0, counted: 0, excluded: 0 };
        for (s, &y) in states.iter().zip(labels) {
            let (pp, pm) = Self::probabilities(&u, s)?;
            let f = model.polynomial(pp, pm);
            if (f - SQL).abs() < band {
                acc.excluded += 1;
                continue;
            }
            acc.counted += 1;
            if (f > SQL) == y {
                acc.correct += 1;
            }
        }
        Ok(acc)
    }
}

fn hinge(f: f64, y: bool, eps: f64) -> (f64, f64) {
    let m = if y { -f + SQL + eps } else { f - SQL + eps };
    if m > 0.0 {
        (m, if y { -1.0 } else { 1.0 })
    } else {
        (0.0, 0.0)
    }
}

/// Soft-margin training problem. Parameters are 4 tied angles followed by
/// the 6 polynomial coefficients.
pub struct QfiObjective {
    pub ansatz: QfiAnsatz,
    pub train_states: Vec<StateVector>,
    pub train_labels: Vec<bool>,
    pub test_states: Vec<StateVector>,
    pub test_labels: Vec<bool>,
    pub epsilon: f64,
}

impl QfiObjective {
    pub fn new(states: Vec<StateVector>, labels: Vec<bool>, n_train: usize, epsilon: f64) -> Result<Self> {
        if states.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), got: labels.len() });
        }
        if n_train == 0 || n_train > states.len() {
            return Err(Error::EmptySplit("train"));
        }
        if let Some(s) = states.iter().find(|s| s.num_qubits() != 2) {
            return Err(Error::DimensionMismatch { expected: 2, got: s.num_qubits() });
        }
        let (mut states, mut labels) = (states, labels);
        let test_states = states.split_off(n_train);
        let test_labels = labels.split_off(n_train);
        Ok(Self { ansatz: QfiAnsatz::new()?, train_states: states, train_labels: labels, test_states, test_labels, epsilon })
    }

    /// `per_family` states from each of S1 and S2 (h = Z/2 labels),
    /// shuffled, with the first `train_fraction` used for training.
    pub fn sample<R: Rng + ?Sized>(per_family: usize, train_fraction: f64, epsilon: f64, rng: &mut R) -> Result<Self> {
        let mut states = Vec::with_capacity(2 * per_family);
        for family in 0..2 {
            for _ in 0..per_family {
                let theta = rng.random_range(0.0..2.0 * PI);
                let phi = rng.random_range(0.0..2.0 * PI);
                states.push(if family == 0 { qfi_state_s1(theta, phi) } else { qfi_state_s2(theta, phi) });
            }
        }
        states.shuffle(rng);
        let labels = states.iter().map(|s| Ok(qfi_oracle(s, [0.0, 0.0, 0.5])? > SQL)).collect::<Result<Vec<_>>>()?;
        let n_train = (train_fraction * states.len() as f64).round() as usize;
        Self::new(states, labels, n_train, epsilon)
    }

    fn loss_on(&self, params: &[f64], states: &[StateVector], labels: &[bool]) -> Result<f64> {
        if states.is_empty() {
            return Err(Error::EmptySplit("loss"));
        }
        let model = QfiModel::from_params(params, self.epsilon)?;
        let u = self.ansatz.unitary(&model.alpha)?;
        let mut acc = 0.0;
        for (s, &y) in states.iter().zip(labels) {
            let (pp, pm) = QfiAnsatz::probabilities(&u, s)?;
            acc += hinge(model.polynomial(pp, pm), y, self.epsilon).0;
        }
        Ok(acc / states.len() as f64)
    }

    pub fn model(&self, params: &[f64]) -> Result<QfiModel> {
        QfiModel::from_params(params, self.epsilon)
    }
}

impl Objective for QfiObjective {
    fn num_params(&self) -> usize {
        TIED_COLUMNS + NUM_MONOMIALS
    }

    fn train_loss(&self, params: &[f64]) -> Result<f64> {
        self.loss_on(params, &self.train_states, &self.train_labels)
    }

    fn test_loss(&self, params: &[f64]) -> Result<f64> {
        self.loss_on(params, &self.test_states, &self.test_labels)
    }

    /// Chain rule: p+- are expectation values, so their angle derivatives
    /// come from the shift rule applied to each tied occurrence separately;
    /// the polynomial and hinge are differentiated analytically.
    fn gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        let model = QfiModel::from_params(params, self.epsilon)?;
        let mut base = [0.0; 2 * TIED_COLUMNS];
        for k in 0..2 * TIED_COLUMNS {
            base[k] = model.alpha[k % TIED_COLUMNS];
        }
        let u0 = self.ansatz.unitary_nodes(&base)?;
        let shifted: Vec<(CMatrix, CMatrix)> = (0..2 * TIED_COLUMNS)
            .map(|k| {
                let mut a = base;
                a[k] = base[k] + FRAC_PI_2;
                let up = self.ansatz.unitary_nodes(&a)?;
                a[k] = base[k] - FRAC_PI_2;
                Ok((up, self.ansatz.unitary_nodes(&a)?))
            })
            .collect::<Result<_>>()?;
        let n = self.train_states.len();
        let mut grad = vec![0.0; self.num_params()];
        for (s, &y) in self.train_states.iter().zip(&self.train_labels) {
            let (pp, pm) = QfiAnsatz::probabilities(&u0, s)?;
            let (_, dl) = hinge(model.polynomial(pp, pm), y, self.epsilon);
            if dl == 0.0 {
                continue;
            }
            let b = &model.beta;
            let df_dpp = b[1] + 2.0 * b[3] * pp + b[5] * pm;
            let df_dpm = b[2] + 2.0 * b[4] * pm + b[5] * pp;
            for (k, (up, down)) in shifted.iter().enumerate() {
                let (a_pp, a_pm) = QfiAnsatz::probabilities(up, s)?;
                let (b_pp, b_pm) = QfiAnsatz::probabilities(down, s)?;
                let d = df_dpp * (a_pp - b_pp) / 2.0 + df_dpm * (a_pm - b_pm) / 2.0;
                grad[k % TIED_COLUMNS] += dl * d;
            }
            for (j, m) in monomials(pp, pm).iter().enumerate() {
                grad[TIED_COLUMNS + j] += dl * m;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n as f64);
        Ok(grad)
    }

    /// Angles uniform, polynomial coefficients zero.
    fn init_params(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        let mut p = super::uniform_angles(TIED_COLUMNS, rng);
        p.extend([0.0; NUM_MONOMIALS]);
        p
    }
}
