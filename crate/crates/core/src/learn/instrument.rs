use super::gate::PatternModel;
use super::Objective;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::muta::{teleportation_ansatz, MutaGraph};
use crate::sim::{branch_operators, embed_input, Mode};
use crate::state::StateVector;

/// An instrument on a graph with one free input qubit whose output of
/// interest sits at position `target` of `O`; the other outputs are traced out.
#[derive(Debug, Clone)]
pub struct TeleportModel {
    pub model: PatternModel,
    pub target: usize,
    columns: Vec<Vec<C64>>,
}

impl TeleportModel {
    pub fn new(model: PatternModel, target: usize) -> Result<Self> {
        let g = &model.graph;
        if g.free_inputs().len() != 1 {
            return Err(Error::InvalidParameter(format!("{} free inputs, expected 1", g.free_inputs().len())));
        }
        if target >= g.outputs().len() {
            return Err(Error::NodeOutOfRange { node: target, num_nodes: g.outputs().len() });
        }
        let columns =
            (0..2).map(|b| Ok(embed_input(g, &StateVector::basis(1, b))?.into_amplitudes())).collect::<Result<_>>()?;
        Ok(Self { model, target, columns })
    }

    /// The three-layer teleportation ansatz with output 22 as target.
    pub fn teleportation() -> Result<Self> {
        let m: MutaGraph = teleportation_ansatz()?;
        let target = m.graph.outputs().len() - 1;
        Self::new(PatternModel::from_muta(&m)?, target)
    }

    pub fn num_params(&self) -> usize {
        self.model.num_params()
    }

    /// Per-branch maps from the free input qubit to all outputs. Z readouts
    /// branch; flow-corrected XY outcomes are deterministic and post-selected.
    pub fn branches(&self, params: &[f64]) -> Result<Vec<CMatrix>> {
        let m = &self.model;
        let plan = m.plan(params)?;
        let ops = branch_operators(&m.graph, &m.flow, &plan, Mode::Ideal, &self.columns)?;
        Ok(ops.into_iter().map(|o| o.matrix).collect())
    }

    /// Sum over branches of <psi| rho_t |psi>, rho_t the unnormalized
    /// reduced output of branch t on the target.
    pub fn fidelity(&self, branches: &[CMatrix], psi: &StateVector) -> f64 {
        let nout = self.model.graph.outputs().len();
        let shift = nout - 1 - self.target;
        let a = psi.amplitudes();
        let mut total = 0.0;
        for m in branches {
            let half = m.nrows() / 2;
            let mut proj = vec![ZERO; half];
            for r in 0..m.nrows() {
                let bit = (r >> shift) & 1;
                let rest = ((r >> (shift + 1)) << shift) | (r & ((1 << shift) - 1));
                let out = m[(r, 0)] * a[0] + m[(r, 1)] * a[1];
                proj[rest] += a[bit].conj() * out;
            }
            total += proj.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        total
    }

    pub fn loss(&self, params: &[f64], states: &[StateVector]) -> Result<f64> {
        if states.is_empty() {
            return Err(Error::EmptySplit("loss"));
        }
        let br = self.branches(params)?;
        let f: f64 = states.iter().map(|s| self.fidelity(&br, s)).sum();
        Ok(1.0 - f / states.len() as f64)
    }
}

pub struct InstrumentObjective {
    pub model: TeleportModel,
    pub train: Vec<StateVector>,
    pub test: Vec<StateVector>,
}

impl InstrumentObjective {
    pub fn new(model: TeleportModel, train: Vec<StateVector>, test: Vec<StateVector>) -> Result<Self> {
        if let Some(s) = train.iter().chain(&test).find(|s| s.num_qubits() != 1) {
            return Err(Error::DimensionMismatch { expected: 1, got: s.num_qubits() });
        }
        Ok(Self { model, train, test })
    }
}

impl Objective for InstrumentObjective {
    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn train_loss(&self, params: &[f64]) -> Result<f64> {
        self.model.loss(params, &self.train)
    }

    fn test_loss(&self, params: &[f64]) -> Result<f64> {
        self.model.loss(params, &self.test)
    }
}
