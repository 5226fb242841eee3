use super::data::{infidelity_loss, PairDataset};
use super::Objective;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::graph::{Flow, OpenGraph};
use crate::linalg::CMatrix;
use crate::muta::MutaGraph;
use crate::pattern::{Basis, MeasurementPattern, MeasurementPlan, NodeRole, RoleMap};
use crate::sim::run_noisy_mbqc;
use crate::translate::pattern_unitary;
use rayon::prelude::*;

/// A resource graph with its flow and node roles; parameters are the
/// angles of `roles.param_nodes()` in ascending node order.
#[derive(Debug, Clone)]
pub struct PatternModel {
    pub graph: OpenGraph,
    pub flow: Flow,
    pub roles: RoleMap,
}

impl PatternModel {
    pub fn new(graph: OpenGraph, flow: Flow, roles: RoleMap) -> Result<Self> {
        roles.check_order(&flow)?;
        Ok(Self { graph, flow, roles })
    }

    pub fn from_muta(m: &MutaGraph) -> Result<Self> {
        Self::new(m.graph.clone(), m.flow()?, m.roles.clone())
    }

    pub fn num_params(&self) -> usize {
        self.roles.param_nodes().len()
    }

    pub fn plan(&self, params: &[f64]) -> Result<MeasurementPlan> {
        self.roles.plan(params)
    }

    /// Pure XY pattern; fails if any node is read out in Z or conditioned.
    pub fn pattern(&self, params: &[f64]) -> Result<MeasurementPattern> {
        let pn = self.roles.param_nodes();
        if params.len() != pn.len() {
            return Err(Error::DimensionMismatch { expected: pn.len(), got: params.len() });
        }
        let mut k = 0;
        let mut angles = std::collections::BTreeMap::new();
        for v in self.graph.measured_nodes() {
            let a = match self.roles.role(v) {
                NodeRole::Trainable => {
                    k += 1;
                    params[k - 1]
                }
                NodeRole::Fixed(Basis::Xy(a)) => *a,
                r => return Err(Error::Role(format!("node {v} has role {r:?}; not a plain XY pattern"))),
            };
            angles.insert(v, a);
        }
        MeasurementPattern::new(&self.graph, angles)
    }

    pub fn unitary(&self, params: &[f64]) -> Result<CMatrix> {
        pattern_unitary(&self.graph, &self.flow, &self.pattern(params)?)
    }
}

/// Noiseless gate learning: infidelity of the compiled unitary.
pub struct GateObjective {
    pub model: PatternModel,
    pub data: PairDataset,
}

impl GateObjective {
    pub fn new(model: PatternModel, data: PairDataset) -> Result<Self> {
        let n = model.graph.inputs().len();
        if data.num_qubits() != n {
            return Err(Error::DimensionMismatch { expected: n, got: data.num_qubits() });
        }
        model.pattern(&vec![0.0; model.num_params()])?;
        Ok(Self { model, data })
    }
}

impl Objective for GateObjective {
    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn train_loss(&self, params: &[f64]) -> Result<f64> {
        let (x, y) = self.data.train();
        infidelity_loss(&self.model.unitary(params)?, x, y)
    }

    fn test_loss(&self, params: &[f64]) -> Result<f64> {
        let (x, y) = self.data.test();
        infidelity_loss(&self.model.unitary(params)?, x, y)
    }
}

/// Training on a depolarized resource (strength `p` per qubit), testing on
/// the ideal one. Fidelity becomes <target| rho |target>.
pub struct DepolarizedObjective {
    pub model: PatternModel,
    pub data: PairDataset,
    pub p: f64,
}

impl DepolarizedObjective {
    pub fn new(model: PatternModel, data: PairDataset, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let inner = GateObjective::new(model, data)?;
        Ok(Self { model: inner.model, data: inner.data, p })
    }

    pub fn noisy_loss(&self, params: &[f64], test: bool) -> Result<f64> {
        let (x, y) = if test { self.data.test() } else { self.data.train() };
        if x.is_empty() {
            return Err(Error::EmptySplit("loss"));
        }
        let plan = self.model.plan(params)?;
        let m = &self.model;
        let fids: Vec<f64> = x
            .par_iter()
            .zip(y)
            .map(|(xi, yi)| {
                let out = run_noisy_mbqc(&m.graph, &m.flow, &plan, &DensityMatrix::from_pure(xi), self.p)?;
                Ok(out.expectation_pure(yi))
            })
            .collect::<Result<_>>()?;
        Ok(1.0 - fids.iter().sum::<f64>() / fids.len() as f64)
    }
}

impl Objective for DepolarizedObjective {
    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn train_loss(&self, params: &[f64]) -> Result<f64> {
        self.noisy_loss(params, false)
    }

    fn test_loss(&self, params: &[f64]) -> Result<f64> {
        let (x, y) = self.data.test();
        infidelity_loss(&self.model.unitary(params)?, x, y)
    }
}
