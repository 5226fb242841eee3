//! Measurement angles, node roles and simulation plans.

use crate::error::{Error, Result};
use crate::graph::{Flow, OpenGraph};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-node XY-plane angles for every measured node (V \ O).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPattern {
    angles: BTreeMap<usize, f64>,
}

impl MeasurementPattern {
    pub fn new(g: &OpenGraph, angles: BTreeMap<usize, f64>) -> Result<Self> {
        for (&v, &a) in &angles {
            if v >= g.num_nodes() {
                return Err(Error::NodeOutOfRange { node: v, num_nodes: g.num_nodes() });
            }
            if g.is_output(v) {
                return Err(Error::Pattern(format!("output node {v} carries an angle")));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite(format!("angle of node {v}")));
            }
        }
        for v in g.measured_nodes() {
            if !angles.contains_key(&v) {
                return Err(Error::Pattern(format!("node {v} has no angle")));
            }
        }
        Ok(Self { angles })
    }

    pub fn from_fn(g: &OpenGraph, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(g, g.measured_nodes().into_iter().map(|v| (v, f(v))).collect())
    }

    pub fn zeros(g: &OpenGraph) -> Self {
        Self::from_fn(g, |_| 0.0).expect("zero pattern is valid")
    }

    pub fn angle(&self, v: usize) -> f64 {
        self.angles[&v]
    }

    pub fn get(&self, v: usize) -> Option<f64> {
        self.angles.get(&v).copied()
    }

    pub fn set(&mut self, v: usize, a: f64) -> Result<()> {
        match self.angles.get_mut(&v) {
            Some(slot) if a.is_finite() => {
                *slot = a;
                Ok(())
            }
            Some(_) => Err(Error::NonFinite(format!("angle of node {v}"))),
            None => Err(Error::Pattern(format!("node {v} is not measured"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.angles.iter().map(|(&v, &a)| (v, a))
    }
}

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// (|0> ± e^{i a}|1>)/sqrt 2, outcome 0 for +.
    Xy(f64),
    Z,
}

/// How a node is measured during simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeMeasurement {
    Fixed(Basis),
    /// XY at `angle` if every control produced outcome 1, else `otherwise`.
    Conditional { controls: Vec<usize>, angle: f64, otherwise: Basis },
}

/// Measurement of every non-output node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    nodes: Vec<Option<NodeMeasurement>>,
}

impl MeasurementPlan {
    pub fn from_pattern(g: &OpenGraph, p: &MeasurementPattern) -> Self {
        let nodes = (0..g.num_nodes())
            .map(|v| p.get(v).map(|a| NodeMeasurement::Fixed(Basis::Xy(a))))
            .collect();
        Self { nodes }
    }

    pub fn new(g: &OpenGraph, nodes: Vec<Option<NodeMeasurement>>) -> Result<Self> {
        if nodes.len() != g.num_nodes() {
            return Err(Error::DimensionMismatch { expected: g.num_nodes(), got: nodes.len() });
        }
        for (v, m) in nodes.iter().enumerate() {
            if g.is_output(v) != m.is_none() {
                return Err(Error::Pattern(format!("node {v}: outputs and only outputs are unmeasured")));
            }
        }
        Ok(Self { nodes })
    }

    pub fn get(&self, v: usize) -> Option<&NodeMeasurement> {
        self.nodes[v].as_ref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Trainable,
    Fixed(Basis),
    Controlled { controls: Vec<usize>, otherwise: Basis },
    Output,
}

/// Role of every node; trainable and controlled nodes carry parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleMap {
    roles: Vec<NodeRole>,
}

impl RoleMap {
    pub fn all_trainable(g: &OpenGraph) -> Self {
        let roles = (0..g.num_nodes())
            .map(|v| if g.is_output(v) { NodeRole::Output } else { NodeRole::Trainable })
            .collect();
        Self { roles }
    }

    pub fn with_overrides(g: &OpenGraph, overrides: &BTreeMap<usize, NodeRole>) -> Result<Self> {
        let mut m = Self::all_trainable(g);
        for (&v, r) in overrides {
            if v >= g.num_nodes() {
                return Err(Error::NodeOutOfRange { node: v, num_nodes: g.num_nodes() });
            }
            if g.is_output(v) != (*r == NodeRole::Output) {
                return Err(Error::Role(format!("node {v}: output role mismatch")));
            }
            if let NodeRole::Controlled { controls, .. } = r {
                if controls.is_empty() {
                    return Err(Error::Role(format!("node {v}: empty control set")));
                }
                for &cn in controls {
                    if cn >= g.num_nodes() || g.is_output(cn) {
                        return Err(Error::Role(format!("node {v}: control {cn} is not a measured node")));
                    }
                }
            }
            m.roles[v] = r.clone();
        }
        Ok(m)
    }

    pub fn role(&self, v: usize) -> &NodeRole {
        &self.roles[v]
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    /// Nodes that carry a trainable angle, ascending.
    pub fn param_nodes(&self) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&v| matches!(self.roles[v], NodeRole::Trainable | NodeRole::Controlled { .. }))
            .collect()
    }

    /// (control, controlled) pairs.
    pub fn precedence(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (v, r) in self.roles.iter().enumerate() {
            if let NodeRole::Controlled { controls, .. } = r {
                out.extend(controls.iter().map(|&cn| (cn, v)));
            }
        }
        out
    }

    /// Check that controls precede controlled nodes in `fl`.
    pub fn check_order(&self, fl: &Flow) -> Result<()> {
        for (a, b) in self.precedence() {
            if fl.position(a) >= fl.position(b) {
                return Err(Error::Role(format!("control {a} is not measured before {b}")));
            }
        }
        Ok(())
    }

    /// Plan with `params[k]` assigned to `param_nodes()[k]`.
    pub fn plan(&self, params: &[f64]) -> Result<MeasurementPlan> {
        let pn = self.param_nodes();
        if params.len() != pn.len() {
            return Err(Error::DimensionMismatch { expected: pn.len(), got: params.len() });
        }
        let mut k = 0;
        let nodes = self
            .roles
            .iter()
            .map(|r| match r {
                NodeRole::Output => None,
                NodeRole::Fixed(b) => Some(NodeMeasurement::Fixed(*b)),
                NodeRole::Trainable => {
                    k += 1;
                    Some(NodeMeasurement::Fixed(Basis::Xy(params[k - 1])))
                }
                NodeRole::Controlled { controls, otherwise } => {
                    k += 1;
                    Some(NodeMeasurement::Conditional {
                        controls: controls.clone(),
                        angle: params[k - 1],
                        otherwise: *otherwise,
                    })
                }
            })
            .collect();
        Ok(MeasurementPlan { nodes })
    }
}
