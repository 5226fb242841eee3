//! Multiple-triangle ansatz (MuTA) layers and networks.
//!
//! A layer `(n, i)` is `n` wires of five nodes with a triangle from the
//! column-1 node of tip row `i` to columns 0 and 2 of every row in `J`.
//! Nodes are numbered row-major within a layer, then layer by layer; a
//! node merged by concatenation keeps its earlier index.

use crate::error::{Error, Result};
use crate::graph::{find_flow, Flow, InitState, OpenGraph};
use crate::pattern::{Basis, NodeRole, RoleMap};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

fn five() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    #[serde(default)]
    pub tip: Option<usize>,
    #[serde(default)]
    pub connectivity: Vec<usize>,
    /// 5 for the standard layer, 6 for the one-column-deeper variant.
    #[serde(default = "five")]
    pub columns: usize,
}

impl LayerSpec {
    pub fn new(width: usize, tip: usize, connectivity: &[usize]) -> Self {
        Self { width, tip: Some(tip), connectivity: connectivity.to_vec(), columns: 5 }
    }

    /// `(n)`: n parallel wires.
    pub fn disconnected(width: usize) -> Self {
        Self { width, tip: None, connectivity: Vec::new(), columns: 5 }
    }

    /// `(n, i)` connected to every other row.
    pub fn fully_connected(width: usize, tip: usize) -> Self {
        let j: Vec<usize> = (0..width).filter(|&r| r != tip).collect();
        Self::new(width, tip, &j)
    }

    pub fn deeper(mut self) -> Self {
        self.columns = 6;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::InvalidLayer("width must be positive".into()));
        }
        if self.columns != 5 && self.columns != 6 {
            return Err(Error::InvalidLayer(format!("{} columns (expected 5 or 6)", self.columns)));
        }
        let mut seen = BTreeSet::new();
        for &j in &self.connectivity {
            if j >= self.width {
                return Err(Error::InvalidLayer(format!("row {j} outside width {}", self.width)));
            }
            if !seen.insert(j) {
                return Err(Error::InvalidLayer(format!("row {j} listed twice")));
            }
        }
        match self.tip {
            None if !self.connectivity.is_empty() => {
                Err(Error::InvalidLayer("connectivity given without a tip row".into()))
            }
            Some(i) if i >= self.width => Err(Error::InvalidLayer(format!("tip row {i} outside width"))),
            Some(i) if self.connectivity.contains(&i) => {
                Err(Error::InvalidLayer(format!("tip row {i} is in its own connectivity set")))
            }
            _ => Ok(()),
        }
    }
}

/// Identify output row `from_row` of layer `from_layer` with input row
/// `to_row` of the layer this link is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub from_layer: usize,
    pub from_row: usize,
    pub to_row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    /// `links[k]` feeds layer `k + 1`.
    #[serde(default)]
    pub links: Vec<Vec<Link>>,
    #[serde(default)]
    pub roles: BTreeMap<usize, NodeRole>,
    #[serde(default)]
    pub init: BTreeMap<usize, InitState>,
}

impl NetworkSpec {
    /// Layers chained row-to-row on the overlapping rows.
    pub fn chain(layers: Vec<LayerSpec>) -> Self {
        let links = (1..layers.len())
            .map(|k| {
                let rows = layers[k - 1].width.min(layers[k].width);
                (0..rows).map(|r| Link { from_layer: k - 1, from_row: r, to_row: r }).collect()
            })
            .collect();
        Self { layers, links, roles: BTreeMap::new(), init: BTreeMap::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coord {
    pub layer: usize,
    pub row: usize,
    pub column: usize,
}

/// A MuTA resource graph with coordinate metadata.
#[derive(Debug, Clone)]
pub struct MutaGraph {
    pub graph: OpenGraph,
    /// Coordinate of each node's first appearance.
    pub coords: Vec<Coord>,
    /// `nodes[layer][row][column]`
    pub nodes: Vec<Vec<Vec<usize>>>,
    pub roles: RoleMap,
}

impl MutaGraph {
    pub fn node(&self, layer: usize, row: usize, column: usize) -> usize {
        self.nodes[layer][row][column]
    }

    pub fn flow(&self) -> Result<Flow> {
        let fl = find_flow(&self.graph).ok_or(Error::NoFlow)?;
        let pre = self.roles.precedence();
        let fl = if pre.is_empty() { fl } else { fl.with_precedence(&self.graph, &pre)? };
        self.roles.check_order(&fl)?;
        Ok(fl)
    }

    /// Column index counted across layers along each wire.
    pub fn depth(&self, v: usize) -> usize {
        let c = self.coords[v];
        let offset: usize = (0..c.layer).map(|l| self.nodes[l][0].len() - 1).sum();
        offset + c.column
    }
}

pub fn build_layer(spec: &LayerSpec) -> Result<MutaGraph> {
    concatenate(&NetworkSpec::chain(vec![spec.clone()]))
}

pub fn concatenate(net: &NetworkSpec) -> Result<MutaGraph> {
    if net.layers.is_empty() {
        return Err(Error::InvalidLayer("network has no layers".into()));
    }
    for l in &net.layers {
        l.validate()?;
    }
    if net.links.len() > net.layers.len() - 1 {
        return Err(Error::InvalidConnection("more link groups than layer boundaries".into()));
    }
    let mut nodes: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut coords: Vec<Coord> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut consumed: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut inputs = Vec::new();
    for (l, spec) in net.layers.iter().enumerate() {
        let mut merged: BTreeMap<usize, usize> = BTreeMap::new();
        if l > 0 {
            let links = net.links.get(l - 1).map(|v| v.as_slice()).unwrap_or(&[]);
            for link in links {
                if link.from_layer >= l {
                    return Err(Error::InvalidConnection(format!("link into layer {l} from later layer {}", link.from_layer)));
                }
                let src = &net.layers[link.from_layer];
                if link.from_row >= src.width || link.to_row >= spec.width {
                    return Err(Error::InvalidConnection(format!("link row out of range: {link:?}")));
                }
                if !consumed.insert((link.from_layer, link.from_row)) {
                    return Err(Error::InvalidConnection(format!(
                        "output row {} of layer {} identified twice",
                        link.from_row, link.from_layer
                    )));
                }
                let out = *nodes[link.from_layer][link.from_row].last().unwrap();
                if merged.insert(link.to_row, out).is_some() {
                    return Err(Error::InvalidConnection(format!("two outputs identified with input row {}", link.to_row)));
                }
            }
        }
        let mut layer_nodes = Vec::with_capacity(spec.width);
        for row in 0..spec.width {
            let mut wire_nodes = Vec::with_capacity(spec.columns);
            for column in 0..spec.columns {
                let v = match (column, merged.get(&row)) {
                    (0, Some(&v)) => v,
                    _ => {
                        coords.push(Coord { layer: l, row, column });
                        coords.len() - 1
                    }
                };
                if column == 0 && !merged.contains_key(&row) {
                    inputs.push(v);
                }
                if column > 0 {
                    edges.push((wire_nodes[column - 1], v));
                }
                wire_nodes.push(v);
            }
            layer_nodes.push(wire_nodes);
        }
        if let Some(i) = spec.tip {
            let tip = layer_nodes[i][1];
            for &j in &spec.connectivity {
                edges.push((tip, layer_nodes[j][0]));
                edges.push((tip, layer_nodes[j][2]));
            }
        }
        nodes.push(layer_nodes);
    }
    let mut outputs = Vec::new();
    for (l, spec) in net.layers.iter().enumerate() {
        for row in 0..spec.width {
            if !consumed.contains(&(l, row)) {
                outputs.push(*nodes[l][row].last().unwrap());
            }
        }
    }
    let mut graph = OpenGraph::new(coords.len(), &edges, &inputs, &outputs)?;
    for (&v, &s) in &net.init {
        graph = graph.with_init(v, s)?;
    }
    let roles = RoleMap::with_overrides(&graph, &net.roles)?;
    Ok(MutaGraph { graph, coords, nodes, roles })
}

/// One layer of a classical feed-forward network: `neurons` wide, with
/// neuron `hub` wired to the neurons in `targets`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalLayer {
    pub neurons: usize,
    #[serde(default)]
    pub hub: Option<usize>,
    #[serde(default)]
    pub targets: Vec<usize>,
}

pub fn from_classical_geometry(layers: &[ClassicalLayer]) -> Result<NetworkSpec> {
    let mut specs = Vec::with_capacity(layers.len());
    for (k, cl) in layers.iter().enumerate() {
        if let Some(h) = cl.hub {
            if cl.targets.contains(&h) {
                return Err(Error::NonFeedForward(format!("layer {k}: neuron {h} connects to itself")));
            }
        }
        let spec = LayerSpec { width: cl.neurons, tip: cl.hub, connectivity: cl.targets.clone(), columns: 5 };
        spec.validate().map_err(|e| Error::NonFeedForward(format!("layer {k}: {e}")))?;
        specs.push(spec);
    }
    Ok(NetworkSpec::chain(specs))
}

/// Three-layer teleportation instrument.
///
/// Layer 0 prepares an entangled pair on rows A (nodes 0-4) and B (5-9)
/// from |00>. Layer 1 couples B (9-13) to the data row P (14-18); nodes 12
/// and 17 are read out in Z. Layer 2 continues row A (4, 19-22) with node 4
/// conditioned on node 12 and node 19 on node 17. Output 22 carries the
/// teleported state.
pub fn teleportation_ansatz() -> Result<MutaGraph> {
    let layers = vec![LayerSpec::new(2, 0, &[1]), LayerSpec::new(2, 0, &[1]), LayerSpec::disconnected(1)];
    let links = vec![
        vec![Link { from_layer: 0, from_row: 1, to_row: 0 }],
        vec![Link { from_layer: 0, from_row: 0, to_row: 0 }],
    ];
    let mut roles = BTreeMap::new();
    roles.insert(0, NodeRole::Fixed(Basis::Xy(0.0)));
    roles.insert(5, NodeRole::Fixed(Basis::Xy(0.0)));
    roles.insert(12, NodeRole::Fixed(Basis::Z));
    roles.insert(17, NodeRole::Fixed(Basis::Z));
    roles.insert(4, NodeRole::Controlled { controls: vec![12], otherwise: Basis::Xy(0.0) });
    roles.insert(19, NodeRole::Controlled { controls: vec![17], otherwise: Basis::Xy(0.0) });
    let mut init = BTreeMap::new();
    init.insert(0, InitState::Zero);
    init.insert(5, InitState::Zero);
    concatenate(&NetworkSpec { layers, links, roles, init })
}
