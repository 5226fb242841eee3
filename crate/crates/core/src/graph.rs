//! Open graphs, causal flow and bipartiteness.

use crate::error::{Error, Result};
use crate::linalg::{c, cis, C64, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

/// Single-qubit preparation state of a resource node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitState {
    #[serde(rename = "plus")]
    Plus,
    #[serde(rename = "zero")]
    Zero,
    /// (|0> + e^{-i pi/4}|1>)/sqrt 2
    #[serde(rename = "T")]
    T,
    #[serde(untagged)]
    Custom([f64; 4]),
}

impl InitState {
    pub fn amplitudes(&self) -> [C64; 2] {
        let h = c(FRAC_1_SQRT_2, 0.0);
        match *self {
            InitState::Plus => [h, h],
            InitState::Zero => [ONE, ZERO],
            InitState::T => [h, h * cis(-FRAC_PI_4)],
            InitState::Custom([a, b, cc, d]) => {
                let v = [c(a, b), c(cc, d)];
                let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                [v[0] / nrm, v[1] / nrm]
            }
        }
    }

    /// If the state is (|0> + e^{i beta}|1>)/sqrt 2 up to global phase,
    /// return beta. Such states fold into an XY measurement angle shift.
    pub fn equator_phase(&self) -> Option<f64> {
        let [a, b] = self.amplitudes();
        if (a.norm() - FRAC_1_SQRT_2).abs() > 1e-12 || (b.norm() - FRAC_1_SQRT_2).abs() > 1e-12 {
            return None;
        }
        Some((b / a).arg())
    }

    fn validate(&self) -> Result<()> {
        if let InitState::Custom(v) = self {
            let ns: f64 = v.iter().map(|x| x * x).sum();
            if !v.iter().all(|x| x.is_finite()) || ns < 1e-24 {
                return Err(Error::Parse(format!("invalid custom init state {v:?}")));
            }
        }
        Ok(())
    }
}

/// Graph with designated input and output nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct OpenGraph {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    init: BTreeMap<usize, InitState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    nodes: usize,
    edges: Vec<[usize; 2]>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    #[serde(default)]
    init: BTreeMap<usize, InitState>,
}

impl TryFrom<GraphFile> for OpenGraph {
    type Error = Error;
    fn try_from(f: GraphFile) -> Result<Self> {
        let edges: Vec<(usize, usize)> = f.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut g = OpenGraph::new(f.nodes, &edges, &f.inputs, &f.outputs)?;
        for (node, s) in f.init {
            g = g.with_init(node, s)?;
        }
        Ok(g)
    }
}

impl From<OpenGraph> for GraphFile {
    fn from(g: OpenGraph) -> Self {
        GraphFile {
            nodes: g.num_nodes,
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
            inputs: g.inputs,
            outputs: g.outputs,
            init: g.init,
        }
    }
}

fn check_list(list: &[usize], n: usize, what: &'static str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &v in list {
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, num_nodes: n });
        }
        if !seen.insert(v) {
            return Err(Error::DuplicateNode(v, what));
        }
    }
    Ok(())
}

impl OpenGraph {
    pub fn new(num_nodes: usize, edges: &[(usize, usize)], inputs: &[usize], outputs: &[usize]) -> Result<Self> {
        let mut set = BTreeSet::new();
        let mut adj = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= num_nodes {
                    return Err(Error::NodeOutOfRange { node: x, num_nodes });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        check_list(inputs, num_nodes, "inputs")?;
        check_list(outputs, num_nodes, "outputs")?;
        Ok(Self {
            num_nodes,
            edges: set,
            adj,
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
            init: BTreeMap::new(),
        })
    }

    /// Set the preparation state of `node`. Outputs that are not inputs
    /// cannot be re-initialized.
    pub fn with_init(mut self, node: usize, state: InitState) -> Result<Self> {
        if node >= self.num_nodes {
            return Err(Error::NodeOutOfRange { node, num_nodes: self.num_nodes });
        }
        if self.is_output(node) && !self.is_input(node) {
            return Err(Error::Pattern(format!("cannot initialize output node {node}")));
        }
        state.validate()?;
        if state == InitState::Plus && !self.is_input(node) {
            self.init.remove(&node);
        } else {
            self.init.insert(node, state);
        }
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn is_input(&self, v: usize) -> bool {
        self.inputs.contains(&v)
    }

    pub fn is_output(&self, v: usize) -> bool {
        self.outputs.contains(&v)
    }

    pub fn init_states(&self) -> &BTreeMap<usize, InitState> {
        &self.init
    }

    pub fn init_state(&self, v: usize) -> InitState {
        self.init.get(&v).copied().unwrap_or(InitState::Plus)
    }

    /// Inputs pinned to a fixed state by an init entry.
    pub fn is_pinned_input(&self, v: usize) -> bool {
        self.is_input(v) && self.init.contains_key(&v)
    }

    /// Inputs that receive external data (not pinned).
    pub fn free_inputs(&self) -> Vec<usize> {
        self.inputs.iter().copied().filter(|&v| !self.is_pinned_input(v)).collect()
    }

    pub fn measured_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes).filter(|&v| !self.is_output(v)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A causal flow together with a measurement schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlowFile", into = "FlowFile")]
pub struct Flow {
    succ: Vec<Option<usize>>,
    order: Vec<usize>,
    pos: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FlowFile {
    f: Vec<[usize; 2]>,
    order: Vec<usize>,
}

impl TryFrom<FlowFile> for Flow {
    type Error = Error;
    fn try_from(f: FlowFile) -> Result<Self> {
        let n = f.order.len();
        let mut succ = vec![None; n];
        for [u, v] in f.f {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange { node: u.max(v), num_nodes: n });
            }
            succ[u] = Some(v);
        }
        Flow::new(succ, f.order)
    }
}

impl From<Flow> for FlowFile {
    fn from(fl: Flow) -> Self {
        FlowFile {
            f: fl.succ.iter().enumerate().filter_map(|(u, s)| s.map(|v| [u, v])).collect(),
            order: fl.order,
        }
    }
}

impl Flow {
    /// `order` must be a permutation of 0..succ.len().
    pub fn new(succ: Vec<Option<usize>>, order: Vec<usize>) -> Result<Self> {
        let n = succ.len();
        if order.len() != n {
            return Err(Error::FlowMismatch(format!("order has {} entries for {n} nodes", order.len())));
        }
        let mut pos = vec![usize::MAX; n];
        for (k, &v) in order.iter().enumerate() {
            if v >= n || pos[v] != usize::MAX {
                return Err(Error::FlowMismatch(format!("order is not a permutation at {v}")));
            }
            pos[v] = k;
        }
        Ok(Self { succ, order, pos })
    }

    pub fn f(&self, v: usize) -> Option<usize> {
        self.succ.get(v).copied().flatten()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, v: usize) -> usize {
        self.pos[v]
    }

    pub fn num_nodes(&self) -> usize {
        self.succ.len()
    }

    /// Measured nodes (V \ O) in schedule order.
    pub fn measurement_order(&self, g: &OpenGraph) -> Vec<usize> {
        self.order.iter().copied().filter(|&v| !g.is_output(v)).collect()
    }

    /// Re-linearize the schedule so that each `(a, b)` pair also has `a`
    /// before `b`, keeping the existing order wherever possible.
    pub fn with_precedence(&self, g: &OpenGraph, extra: &[(usize, usize)]) -> Result<Flow> {
        let n = self.num_nodes();
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            if let Some(fi) = self.f(i) {
                succs[i].push(fi);
                for &j in g.neighbors(fi) {
                    if j != i {
                        succs[i].push(j);
                    }
                }
            }
        }
        for &(a, b) in extra {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { node: a.max(b), num_nodes: n });
            }
            succs[a].push(b);
        }
        // outputs stay last
        for &o in g.outputs() {
            for v in 0..n {
                if !g.is_output(v) {
                    succs[v].push(o);
                }
            }
        }
        let mut indeg = vec![0usize; n];
        for s in &succs {
            for &b in s {
                indeg[b] += 1;
            }
        }
        let mut ready: BTreeSet<(usize, usize)> =
            (0..n).filter(|&v| indeg[v] == 0).map(|v| (self.pos[v], v)).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&(p, v)) = ready.iter().next() {
            ready.remove(&(p, v));
            order.push(v);
            for &b in &succs[v] {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.insert((self.pos[b], b));
                }
            }
        }
        if order.len() != n {
            return Err(Error::FlowMismatch("precedence constraints are cyclic".into()));
        }
        Flow::new(self.succ.clone(), order)
    }
}

/// Backward causal-flow search: peel off nodes whose unique unprocessed
/// neighbour of a corrector is determined, layer by layer from the outputs.
pub fn find_flow(g: &OpenGraph) -> Option<Flow> {
    let n = g.num_nodes();
    let mut processed = vec![false; n];
    for &o in g.outputs() {
        processed[o] = true;
    }
    let mut layer = vec![0usize; n];
    let mut succ = vec![None; n];
    let mut correctors: BTreeSet<usize> = g.outputs().iter().copied().filter(|&v| !g.is_input(v)).collect();
    let mut k = 0;
    loop {
        k += 1;
        let mut new_nodes = BTreeSet::new();
        let mut used = BTreeSet::new();
        for &v in &correctors {
            let open: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| !processed[u]).collect();
            if open.len() == 1 {
                let u = open[0];
                if new_nodes.contains(&u) {
                    continue;
                }
                succ[u] = Some(v);
                layer[u] = k;
                new_nodes.insert(u);
                used.insert(v);
            }
        }
        if new_nodes.is_empty() {
            break;
        }
        for &u in &new_nodes {
            processed[u] = true;
        }
        correctors = correctors
            .difference(&used)
            .copied()
            .chain(new_nodes.iter().copied().filter(|&u| !g.is_input(u)))
            .collect();
    }
    if processed.iter().any(|p| !p) {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| layer[b].cmp(&layer[a]).then(a.cmp(&b)));
    Flow::new(succ, order).ok()
}

/// Check the causal-flow conditions and schedule consistency.
pub fn verify_flow(g: &OpenGraph, fl: &Flow) -> bool {
    let n = g.num_nodes();
    if fl.num_nodes() != n {
        return false;
    }
    for i in 0..n {
        match (g.is_output(i), fl.f(i)) {
            (true, None) => {}
            (false, Some(fi)) => {
                if fi >= n || g.is_input(fi) || !g.has_edge(i, fi) {
                    return false;
                }
                if fl.position(i) >= fl.position(fi) {
                    return false;
                }
                for &j in g.neighbors(fi) {
                    if j != i && fl.position(i) >= fl.position(j) {
                        return false;
                    }
                }
            }
            _ => return false,
        }
    }
    // f is injective whenever the conditions hold, but check anyway
    let mut seen = BTreeSet::new();
    (0..n).filter_map(|i| fl.f(i)).all(|v| seen.insert(v))
}

/// Two-colouring by BFS; each component starts from its smallest node with
/// colour 0. Returns `None` for graphs with an odd cycle.
pub fn bipartition(g: &OpenGraph) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = g.num_nodes();
    let mut color: Vec<Option<u8>> = vec![None; n];
    for s in 0..n {
        if color[s].is_some() {
            continue;
        }
        color[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].unwrap();
            for &v in g.neighbors(u) {
                match color[v] {
                    None => {
                        color[v] = Some(1 - cu);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => return None,
                    _ => {}
                }
            }
        }
    }
    let a = (0..n).filter(|&v| color[v] == Some(0)).collect();
    let b = (0..n).filter(|&v| color[v] == Some(1)).collect();
    Some((a, b))
}

/// Path graph 0 - 1 - ... - (len-1), I = {0}, O = {len-1}.
pub fn wire(len: usize) -> OpenGraph {
    let edges: Vec<(usize, usize)> = (1..len).map(|k| (k - 1, k)).collect();
    OpenGraph::new(len, &edges, &[0], &[len - 1]).expect("wire is well formed")
}
