//! Gate circuits, dense unitaries and the normal form used to compare
//! translated circuits with closed-form expressions.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE};
use crate::state::StateVector;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Dense unitaries are built only up to this many wires.
pub const MAX_UNITARY_WIRES: usize = 12;

/// Rotation angles follow exp(-i angle G / 2). `node` records the
/// measured node whose angle the rotation carries, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    H {
        wire: usize,
    },
    Rz {
        wire: usize,
        angle: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        node: Option<usize>,
    },
    Rx {
        wire: usize,
        angle: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        node: Option<usize>,
    },
    Cz {
        a: usize,
        b: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    #[serde(rename = "isingxx")]
    IsingXX {
        a: usize,
        b: usize,
        angle: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        node: Option<usize>,
    },
}

impl Gate {
    pub fn rz(wire: usize, angle: f64) -> Self {
        Gate::Rz { wire, angle, node: None }
    }

    pub fn rx(wire: usize, angle: f64) -> Self {
        Gate::Rx { wire, angle, node: None }
    }

    pub fn ising_xx(a: usize, b: usize, angle: f64) -> Self {
        Gate::IsingXX { a, b, angle, node: None }
    }

    pub fn with_node(self, n: usize) -> Self {
        match self {
            Gate::Rz { wire, angle, .. } => Gate::Rz { wire, angle, node: Some(n) },
            Gate::Rx { wire, angle, .. } => Gate::Rx { wire, angle, node: Some(n) },
            Gate::IsingXX { a, b, angle, .. } => Gate::IsingXX { a, b, angle, node: Some(n) },
            g => g,
        }
    }

    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::H { wire } | Gate::Rz { wire, .. } | Gate::Rx { wire, .. } => vec![wire],
            Gate::Cz { a, b } | Gate::IsingXX { a, b, .. } => vec![a, b],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn node(&self) -> Option<usize> {
        match *self {
            Gate::Rz { node, .. } | Gate::Rx { node, .. } | Gate::IsingXX { node, .. } => node,
            _ => None,
        }
    }

    pub fn apply(&self, amps: &mut [C64], n: usize) {
        match *self {
            Gate::H { wire } => linalg::apply_1q(amps, n, wire, &linalg::hadamard()),
            Gate::Rz { wire, angle, .. } => linalg::apply_1q(amps, n, wire, &linalg::rz(angle)),
            Gate::Rx { wire, angle, .. } => linalg::apply_1q(amps, n, wire, &linalg::rx(angle)),
            Gate::Cz { a, b } => linalg::apply_cz(amps, n, a, b),
            Gate::Cnot { control, target } => linalg::apply_cnot(amps, n, control, target),
            Gate::IsingXX { a, b, angle, .. } => linalg::apply_ising_xx(amps, n, a, b, angle),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |n: Option<usize>| n.map(|v| format!(" @{v}")).unwrap_or_default();
        match *self {
            Gate::H { wire } => write!(f, "h {wire}"),
            Gate::Rz { wire, angle, node } => write!(f, "rz {wire} {angle:.12}{}", tag(node)),
            Gate::Rx { wire, angle, node } => write!(f, "rx {wire} {angle:.12}{}", tag(node)),
            Gate::Cz { a, b } => write!(f, "cz {a} {b}"),
            Gate::Cnot { control, target } => write!(f, "cnot {control} {target}"),
            Gate::IsingXX { a, b, angle, node } => write!(f, "isingxx {a} {b} {angle:.12}{}", tag(node)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCircuit {
    num_wires: usize,
    gates: Vec<Gate>,
    /// Input node carried by each wire, when produced by translation.
    #[serde(default)]
    wire_map: Vec<usize>,
    /// Output node each wire ends on.
    #[serde(default)]
    output_map: Vec<usize>,
}

impl GateCircuit {
    pub fn new(num_wires: usize) -> Self {
        Self { num_wires, gates: Vec::new(), wire_map: Vec::new(), output_map: Vec::new() }
    }

    pub fn from_gates(num_wires: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(num_wires);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub(crate) fn with_maps(mut self, inputs: Vec<usize>, outputs: Vec<usize>) -> Self {
        self.wire_map = inputs;
        self.output_map = outputs;
        self
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        let w = g.wires();
        for &x in &w {
            if x >= self.num_wires {
                return Err(Error::NodeOutOfRange { node: x, num_nodes: self.num_wires });
            }
        }
        if w.len() == 2 && w[0] == w[1] {
            return Err(Error::InvalidParameter(format!("two-qubit gate on a single wire: {g}")));
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn num_wires(&self) -> usize {
        self.num_wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn wire_map(&self) -> &[usize] {
        &self.wire_map
    }

    pub fn output_map(&self) -> &[usize] {
        &self.output_map
    }

    pub fn apply_amps(&self, amps: &mut [C64]) {
        for g in &self.gates {
            g.apply(amps, self.num_wires);
        }
    }

    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        if s.num_qubits() != self.num_wires {
            return Err(Error::DimensionMismatch { expected: self.num_wires, got: s.num_qubits() });
        }
        let mut a = s.amplitudes().to_vec();
        self.apply_amps(&mut a);
        StateVector::new(a)
    }

    pub fn unitary(&self) -> Result<CMatrix> {
        if self.num_wires > MAX_UNITARY_WIRES {
            return Err(Error::DimensionOverflow { qubits: self.num_wires, limit: MAX_UNITARY_WIRES });
        }
        let d = 1usize << self.num_wires;
        let mut m = CMatrix::zeros(d, d);
        for j in 0..d {
            let mut col = m.column_mut(j);
            let col = col.as_mut_slice();
            col[j] = ONE;
            self.apply_amps(col);
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("wires {}\n", self.num_wires);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    /// Rewrite into the Rz / Rx / IsingXX normal form: Hadamards are pushed
    /// to the end (changing Rz <-> Rx and CZ -> CNOT), CNOT-Rx-CNOT windows
    /// become IsingXX, and commuting gates are sorted canonically.
    pub fn normalize(&self) -> GateCircuit {
        let framed = push_hadamards(self.num_wires, &self.gates);
        let fused = fuse_ising(framed);
        let gates = canonical_order(&fused);
        GateCircuit { num_wires: self.num_wires, gates, wire_map: self.wire_map.clone(), output_map: self.output_map.clone() }
    }
}

fn push_hadamards(n: usize, gates: &[Gate]) -> Vec<Gate> {
    let mut pending = vec![false; n];
    let mut out = Vec::with_capacity(gates.len());
    let flush = |w: usize, pending: &mut Vec<bool>, out: &mut Vec<Gate>| {
        if pending[w] {
            out.push(Gate::H { wire: w });
            pending[w] = false;
        }
    };
    for &g in gates {
        match g {
            Gate::H { wire } => pending[wire] = !pending[wire],
            Gate::Rz { wire, angle, node } => out.push(if pending[wire] {
                Gate::Rx { wire, angle, node }
            } else {
                g
            }),
            Gate::Rx { wire, angle, node } => out.push(if pending[wire] {
                Gate::Rz { wire, angle, node }
            } else {
                g
            }),
            Gate::Cz { a, b } => {
                if pending[a] && pending[b] {
                    flush(a, &mut pending, &mut out);
                }
                match (pending[a], pending[b]) {
                    (false, false) => out.push(g),
                    (true, false) => out.push(Gate::Cnot { control: b, target: a }),
                    _ => out.push(Gate::Cnot { control: a, target: b }),
                }
            }
            _ => {
                for w in g.wires() {
                    flush(w, &mut pending, &mut out);
                }
                out.push(g);
            }
        }
    }
    for w in 0..n {
        flush(w, &mut pending, &mut out);
    }
    out
}

/// Replace CNOT(c,t) [Rz(c)...] Rx(c) CNOT(c,t) by the hoisted Rz gates
/// followed by IsingXX on (c,t).
fn fuse_ising(mut gates: Vec<Gate>) -> Vec<Gate> {
    let mut i = 0;
    while i < gates.len() {
        if let Gate::Cnot { control, target } = gates[i] {
            if let Some((end, segment)) = fuse_window(&gates, i, control, target) {
                gates.splice(i..=end, segment);
            }
        }
        i += 1;
    }
    gates
}

fn fuse_window(gates: &[Gate], start: usize, c: usize, t: usize) -> Option<(usize, Vec<Gate>)> {
    let mut before = Vec::new();
    let mut rx: Option<Gate> = None;
    for (j, &g) in gates.iter().enumerate().skip(start + 1) {
        let w = g.wires();
        let on_c = w.contains(&c);
        let on_t = w.contains(&t);
        if g == (Gate::Cnot { control: c, target: t }) {
            let (angle, node) = match rx? {
                Gate::Rx { angle, node, .. } => (angle, node),
                _ => unreachable!(),
            };
            before.push(Gate::IsingXX { a: c.min(t), b: c.max(t), angle, node });
            return Some((j, before));
        }
        if on_t || (on_c && w.len() > 1) {
            return None;
        }
        if !on_c {
            before.push(g);
            continue;
        }
        match (g, rx) {
            (Gate::Rz { .. }, None) => before.push(g),
            (Gate::Rx { .. }, None) => rx = Some(g),
            _ => return None,
        }
    }
    None
}

/// Topological re-sort: among gates whose predecessors on every wire are
/// placed, emit the one with the smallest wire (ties by original index).
fn canonical_order(gates: &[Gate]) -> Vec<Gate> {
    let m = gates.len();
    let mut preds: Vec<usize> = vec![0; m];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut last: std::collections::HashMap<usize, usize> = Default::default();
    for (k, g) in gates.iter().enumerate() {
        let mut ps = BTreeSet::new();
        for w in g.wires() {
            if let Some(&p) = last.get(&w) {
                ps.insert(p);
            }
            last.insert(w, k);
        }
        preds[k] = ps.len();
        for p in ps {
            succs[p].push(k);
        }
    }
    let key = |k: usize| (*gates[k].wires().iter().min().unwrap(), k);
    let mut ready: BTreeSet<(usize, usize)> = (0..m).filter(|&k| preds[k] == 0).map(key).collect();
    let mut out = Vec::with_capacity(m);
    while let Some(&first) = ready.iter().next() {
        ready.remove(&first);
        let k = first.1;
        out.push(gates[k]);
        for &s in &succs[k] {
            preds[s] -= 1;
            if preds[s] == 0 {
                ready.insert(key(s));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, unitary_overlap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_circuit_is_identity() {
        let u = GateCircuit::new(2).unitary().unwrap();
        assert_eq!(u, CMatrix::identity(4, 4));
    }

    #[test]
    fn cz_matrix() {
        let u = GateCircuit::from_gates(2, vec![Gate::Cz { a: 0, b: 1 }]).unwrap().unitary().unwrap();
        let mut want = CMatrix::identity(4, 4);
        want[(3, 3)] = c(-1.0, 0.0);
        assert_eq!(u, want);
    }

    #[test]
    fn rejects_bad_wires() {
        let mut cc = GateCircuit::new(2);
        assert!(cc.push(Gate::H { wire: 2 }).is_err());
        assert!(cc.push(Gate::Cz { a: 1, b: 1 }).is_err());
        assert!(GateCircuit::new(13).unitary().is_err());
    }

    #[test]
    fn normalize_preserves_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut gates = Vec::new();
            for _ in 0..25 {
                let w = rng.random_range(0..3);
                let o = (w + rng.random_range(1..3)) % 3;
                let a: f64 = rng.random_range(-3.0..3.0);
                gates.push(match rng.random_range(0..6) {
                    0 => Gate::H { wire: w },
                    1 => Gate::rz(w, a),
                    2 => Gate::rx(w, a),
                    3 => Gate::Cz { a: w, b: o },
                    4 => Gate::Cnot { control: w, target: o },
                    _ => Gate::ising_xx(w, o, a),
                });
            }
            let circ = GateCircuit::from_gates(3, gates).unwrap();
            let n = circ.normalize();
            assert!(unitary_overlap(&circ.unitary().unwrap(), &n.unitary().unwrap()) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn cnot_rx_cnot_fuses() {
        let circ = GateCircuit::from_gates(
            2,
            vec![Gate::Cnot { control: 1, target: 0 }, Gate::rz(1, 0.3), Gate::rx(1, 0.7), Gate::Cnot { control: 1, target: 0 }],
        )
        .unwrap();
        let n = circ.normalize();
        assert_eq!(n.gates(), &[Gate::rz(1, 0.3), Gate::ising_xx(0, 1, 0.7)]);
    }

    #[test]
    fn json_and_text_dump() {
        let circ = GateCircuit::from_gates(2, vec![Gate::H { wire: 0 }, Gate::rz(1, 0.5).with_node(3)]).unwrap();
        let back: GateCircuit = serde_json::from_str(&circ.to_json()).unwrap();
        assert_eq!(back, circ);
        assert!(circ.to_text().contains("rz 1 0.500000000000 @3"));
    }
}
