//! Measurement pattern to gate circuit translation along f-paths.

use crate::circuit::{Gate, GateCircuit};
use crate::error::{Error, Result};
use crate::graph::{verify_flow, Flow, OpenGraph};
use crate::linalg::CMatrix;
use crate::pattern::MeasurementPattern;

/// Wire index of every node: the f-path (starting at input `I[k]`) it lies on.
pub fn f_paths(g: &OpenGraph, fl: &Flow) -> Result<Vec<Vec<usize>>> {
    let n = g.num_nodes();
    let mut seen = vec![false; n];
    let mut paths = Vec::with_capacity(g.inputs().len());
    for &i in g.inputs() {
        let mut path = vec![i];
        seen[i] = true;
        let mut v = i;
        while let Some(next) = fl.f(v) {
            if seen[next] {
                return Err(Error::FlowMismatch(format!("f-paths intersect at node {next}")));
            }
            seen[next] = true;
            path.push(next);
            v = next;
        }
        if !g.is_output(v) {
            return Err(Error::FlowMismatch(format!("f-path from {i} ends at non-output {v}")));
        }
        paths.push(path);
    }
    if let Some(v) = (0..n).find(|&v| !seen[v]) {
        return Err(Error::OffPath(v));
    }
    Ok(paths)
}

/// Compile an MBQC pattern into the equivalent circuit for the all-zero
/// outcome branch. Wire `k` carries input `I[k]`.
///
/// Measuring node q on wire w at angle a emits H_w exp(i a Z_w / 2), i.e.
/// `Rz(w, -a)` then `H(w)`, preceded by CZ gates for every edge from q to a
/// not-yet-measured node other than f(q). Equator-prepared nodes
/// (|0> + e^{ib}|1>) shift the angle by -b. Edges among outputs become
/// trailing CZ gates.
pub fn translate(g: &OpenGraph, fl: &Flow, p: &MeasurementPattern) -> Result<GateCircuit> {
    let (ni, no) = (g.inputs().len(), g.outputs().len());
    if ni != no {
        return Err(Error::IoMismatch { inputs: ni, outputs: no });
    }
    if !verify_flow(g, fl) {
        return Err(Error::FlowMismatch("not a valid causal flow for this graph".into()));
    }
    let paths = f_paths(g, fl)?;
    let n = g.num_nodes();
    let mut wire = vec![0usize; n];
    for (k, path) in paths.iter().enumerate() {
        for &v in path {
            wire[v] = k;
        }
    }
    let mut front: Vec<usize> = g.inputs().to_vec();
    let mut measured = vec![false; n];
    let mut circ = GateCircuit::new(ni);
    for q in fl.measurement_order(g) {
        let w = wire[q];
        let fq = fl.f(q).expect("measured nodes have a successor");
        for &j in g.neighbors(q) {
            if measured[j] || j == fq {
                continue;
            }
            if front[wire[j]] != j {
                return Err(Error::FlowMismatch(format!("edge ({q},{j}) reaches past the front of wire {}", wire[j])));
            }
            circ.push(Gate::Cz { a: w, b: wire[j] })?;
        }
        let alpha = p.get(q).ok_or_else(|| Error::Pattern(format!("node {q} has no angle")))?;
        let shift = if g.is_input(q) {
            0.0
        } else {
            let s = g.init_state(q);
            s.equator_phase()
                .ok_or_else(|| Error::Pattern(format!("node {q}: init state {s:?} is not on the XY equator")))?
        };
        circ.push(Gate::rz(w, -(alpha - shift)).with_node(q))?;
        circ.push(Gate::H { wire: w })?;
        measured[q] = true;
        front[w] = fq;
    }
    for (u, v) in g.edges() {
        if g.is_output(u) && g.is_output(v) {
            circ.push(Gate::Cz { a: wire[u], b: wire[v] })?;
        }
    }
    let ends = paths.iter().map(|p| *p.last().unwrap()).collect();
    Ok(circ.with_maps(g.inputs().to_vec(), ends))
}

/// Unitary of the translated pattern with columns indexed over `I` and rows
/// over `O`, both in graph order.
pub fn pattern_unitary(g: &OpenGraph, fl: &Flow, p: &MeasurementPattern) -> Result<CMatrix> {
    let circ = translate(g, fl, p)?;
    let u = circ.unitary()?;
    let n = circ.num_wires();
    let ends = circ.output_map();
    let perm: Vec<usize> = g.outputs().iter().map(|o| ends.iter().position(|e| e == o).expect("output ends a path")).collect();
    if perm.iter().enumerate().all(|(t, &w)| t == w) {
        return Ok(u);
    }
    let src = |k: usize| {
        perm.iter().enumerate().fold(0usize, |acc, (t, &w)| acc | (((k >> (n - 1 - t)) & 1) << (n - 1 - w)))
    };
    Ok(CMatrix::from_fn(u.nrows(), u.ncols(), |r, col| u[(src(r), col)]))
}
