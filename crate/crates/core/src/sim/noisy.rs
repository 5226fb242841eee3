use super::mbqc::{preparation, resolve_basis, xy_vectors, z_vectors};
use crate::density::{append_qubit, apply_1q_both, apply_cz_both, check_prob, depolarize_raw, DensityMatrix};
use crate::error::{Error, Result};
use crate::graph::{Flow, OpenGraph};
use crate::linalg::{self, CMatrix, C64};
use crate::pattern::{Basis, MeasurementPlan, NodeMeasurement};

/// Live qubits the density engine will hold at once.
pub const MAX_DENSITY_QUBITS: usize = 10;

struct Live {
    rho: CMatrix,
    slots: Vec<usize>,
}

impl Live {
    fn n(&self) -> usize {
        self.slots.len()
    }

    fn slot(&self, v: usize) -> usize {
        self.slots.iter().position(|&x| x == v).expect("node is live")
    }

    fn cz(&mut self, u: usize, v: usize) {
        let (su, sv, n) = (self.slot(u), self.slot(v), self.n());
        apply_cz_both(&mut self.rho, n, su, sv);
    }

    fn depolarize(&mut self, v: usize, p: f64) {
        let (s, n) = (self.slot(v), self.n());
        depolarize_raw(&mut self.rho, n, s, p);
    }

    /// <b| rho |b> on the slot of `v`, which is dropped
    fn contract(&self, v: usize, b: [C64; 2]) -> CMatrix {
        let n = self.n();
        let low = n - 1 - self.slot(v);
        let lmask = (1usize << low) - 1;
        let half = self.rho.nrows() / 2;
        let idx = |i: usize, s: usize| ((i >> low) << (low + 1)) | (i & lmask) | (s << low);
        CMatrix::from_fn(half, half, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for x in 0..2 {
                for y in 0..2 {
                    acc += b[x].conj() * self.rho[(idx(i, x), idx(j, y))] * b[y];
                }
            }
            acc
        })
    }
}

/// Density-matrix execution with depolarizing noise of strength `p` on
/// every resource qubit, applied once the qubit's last CZ is in place.
/// All outcomes are summed with their flow corrections (deferred
/// measurement). Output is over `O` in `O` order.
pub fn run_noisy_mbqc(g: &OpenGraph, fl: &Flow, plan: &MeasurementPlan, input: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_prob(p)?;
    if input.num_qubits() != g.inputs().len() {
        return Err(Error::DimensionMismatch { expected: g.inputs().len(), got: input.num_qubits() });
    }
    let n = g.num_nodes();
    let mut live = Live { rho: input.matrix().clone(), slots: g.inputs().to_vec() };
    let mut allocated = vec![false; n];
    let mut noised = vec![false; n];
    for &v in g.inputs() {
        allocated[v] = true;
    }
    let mut pending_edges: Vec<usize> = (0..n).map(|v| g.neighbors(v).len()).collect();
    for (u, v) in g.edges() {
        if allocated[u] && allocated[v] {
            live.cz(u, v);
            pending_edges[u] -= 1;
            pending_edges[v] -= 1;
        }
    }
    let settle = |live: &mut Live, noised: &mut Vec<bool>, pending: &Vec<usize>, allocated: &Vec<bool>, v: usize| {
        if allocated[v] && pending[v] == 0 && !noised[v] {
            noised[v] = true;
            live.depolarize(v, p);
        }
    };
    for &v in g.inputs() {
        settle(&mut live, &mut noised, &pending_edges, &allocated, v);
    }
    let mut allocate = |live: &mut Live, allocated: &mut Vec<bool>, noised: &mut Vec<bool>, v: usize| -> Result<()> {
        if allocated[v] {
            return Ok(());
        }
        let (amp, _) = preparation(g, v, !g.is_output(v));
        live.rho = append_qubit(&live.rho, amp);
        live.slots.push(v);
        allocated[v] = true;
        if live.n() > MAX_DENSITY_QUBITS {
            return Err(Error::DimensionOverflow { qubits: live.n(), limit: MAX_DENSITY_QUBITS });
        }
        for &u in g.neighbors(v) {
            if allocated[u] {
                live.cz(u, v);
                pending_edges[u] -= 1;
                pending_edges[v] -= 1;
                settle(live, noised, &pending_edges, allocated, u);
            }
        }
        settle(live, noised, &pending_edges, allocated, v);
        Ok(())
    };
    let outcomes = vec![None; n];
    for q in fl.measurement_order(g) {
        for &u in g.neighbors(q) {
            allocate(&mut live, &mut allocated, &mut noised, u)?;
        }
        allocate(&mut live, &mut allocated, &mut noised, q)?;
        let m = plan.get(q).ok_or_else(|| Error::Pattern(format!("node {q} has no measurement")))?;
        if matches!(m, NodeMeasurement::Conditional { .. }) {
            return Err(Error::Pattern(format!("node {q}: conditional measurement needs branch simulation")));
        }
        let basis = resolve_basis(m, &outcomes)?;
        let (_, shift) = preparation(g, q, true);
        let (vecs, is_xy) = match basis {
            Basis::Xy(a) => (xy_vectors(a - if g.is_input(q) { 0.0 } else { shift }), true),
            Basis::Z => (z_vectors(), false),
        };
        let fix = if is_xy {
            let fq = fl.f(q).expect("measured node has a successor");
            let mut fix = vec![(fq, linalg::pauli_x())];
            fix.extend(g.neighbors(fq).iter().filter(|&&j| j != q).map(|&j| (j, linalg::pauli_z())));
            for &(v, _) in &fix {
                allocate(&mut live, &mut allocated, &mut noised, v)?;
            }
            fix
        } else {
            Vec::new()
        };
        let r0 = live.contract(q, vecs[0]);
        let mut r1 = live.contract(q, vecs[1]);
        let s = live.slot(q);
        live.slots.remove(s);
        let nl = live.n();
        for (v, m) in fix {
            let sv = live.slot(v);
            apply_1q_both(&mut r1, nl, sv, &m);
        }
        live.rho = r0 + r1;
    }
    for &o in g.outputs() {
        allocate(&mut live, &mut allocated, &mut noised, o)?;
    }
    for &o in g.outputs() {
        if !noised[o] {
            noised[o] = true;
            live.depolarize(o, p);
        }
    }
    let order: Vec<usize> = g.outputs().iter().map(|&o| live.slot(o)).collect();
    let dm = DensityMatrix::from_matrix(live.rho)?;
    let out = dm.partial_trace(&order)?;
    Ok(out)
}
