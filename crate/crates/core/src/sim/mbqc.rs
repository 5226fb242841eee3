use crate::error::{Error, Result};
use crate::graph::{Flow, OpenGraph};
use crate::linalg::{self, c, CMatrix, Mat2, C64, ZERO};
use crate::pattern::{Basis, MeasurementPattern, MeasurementPlan, NodeMeasurement};
use crate::state::StateVector;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Active qubits plus reference qubits the engine will hold at once.
pub const MAX_LIVE_QUBITS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// XY outcomes post-selected to 0 (renormalized by sqrt 2 each);
    /// Z outcomes still branch.
    Ideal,
    /// Every outcome branches; XY outcome 1 is compensated along the flow.
    BranchAll,
}

#[derive(Debug, Clone)]
pub struct Branch {
    /// (node, outcome) in measurement order.
    pub outcomes: Vec<(usize, u8)>,
    pub probability: f64,
    /// Normalized output over `O`; `None` for zero-probability branches.
    pub state: Option<StateVector>,
}

/// Unnormalized linear map of one outcome branch: column `k` is the output
/// (over `O`) produced from input column `k`.
#[derive(Debug, Clone)]
pub struct BranchOperator {
    pub outcomes: Vec<(usize, u8)>,
    pub matrix: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Fresh,
    Live,
    Gone,
}

#[derive(Clone)]
struct Register {
    amps: Vec<C64>,
    /// node per slot; reference qubits count down from usize::MAX
    slots: Vec<usize>,
}

impl Register {
    fn n(&self) -> usize {
        self.slots.len()
    }

    fn slot(&self, node: usize) -> usize {
        self.slots.iter().position(|&v| v == node).expect("node is live")
    }

    fn append(&mut self, node: usize, v: [C64; 2]) {
        let mut next = Vec::with_capacity(self.amps.len() * 2);
        for a in &self.amps {
            next.push(a * v[0]);
            next.push(a * v[1]);
        }
        self.amps = next;
        self.slots.push(node);
    }

    fn cz(&mut self, a: usize, b: usize) {
        let (sa, sb, n) = (self.slot(a), self.slot(b), self.n());
        linalg::apply_cz(&mut self.amps, n, sa, sb);
    }

    fn apply(&mut self, node: usize, m: &Mat2) {
        let (s, n) = (self.slot(node), self.n());
        linalg::apply_1q(&mut self.amps, n, s, m);
    }

    /// Contract `node` with <b| and drop its slot.
    fn project(&mut self, node: usize, b: [C64; 2], scale: f64) {
        let n = self.n();
        let s = self.slot(node);
        let low = n - 1 - s;
        let lmask = (1usize << low) - 1;
        let half = self.amps.len() / 2;
        let (b0, b1) = (b[0].conj() * scale, b[1].conj() * scale);
        let mut next = vec![ZERO; half];
        for (i, z) in next.iter_mut().enumerate() {
            let hi = (i >> low) << (low + 1);
            let base = hi | (i & lmask);
            *z = b0 * self.amps[base] + b1 * self.amps[base | (1 << low)];
        }
        self.amps = next;
        self.slots.remove(s);
    }

    /// Amplitudes reordered so that `order` lists the slots from most to
    /// least significant.
    fn extract(&self, order: &[usize]) -> Vec<C64> {
        let n = self.n();
        let pos: Vec<usize> = order.iter().map(|&v| self.slots.iter().position(|&x| x == v).unwrap()).collect();
        let mut out = vec![ZERO; self.amps.len()];
        for (k, z) in out.iter_mut().enumerate() {
            let mut src = 0usize;
            for (t, &p) in pos.iter().enumerate() {
                if (k >> (n - 1 - t)) & 1 == 1 {
                    src |= 1 << (n - 1 - p);
                }
            }
            *z = self.amps[src];
        }
        out
    }
}

/// Eigenvectors (|0> ± e^{i angle}|1>)/sqrt 2 of cos(a) X + sin(a) Y; outcome 0
/// teleports H exp(i angle Z / 2) onto the successor.
pub(crate) fn xy_vectors(angle: f64) -> [[C64; 2]; 2] {
    let h = c(FRAC_1_SQRT_2, 0.0);
    let e = linalg::cis(angle) * FRAC_1_SQRT_2;
    [[h, e], [h, -e]]
}

pub(crate) fn z_vectors() -> [[C64; 2]; 2] {
    [[linalg::ONE, ZERO], [ZERO, linalg::ONE]]
}

/// State a node is physically prepared in, and the angle shift that folds an
/// equator preparation |0> + e^{i b}|1> of a measured node into its angle.
pub(crate) fn preparation(g: &OpenGraph, v: usize, measured: bool) -> ([C64; 2], f64) {
    let s = g.init_state(v);
    if measured {
        if let Some(beta) = s.equator_phase() {
            let h = c(FRAC_1_SQRT_2, 0.0);
            return ([h, h], beta);
        }
    }
    (s.amplitudes(), 0.0)
}

pub(crate) fn resolve_basis(m: &NodeMeasurement, outcomes: &[Option<u8>]) -> Result<Basis> {
    match m {
        NodeMeasurement::Fixed(b) => Ok(*b),
        NodeMeasurement::Conditional { controls, angle, otherwise } => {
            let mut all = true;
            for &cn in controls {
                match outcomes[cn] {
                    Some(o) => all &= o == 1,
                    None => return Err(Error::Role(format!("control {cn} not yet measured"))),
                }
            }
            Ok(if all { Basis::Xy(*angle) } else { *otherwise })
        }
    }
}

struct Engine<'a> {
    g: &'a OpenGraph,
    fl: &'a Flow,
    plan: &'a MeasurementPlan,
    mode: Mode,
    order: Vec<usize>,
    out_order: Vec<usize>,
}

#[derive(Clone)]
struct Walk {
    reg: Register,
    status: Vec<Status>,
    outcomes: Vec<Option<u8>>,
    record: Vec<(usize, u8)>,
}

impl Engine<'_> {
    fn allocate(&self, w: &mut Walk, v: usize) -> Result<()> {
        if w.status[v] != Status::Fresh {
            return Ok(());
        }
        let (amp, _) = preparation(self.g, v, !self.g.is_output(v));
        w.reg.append(v, amp);
        w.status[v] = Status::Live;
        if w.reg.n() > MAX_LIVE_QUBITS {
            return Err(Error::DimensionOverflow { qubits: w.reg.n(), limit: MAX_LIVE_QUBITS });
        }
        for &u in self.g.neighbors(v) {
            match w.status[u] {
                Status::Live => w.reg.cz(u, v),
                Status::Gone => return Err(Error::FlowMismatch(format!("node {u} measured before neighbour {v} was prepared"))),
                Status::Fresh => {}
            }
        }
        Ok(())
    }

    fn walk(&self, mut w: Walk, k: usize, out: &mut Vec<(Vec<(usize, u8)>, Vec<C64>)>) -> Result<()> {
        if k == self.order.len() {
            for &o in self.g.outputs() {
                self.allocate(&mut w, o)?;
            }
            out.push((w.record, w.reg.extract(&self.out_order)));
            return Ok(());
        }
        let q = self.order[k];
        for &u in self.g.neighbors(q) {
            self.allocate(&mut w, u)?;
        }
        self.allocate(&mut w, q)?;
        let m = self.plan.get(q).ok_or_else(|| Error::Pattern(format!("node {q} has no measurement")))?;
        let basis = resolve_basis(m, &w.outcomes)?;
        let (_, shift) = preparation(self.g, q, true);
        let (vecs, is_xy) = match basis {
            Basis::Xy(a) => (xy_vectors(a - if self.g.is_input(q) { 0.0 } else { shift }), true),
            Basis::Z => (z_vectors(), false),
        };
        if is_xy && self.mode == Mode::Ideal {
            w.reg.project(q, vecs[0], SQRT_2);
            w.status[q] = Status::Gone;
            w.outcomes[q] = Some(0);
            w.record.push((q, 0));
            return self.walk(w, k + 1, out);
        }
        let mut second = w.clone();
        w.reg.project(q, vecs[0], 1.0);
        w.status[q] = Status::Gone;
        w.outcomes[q] = Some(0);
        w.record.push((q, 0));
        self.walk(w, k + 1, out)?;

        second.reg.project(q, vecs[1], 1.0);
        second.status[q] = Status::Gone;
        second.outcomes[q] = Some(1);
        second.record.push((q, 1));
        if is_xy {
            let fq = self.fl.f(q).expect("measured node has a successor");
            let zs: Vec<usize> = self.g.neighbors(fq).iter().copied().filter(|&j| j != q).collect();
            // every CZ touching fq must be in place before the correction
            self.allocate(&mut second, fq)?;
            for &j in &zs {
                self.allocate(&mut second, j)?;
            }
            second.reg.apply(fq, &linalg::pauli_x());
            for &j in &zs {
                second.reg.apply(j, &linalg::pauli_z());
            }
        }
        self.walk(second, k + 1, out)
    }
}

fn run_raw(
    g: &OpenGraph,
    fl: &Flow,
    plan: &MeasurementPlan,
    mode: Mode,
    init: Vec<C64>,
    refs: usize,
) -> Result<Vec<(Vec<(usize, u8)>, Vec<C64>)>> {
    if plan.len() != g.num_nodes() || fl.num_nodes() != g.num_nodes() {
        return Err(Error::FlowMismatch("flow/plan size differs from graph".into()));
    }
    let n = g.num_nodes();
    let mut status = vec![Status::Fresh; n];
    let mut slots: Vec<usize> = g.inputs().to_vec();
    for &v in g.inputs() {
        status[v] = Status::Live;
    }
    slots.extend((0..refs).map(|r| usize::MAX - r));
    let mut reg = Register { amps: init, slots };
    for (u, v) in g.edges() {
        if g.is_input(u) && g.is_input(v) {
            reg.cz(u, v);
        }
    }
    let mut out_order = g.outputs().to_vec();
    out_order.extend((0..refs).map(|r| usize::MAX - r));
    let engine = Engine { g, fl, plan, mode, order: fl.measurement_order(g), out_order };
    let walk = Walk { reg, status, outcomes: vec![None; n], record: Vec::new() };
    let mut out = Vec::new();
    engine.walk(walk, 0, &mut out)?;
    Ok(out)
}

/// Run the pattern on `input` (over `I`, in `I` order).
pub fn run_mbqc(g: &OpenGraph, fl: &Flow, plan: &MeasurementPlan, input: &StateVector, mode: Mode) -> Result<Vec<Branch>> {
    if input.num_qubits() != g.inputs().len() {
        return Err(Error::DimensionMismatch { expected: g.inputs().len(), got: input.num_qubits() });
    }
    let raw = run_raw(g, fl, plan, mode, input.amplitudes().to_vec(), 0)?;
    Ok(raw
        .into_iter()
        .map(|(outcomes, amps)| {
            let probability = linalg::norm_sqr(&amps);
            let state = if probability > 1e-300 { StateVector::normalized(amps).ok() } else { None };
            Branch { outcomes, probability, state }
        })
        .collect())
}

/// Ideal-mode output of an all-XY pattern.
pub fn run_pattern(g: &OpenGraph, fl: &Flow, p: &MeasurementPattern, input: &StateVector) -> Result<StateVector> {
    let plan = MeasurementPlan::from_pattern(g, p);
    let mut b = run_mbqc(g, fl, &plan, input, Mode::Ideal)?;
    b.pop().and_then(|b| b.state).ok_or(Error::Pattern("pattern annihilates the input".into()))
}

/// Branch-wise linear maps restricted to the span of `columns` (each a
/// vector over `I`). Passing the computational basis gives full operators.
pub fn branch_operators(
    g: &OpenGraph,
    fl: &Flow,
    plan: &MeasurementPlan,
    mode: Mode,
    columns: &[Vec<C64>],
) -> Result<Vec<BranchOperator>> {
    let din = 1usize << g.inputs().len();
    if columns.is_empty() {
        return Err(Error::InvalidParameter("no input columns".into()));
    }
    let ncols = columns.len().next_power_of_two();
    let refs = ncols.trailing_zeros() as usize;
    let mut init = vec![ZERO; din * ncols];
    for (cidx, col) in columns.iter().enumerate() {
        if col.len() != din {
            return Err(Error::DimensionMismatch { expected: din, got: col.len() });
        }
        for (k, &a) in col.iter().enumerate() {
            init[k * ncols + cidx] = a;
        }
    }
    let raw = run_raw(g, fl, plan, mode, init, refs)?;
    let dout = 1usize << g.outputs().len();
    Ok(raw
        .into_iter()
        .map(|(outcomes, amps)| {
            let matrix = CMatrix::from_fn(dout, columns.len(), |o, k| amps[o * ncols + k]);
            BranchOperator { outcomes, matrix }
        })
        .collect())
}
