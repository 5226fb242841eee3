//! Dynamical Lie algebras of translated circuits and the loss-variance
//! bound 2^n / dim(g) for simple algebras.

use crate::circuit::{Gate, GateCircuit};
use crate::error::{Error, Result};
use crate::learn::{uniform_angles, PatternModel};
use crate::linalg::inner;
use crate::state::StateVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest qubit count for closures (the span lives in 4^n dimensions).
pub const MAX_LIE_QUBITS: usize = 5;

const TOL: f64 = 1e-9;

/// Hermitian Pauli string i^{|x & z|} X^x Z^z, bit `q` of each mask for
/// qubit `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    pub n: usize,
    pub x: u32,
    pub z: u32,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, x: 0, z: 0 }
    }

    pub fn single(n: usize, q: usize, letter: char) -> Result<Self> {
        let mut s = Self::identity(n);
        s.set(q, letter)?;
        Ok(s)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut p = Self::identity(s.chars().count());
        for (q, ch) in s.chars().enumerate() {
            p.set(q, ch)?;
        }
        Ok(p)
    }

    fn set(&mut self, q: usize, letter: char) -> Result<()> {
        if q >= self.n {
            return Err(Error::NodeOutOfRange { node: q, num_nodes: self.n });
        }
        let (x, z) = match letter {
            'I' => (false, false),
            'X' => (true, false),
            'Y' => (true, true),
            'Z' => (false, true),
            _ => return Err(Error::Parse(format!("unknown Pauli letter {letter:?}"))),
        };
        let b = 1 << q;
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn index(&self) -> usize {
        (self.x as usize) | ((self.z as usize) << self.n)
    }

    pub fn from_index(n: usize, i: usize) -> Self {
        let mask = (1usize << n) - 1;
        Self { n, x: (i & mask) as u32, z: (i >> n) as u32 }
    }

    pub fn commutes(&self, o: &Self) -> bool {
        ((self.x & o.z).count_ones() + (self.z & o.x).count_ones()) % 2 == 0
    }

    /// `self * o = i^k * r`, returning (k mod 4, r).
    pub fn mul(&self, o: &Self) -> (u32, Self) {
        let r = Self { n: self.n, x: self.x ^ o.x, z: self.z ^ o.z };
        let k = (self.x & self.z).count_ones() + (o.x & o.z).count_ones() + 2 * (self.z & o.x).count_ones()
            + 3 * (r.x & r.z).count_ones();
        (k % 4, r)
    }

    /// Conjugation by a fixed Clifford gate, sign dropped.
    fn conjugate(&mut self, g: &Gate) {
        let bit = |m: u32, q: usize| (m >> q) & 1;
        match *g {
            Gate::H { wire } => {
                let (xb, zb) = (bit(self.x, wire), bit(self.z, wire));
                self.x = (self.x & !(1 << wire)) | (zb << wire);
                self.z = (self.z & !(1 << wire)) | (xb << wire);
            }
            Gate::Cz { a, b } => {
                self.z ^= (bit(self.x, a) << b) | (bit(self.x, b) << a);
            }
            Gate::Cnot { control, target } => {
                self.x ^= bit(self.x, control) << target;
                self.z ^= bit(self.z, target) << control;
            }
            _ => {}
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            let c = match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// One generator per parameterized rotation, in the frame of the circuit
/// input: fixed Cliffords before a rotation conjugate its generator.
/// The circuit is normalized first. Duplicates are removed.
pub fn extract_generators(c: &GateCircuit) -> Vec<PauliString> {
    let norm = c.normalize();
    let n = norm.num_wires();
    let gates = norm.gates();
    let mut out: Vec<PauliString> = Vec::new();
    for (k, g) in gates.iter().enumerate() {
        if g.node().is_none() {
            continue;
        }
        let mut p = PauliString::identity(n);
        match *g {
            Gate::Rz { wire, .. } => p.z = 1 << wire,
            Gate::Rx { wire, .. } => p.x = 1 << wire,
            Gate::IsingXX { a, b, .. } => p.x = (1 << a) | (1 << b),
            _ => continue,
        }
        for h in gates[..k].iter().rev() {
            if h.node().is_none() {
                p.conjugate(h);
            }
        }
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieClosure {
    pub n: usize,
    /// Independent elements; entry `j` is the real coefficient of i P_j
    /// with P_j = `PauliString::from_index(n, j)`.
    pub basis: Vec<Vec<f64>>,
    pub dim: usize,
    pub is_full: bool,
}

/// Reduced echelon basis for the rank test.
struct Span {
    rows: Vec<(usize, Vec<f64>)>,
}

impl Span {
    /// Adds `v` if independent; returns whether it did.
    fn insert(&mut self, mut v: Vec<f64>) -> bool {
        for (p, r) in &self.rows {
            let f = v[*p];
            if f != 0.0 {
                for (a, b) in v.iter_mut().zip(r) {
                    *a -= f * b;
                }
            }
        }
        let Some((p, &m)) = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())) else {
            return false;
        };
        if m.abs() < TOL {
            return false;
        }
        for a in v.iter_mut() {
            *a /= m;
        }
        for (_, r) in self.rows.iter_mut() {
            let f = r[p];
            if f != 0.0 {
                for (a, b) in r.iter_mut().zip(&v) {
                    *a -= f * b;
                }
            }
        }
        self.rows.push((p, v));
        true
    }
}

/// [iA, iB] for A = sum a_j P_j, B = sum b_k P_k, in the same coordinates.
fn commutator(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (i, &ca) in a.iter().enumerate().filter(|t| t.1.abs() > TOL) {
        let p = PauliString::from_index(n, i);
        for (j, &cb) in b.iter().enumerate().filter(|t| t.1.abs() > TOL) {
            let q = PauliString::from_index(n, j);
            if p.commutes(&q) {
                continue;
            }
            // [iP, iQ] = -2 P Q = -2 i^k R = -2 i^{k-1} (iR), k odd
            let (k, r) = p.mul(&q);
            let s = if k == 1 { -2.0 } else { 2.0 };
            out[r.index()] += s * ca * cb;
        }
    }
    out
}

pub fn lie_closure(gens: &[PauliString]) -> Result<LieClosure> {
    let Some(first) = gens.first() else {
        return Err(Error::InvalidParameter("no generators".into()));
    };
    let n = first.n;
    if n > MAX_LIE_QUBITS {
        return Err(Error::DimensionOverflow { qubits: n, limit: MAX_LIE_QUBITS });
    }
    if let Some(g) = gens.iter().find(|g| g.n != n) {
        return Err(Error::DimensionMismatch { expected: n, got: g.n });
    }
    let d = 1usize << (2 * n);
    let mut span = Span { rows: Vec::new() };
    let mut elems: Vec<Vec<f64>> = Vec::new();
    for g in gens.iter().filter(|g| !g.is_identity()) {
        let mut v = vec![0.0; d];
        v[g.index()] = 1.0;
        if span.insert(v.clone()) {
            elems.push(v);
        }
    }
    let mut next = 0;
    while next < elems.len() {
        let a = elems[next].clone();
        for j in 0..next {
            let cm = commutator(n, &a, &elems[j]);
            if span.insert(cm.clone()) {
                elems.push(cm);
            }
        }
        next += 1;
    }
    let dim = elems.len();
    Ok(LieClosure { n, basis: elems, dim, is_full: dim == d - 1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    /// Monte-Carlo standard error of `variance`.
    pub std_error: f64,
}

/// Loss 1 - |<target| U(theta) |0..0>|^2 over uniform random angles.
pub fn variance_probe<R: Rng + ?Sized>(
    model: &PatternModel,
    target: &StateVector,
    samples: usize,
    rng: &mut R,
) -> Result<VarianceReport> {
    let n = model.graph.inputs().len();
    if n > 3 {
        return Err(Error::DimensionOverflow { qubits: n, limit: 3 });
    }
    if target.num_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, got: target.num_qubits() });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let mut losses = Vec::with_capacity(samples);
    for _ in 0..samples {
        let theta = uniform_angles(model.num_params(), rng);
        let u = model.unitary(&theta)?;
        let col: Vec<_> = u.column(0).iter().copied().collect();
        losses.push(1.0 - inner(target.amplitudes(), &col).norm_sqr());
    }
    let m = samples as f64;
    let mean = losses.iter().sum::<f64>() / m;
    let variance = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let m4 = losses.iter().map(|l| (l - mean).powi(4)).sum::<f64>() / m;
    let std_error = ((m4 - variance * variance).max(0.0) / m).sqrt();
    Ok(VarianceReport { samples, mean, variance, std_error })
}

/// 2^n / dim(g); only claimed for the full (simple) algebra.
pub fn variance_bound(closure: &LieClosure) -> Option<f64> {
    closure.is_full.then(|| (1usize << closure.n) as f64 / closure.dim as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressivityReport {
    pub generators: Vec<String>,
    pub dim: usize,
    pub is_full: bool,
    pub bound: Option<f64>,
    pub empirical_variance: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Generators of the model at zero angles (the translation structure does
/// not depend on the angle values).
pub fn model_generators(model: &PatternModel) -> Result<Vec<PauliString>> {
    let p = model.pattern(&vec![0.0; model.num_params()])?;
    Ok(extract_generators(&crate::translate::translate(&model.graph, &model.flow, &p)?))
}
