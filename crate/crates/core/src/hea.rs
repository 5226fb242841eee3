//! Discrete measurement-angle search for the hardware-efficient ansatz.
//!
//! Angles are restricted to {0, pi/4, pi/2}; pi/4 becomes physical by
//! injecting |T> resource states. Patterns are vectors of angle indices
//! into the active angle set, in parameter order.

use crate::error::{Error, Result};
use crate::graph::{Flow, InitState, OpenGraph};
use crate::learn::{GateObjective, Objective, PairDataset, PatternModel};
use crate::linalg::{ising_xx, kron, mat2_to_dense, t_gate, CMatrix};
use crate::muta::{build_layer, LayerSpec};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

pub const HEA_ANGLES: [f64; 3] = [0.0, FRAC_PI_4, FRAC_PI_2];
pub const CLIFFORD_ANGLES: [f64; 2] = [0.0, FRAC_PI_2];

/// Largest window enumerated exhaustively.
pub const MAX_WINDOW: usize = 12;

/// Ordered node slices over the trainable nodes of a model, stored as
/// parameter indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSchedule {
    pub nodes: Vec<Vec<usize>>,
    slices: Vec<Vec<usize>>,
}

impl SliceSchedule {
    /// Output nodes listed in a slice carry no angle and are dropped;
    /// slices left empty vanish.
    pub fn new(model: &PatternModel, slices: &[Vec<usize>]) -> Result<Self> {
        let pn = model.roles.param_nodes();
        let mut seen = BTreeSet::new();
        let mut nodes = Vec::new();
        for s in slices {
            let mut kept = Vec::new();
            for &v in s {
                if v >= model.graph.num_nodes() {
                    return Err(Error::NodeOutOfRange { node: v, num_nodes: model.graph.num_nodes() });
                }
                if !seen.insert(v) {
                    return Err(Error::DuplicateNode(v, "slice schedule"));
                }
                if !model.graph.is_output(v) {
                    kept.push(v);
                }
            }
            if !kept.is_empty() {
                nodes.push(kept);
            }
        }
        for &v in &pn {
            if !seen.contains(&v) {
                return Err(Error::InvalidParameter(format!("trainable node {v} is in no slice")));
            }
        }
        let mut index = Vec::new();
        for s in &nodes {
            let mut ix = Vec::new();
            for &v in s {
                match pn.iter().position(|&u| u == v) {
                    Some(k) => ix.push(k),
                    None => return Err(Error::InvalidParameter(format!("node {v} is not trainable"))),
                }
            }
            index.push(ix);
        }
        check_temporal(&model.flow, &nodes)?;
        Ok(Self { nodes, slices: index })
    }

    /// One node per slice in measurement order.
    pub fn per_node(model: &PatternModel) -> Result<Self> {
        let pn: BTreeSet<usize> = model.roles.param_nodes().into_iter().collect();
        let order: Vec<Vec<usize>> =
            model.flow.measurement_order(&model.graph).into_iter().filter(|v| pn.contains(v)).map(|v| vec![v]).collect();
        Self::new(model, &order)
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Parameter indices of slices `i..i+m`.
    pub fn window(&self, i: usize, m: usize) -> Vec<usize> {
        self.slices[i..i + m].concat()
    }
}

fn check_temporal(fl: &Flow, nodes: &[Vec<usize>]) -> Result<()> {
    for w in nodes.windows(2) {
        let last = w[0].iter().map(|&v| fl.position(v)).max().unwrap_or(0);
        let first = w[1].iter().map(|&v| fl.position(v)).min().unwrap_or(usize::MAX);
        if last > first {
            return Err(Error::InvalidParameter(format!("slice {:?} is measured before slice {:?}", w[1], w[0])));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub epsilon: f64,
    pub n_reset: usize,
    pub l_max: usize,
    pub delta: f64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self { epsilon: 0.0, n_reset: 5, l_max: 4, delta: 1e-3 }
    }
}

impl GreedyConfig {
    pub fn validate(&self, schedule: &SliceSchedule) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidProbability(self.epsilon));
        }
        if self.l_max == 0 || self.l_max > schedule.len() {
            return Err(Error::InvalidParameter(format!("l_max {} outside 1..={}", self.l_max, schedule.len())));
        }
        if self.delta.is_nan() || self.delta <= 0.0 {
            return Err(Error::InvalidParameter(format!("delta {} must be positive", self.delta)));
        }
        if self.n_reset == 0 {
            return Err(Error::InvalidParameter("n_reset must be at least 1".into()));
        }
        let widest = (0..=schedule.len() - self.l_max).map(|i| schedule.window(i, self.l_max).len()).max().unwrap_or(0);
        if widest > MAX_WINDOW {
            return Err(Error::SearchTooLarge(widest));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub index: usize,
    pub candidate_loss: f64,
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub success: bool,
    /// Final pattern of the search itself (with epsilon > 0 this may be
    /// worse than `best`).
    pub pattern: Vec<usize>,
    pub best: Vec<usize>,
    pub best_loss: f64,
    pub log: Vec<Evaluation>,
}

impl SearchResult {
    pub fn evaluations(&self) -> usize {
        self.log.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("evaluation_index,candidate_loss,best_loss\n");
        for e in &self.log {
            s.push_str(&format!("{},{:.12e},{:.12e}\n", e.index, e.candidate_loss, e.best_loss));
        }
        s
    }
}

pub fn to_angles(pattern: &[usize], angles: &[f64]) -> Vec<f64> {
    pattern.iter().map(|&k| angles[k]).collect()
}

struct Recorder<'a, F> {
    loss: &'a F,
    angles: &'a [f64],
    log: Vec<Evaluation>,
    best: Vec<usize>,
    best_loss: f64,
}

impl<F: Fn(&[f64]) -> Result<f64>> Recorder<'_, F> {
    fn eval(&mut self, p: &[usize]) -> Result<f64> {
        let l = (self.loss)(&to_angles(p, self.angles))?;
        if l.is_nan() {
            return Err(Error::NonFinite("search loss".into()));
        }
        if l < self.best_loss {
            self.best_loss = l;
            self.best = p.to_vec();
        }
        self.log.push(Evaluation { index: self.log.len(), candidate_loss: l, best_loss: self.best_loss });
        Ok(l)
    }

    fn finish(self, success: bool, pattern: Vec<usize>) -> SearchResult {
        SearchResult { success, pattern, best: self.best, best_loss: self.best_loss, log: self.log }
    }
}

fn random_pattern<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Advance a mixed-radix counter over `ix`; false once it wraps.
fn next_assignment(p: &mut [usize], ix: &[usize], k: usize) -> bool {
    for &j in ix.iter().rev() {
        p[j] += 1;
        if p[j] < k {
            return true;
        }
        p[j] = 0;
    }
    false
}

/// Slice-wise epsilon-greedy search over {0, pi/4, pi/2}.
///
/// Stops as soon as the current pattern has loss below `delta`, including
/// the random initial pattern.
pub fn greedy_opt<F, R>(loss: F, schedule: &SliceSchedule, cfg: &GreedyConfig, rng: &mut R) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    cfg.validate(schedule)?;
    let n: usize = schedule.slices.iter().map(Vec::len).sum();
    let k = HEA_ANGLES.len();
    let mut rec = Recorder { loss: &loss, angles: &HEA_ANGLES, log: Vec::new(), best: Vec::new(), best_loss: f64::INFINITY };
    let mut theta = Vec::new();
    for _ in 0..cfg.n_reset {
        theta = random_pattern(n, k, rng);
        let mut cur = rec.eval(&theta)?;
        if cur < cfg.delta {
            return Ok(rec.finish(true, theta));
        }
        for m in 1..=cfg.l_max {
            for i in 0..=schedule.len() - m {
                let ix = schedule.window(i, m);
                let mut cand = theta.clone();
                for &j in &ix {
                    cand[j] = 0;
                }
                loop {
                    let l = rec.eval(&cand)?;
                    if l < cur || rng.random::<f64>() < cfg.epsilon {
                        theta.clone_from(&cand);
                        cur = l;
                        if cur < cfg.delta {
                            return Ok(rec.finish(true, theta));
                        }
                    }
                    if !next_assignment(&mut cand, &ix, k) {
                        break;
                    }
                }
            }
        }
    }
    Ok(rec.finish(false, theta))
}

/// Uniform i.i.d. patterns until one has loss below `delta` or the budget
/// runs out.
pub fn random_search<F, R>(loss: F, num_params: usize, budget: usize, delta: f64, rng: &mut R) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let mut rec = Recorder { loss: &loss, angles: &HEA_ANGLES, log: Vec::new(), best: Vec::new(), best_loss: f64::INFINITY };
    let mut last = Vec::new();
    for _ in 0..budget {
        last = random_pattern(num_params, HEA_ANGLES.len(), rng);
        if rec.eval(&last)? < delta {
            return Ok(rec.finish(true, last));
        }
    }
    Ok(rec.finish(false, last))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exhaustive {
    pub angles: Vec<f64>,
    pub best: Vec<usize>,
    pub best_loss: f64,
    /// Loss of every pattern, in mixed-radix order (first parameter most
    /// significant).
    pub losses: Vec<f64>,
}

impl Exhaustive {
    pub fn count_below(&self, tol: f64) -> usize {
        self.losses.iter().filter(|&&l| l < tol).count()
    }
}

/// Every pattern over `angles`; at most `MAX_WINDOW` parameters.
pub fn exhaustive<F>(loss: F, num_params: usize, angles: &[f64]) -> Result<Exhaustive>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if num_params > MAX_WINDOW {
        return Err(Error::SearchTooLarge(num_params));
    }
    let k = angles.len();
    let total = k.pow(num_params as u32);
    let decode = |mut idx: usize| {
        let mut p = vec![0; num_params];
        for j in (0..num_params).rev() {
            p[j] = idx % k;
            idx /= k;
        }
        p
    };
    let losses: Vec<f64> = (0..total).into_par_iter().map(|i| loss(&to_angles(&decode(i), angles))).collect::<Result<_>>()?;
    let mut bi = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[bi] {
            bi = i;
        }
    }
    Ok(Exhaustive { angles: angles.to_vec(), best: decode(bi), best_loss: losses[bi], losses })
}

/// Prepare `nodes` in |T>.
pub fn inject_magic(g: &OpenGraph, nodes: &[usize]) -> Result<OpenGraph> {
    let mut out = g.clone();
    for &v in nodes {
        if v >= g.num_nodes() {
            return Err(Error::NodeOutOfRange { node: v, num_nodes: g.num_nodes() });
        }
        if g.is_input(v) || g.is_output(v) {
            return Err(Error::InvalidParameter(format!("cannot inject into input/output node {v}")));
        }
        out = out.with_init(v, InitState::T)?;
    }
    Ok(out)
}

/// (T x 1) IsingXX(-pi/4).
pub fn t_isingxx_target() -> CMatrix {
    let id = CMatrix::identity(2, 2);
    kron(&mat2_to_dense(&t_gate()), &id) * ising_xx(-FRAC_PI_4)
}

pub const MAGIC_NODES: [usize; 2] = [2, 6];

/// Temporal slices of the (2,0) layer, outputs included as listed.
pub fn muta20_slices() -> Vec<Vec<usize>> {
    vec![vec![0], vec![5], vec![6], vec![1], vec![2, 7], vec![3, 8], vec![4, 9]]
}

/// The (2,0) layer, optionally with |T> at nodes 2 and 6.
pub fn muta20_model(inject: bool) -> Result<PatternModel> {
    let m = build_layer(&LayerSpec::fully_connected(2, 0))?;
    let mut model = PatternModel::from_muta(&m)?;
    if inject {
        model.graph = inject_magic(&model.graph, &MAGIC_NODES)?;
    }
    Ok(model)
}

/// Gate learning of (T x 1) IsingXX(-pi/4) on Haar pairs.
pub fn t_isingxx_objective<R: Rng + ?Sized>(inject: bool, n_train: usize, n_test: usize, rng: &mut R) -> Result<GateObjective> {
    let data = PairDataset::haar(&t_isingxx_target(), n_train + n_test, n_train, rng)?;
    GateObjective::new(muta20_model(inject)?, data)
}

/// Training loss of `obj` as a search objective.
pub fn search_loss(obj: &GateObjective) -> impl Fn(&[f64]) -> Result<f64> + Sync + '_ {
    move |p| obj.train_loss(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_overlap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn task(inject: bool) -> GateObjective {
        t_isingxx_objective(inject, 7, 3, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    }

    #[test]
    fn schedule_drops_outputs() {
        let model = muta20_model(true).unwrap();
        let s = SliceSchedule::new(&model, &muta20_slices()).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.nodes, vec![vec![0], vec![5], vec![6], vec![1], vec![2, 7], vec![3, 8]]);
        assert_eq!(s.window(3, 3), vec![1, 2, 6, 3, 7]);
        assert!(SliceSchedule::new(&model, &[vec![0], vec![1]]).is_err());
        let swapped = vec![vec![5], vec![0], vec![6], vec![2, 7], vec![1], vec![3, 8]];
        assert!(SliceSchedule::new(&model, &swapped).is_err());
        assert_eq!(SliceSchedule::per_node(&model).unwrap().len(), 8);
    }

    #[test]
    fn injection_validation() {
        let model = muta20_model(false).unwrap();
        assert_eq!(inject_magic(&model.graph, &[]).unwrap(), model.graph);
        assert!(inject_magic(&model.graph, &[0]).is_err());
        assert!(inject_magic(&model.graph, &[9]).is_err());
        let g = inject_magic(&model.graph, &[2]).unwrap();
        assert_eq!(g.init_state(2), InitState::T);
    }

    #[test]
    fn config_guards() {
        let model = muta20_model(true).unwrap();
        let s = SliceSchedule::per_node(&model).unwrap();
        let bad = GreedyConfig { epsilon: 1.5, ..GreedyConfig::default() };
        assert!(bad.validate(&s).is_err());
        assert!(GreedyConfig { l_max: 9, ..GreedyConfig::default() }.validate(&s).is_err());
        let sum = |p: &[f64]| Ok(p.iter().sum::<f64>());
        assert_eq!(exhaustive(sum, 13, &HEA_ANGLES).unwrap_err(), Error::SearchTooLarge(13));
    }

    #[test]
    fn trivial_delta_stops_after_one_evaluation() {
        let obj = task(true);
        let s = SliceSchedule::new(&obj.model, &muta20_slices()).unwrap();
        let cfg = GreedyConfig { delta: 2.0, ..GreedyConfig::default() };
        let r = greedy_opt(search_loss(&obj), &s, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(r.success);
        assert_eq!(r.evaluations(), 1);
        let rs = random_search(search_loss(&obj), 8, 1, 1e-3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(rs.best, rs.pattern);
    }

    #[test]
    fn greedy_is_monotone_and_log_exact() {
        let obj = task(true);
        let s = SliceSchedule::new(&obj.model, &muta20_slices()).unwrap();
        let cfg = GreedyConfig { n_reset: 1, delta: 1e-9, l_max: 2, ..GreedyConfig::default() };
        let r = greedy_opt(search_loss(&obj), &s, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(r.log.windows(2).all(|w| w[1].best_loss <= w[0].best_loss));
        let again = obj.train_loss(&to_angles(&r.best, &HEA_ANGLES)).unwrap();
        assert!((again - r.best_loss).abs() < 1e-12);
        assert_eq!(r.pattern, r.best);
    }

    #[test]
    fn exhaustive_finds_sum_minimum() {
        let f = |p: &[f64]| Ok(p.iter().map(|a| (a - FRAC_PI_4).powi(2)).sum::<f64>());
        let r = exhaustive(f, 4, &HEA_ANGLES).unwrap();
        assert_eq!(r.best, vec![1; 4]);
        assert_eq!(r.losses.len(), 81);
        assert_eq!(r.count_below(1e-12), 1);
    }

    #[test]
    fn injected_optimum_exists_and_clifford_fails() {
        let obj = task(true);
        let ex = exhaustive(search_loss(&obj), 8, &HEA_ANGLES).unwrap();
        assert!(ex.best_loss < 1e-6, "{}", ex.best_loss);
        let u = obj.model.unitary(&to_angles(&ex.best, &HEA_ANGLES)).unwrap();
        assert!(unitary_overlap(&u, &t_isingxx_target()) > 1.0 - 1e-9);
        let plain = task(false);
        let cl = exhaustive(search_loss(&plain), 8, &CLIFFORD_ANGLES).unwrap();
        assert!(cl.best_loss > 1e-3, "{}", cl.best_loss);
    }

    #[test]
    fn per_node_full_window_is_exhaustive() {
        let obj = task(true);
        let s = SliceSchedule::per_node(&obj.model).unwrap();
        let cfg = GreedyConfig { n_reset: 1, l_max: 8, delta: 1e-9, ..GreedyConfig::default() };
        let r = greedy_opt(search_loss(&obj), &s, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert!(r.best_loss < 1e-6);
    }
}
