use mbqml::density::DensityMatrix;
use mbqml::expressivity::{lie_closure, PauliString};
use mbqml::graph::{bipartition, find_flow, verify_flow, wire, OpenGraph};
use mbqml::kernel::kernel;
use mbqml::learn::{GateObjective, Objective, PairDataset, PatternModel};
use mbqml::linalg::{haar_unitary, kron, unitary_overlap};
use mbqml::muta::{build_layer, concatenate, LayerSpec, NetworkSpec};
use mbqml::pattern::MeasurementPattern;
use mbqml::translate::pattern_unitary;
use mbqml::StateVector;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::f64::consts::PI;

/// Does some injective f: O^c -> I^c with v ~ f(v) admit an acyclic
/// precedence v < f(v), v < w for w ~ f(v), w != v?
fn flow_exists_brute(g: &OpenGraph) -> bool {
    let n = g.num_nodes();
    let measured: Vec<usize> = (0..n).filter(|&v| !g.is_output(v)).collect();
    let choices: Vec<Vec<usize>> =
        measured.iter().map(|&v| g.neighbors(v).iter().copied().filter(|&u| !g.is_input(u)).collect()).collect();
    let mut f = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn acyclic(g: &OpenGraph, measured: &[usize], f: &[usize]) -> bool {
        let n = g.num_nodes();
        let mut succ = vec![BTreeSet::new(); n];
        for &v in measured {
            succ[v].insert(f[v]);
            for &w in g.neighbors(f[v]) {
                if w != v {
                    succ[v].insert(w);
                }
            }
        }
        let mut indeg = vec![0usize; n];
        for s in &succ {
            for &w in s {
                indeg[w] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        seen == n
    }
    fn go(
        k: usize,
        g: &OpenGraph,
        measured: &[usize],
        choices: &[Vec<usize>],
        f: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if k == measured.len() {
            return acyclic(g, measured, f);
        }
        for &u in &choices[k] {
            if used[u] {
                continue;
            }
            used[u] = true;
            f[measured[k]] = u;
            let ok = go(k + 1, g, measured, choices, f, used);
            used[u] = false;
            if ok {
                return true;
            }
        }
        false
    }
    go(0, g, &measured, &choices, &mut f, &mut used)
}

fn open_graph() -> impl Strategy<Value = OpenGraph> {
    (2usize..=12).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n), 0..=(3 * n / 2)),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(n, raw, ins, outs)| {
                let edges: BTreeSet<(usize, usize)> =
                    raw.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
                let edges: Vec<_> = edges.into_iter().collect();
                let inputs: Vec<usize> = (0..n).filter(|&v| ins[v]).collect();
                let outputs: Vec<usize> = (0..n).filter(|&v| outs[v]).collect();
                OpenGraph::new(n, &edges, &inputs, &outputs).unwrap()
            })
    })
}

fn layer_spec(width: usize) -> impl Strategy<Value = LayerSpec> {
    (0..=width, prop::collection::vec(any::<bool>(), width)).prop_map(move |(tip, mask)| {
        if tip == width {
            LayerSpec::disconnected(width)
        } else {
            let j: Vec<usize> = (0..width).filter(|&r| r != tip && mask[r]).collect();
            LayerSpec::new(width, tip, &j)
        }
    })
}

fn network(max_width: usize, max_depth: usize) -> impl Strategy<Value = Vec<LayerSpec>> {
    (1..=max_width, 1..=max_depth).prop_flat_map(|(w, d)| prop::collection::vec(layer_spec(w), d))
}

fn pattern_from(g: &OpenGraph, seed: u64) -> MeasurementPattern {
    use rand::Rng;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    MeasurementPattern::from_fn(g, |_| r.random_range(-PI..PI)).unwrap()
}

fn unitary_of(g: &OpenGraph, p: &MeasurementPattern) -> mbqml::linalg::CMatrix {
    let fl = find_flow(g).expect("MuTA graphs have flow");
    pattern_unitary(g, &fl, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flow_search_agrees_with_brute_force(g in open_graph()) {
        let found = find_flow(&g);
        if let Some(fl) = &found {
            prop_assert!(verify_flow(&g, fl));
        }
        prop_assert_eq!(found.is_some(), flow_exists_brute(&g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn muta_networks_have_flow_are_bipartite_and_bounded(layers in network(4, 3)) {
        let d = layers.len();
        let n = layers.iter().map(|l| l.width).max().unwrap();
        let m = concatenate(&NetworkSpec::chain(layers)).unwrap();
        let fl = find_flow(&m.graph);
        prop_assert!(fl.as_ref().is_some_and(|f| verify_flow(&m.graph, f)));
        let (a, b) = bipartition(&m.graph).expect("MuTA graphs are bipartite");
        prop_assert_eq!(a.len() + b.len(), m.graph.num_nodes());
        prop_assert!(m.roles.param_nodes().len() <= 4 * d * n);
    }

    #[test]
    fn zero_angle_layer_is_identity(layers in network(2, 2), extra in 0usize..3, seed in any::<u64>()) {
        let width = layers[0].width;
        let base = concatenate(&NetworkSpec::chain(layers.clone())).unwrap();
        let p = pattern_from(&base.graph, seed);
        let u = unitary_of(&base.graph, &p);

        let appended = match extra {
            0 => LayerSpec::disconnected(width),
            _ if width == 1 => LayerSpec::disconnected(1),
            t => LayerSpec::fully_connected(width, (t - 1) % width),
        };
        let mut longer = layers;
        longer.push(appended);
        let big = concatenate(&NetworkSpec::chain(longer)).unwrap();
        let q = MeasurementPattern::from_fn(&big.graph, |v| p.get(v).unwrap_or(0.0)).unwrap();
        let v = unitary_of(&big.graph, &q);
        prop_assert!(unitary_overlap(&u, &v) > 1.0 - 1e-10);
    }

    #[test]
    fn extra_wire_tensors_on(spec in layer_spec(2), seed in any::<u64>()) {
        let small = build_layer(&spec).unwrap();
        let mut wider = spec.clone();
        wider.width += 1;
        let big = build_layer(&wider).unwrap();
        let p = pattern_from(&big.graph, seed);
        let n_small = small.graph.num_nodes();
        let ps = MeasurementPattern::from_fn(&small.graph, |v| p.angle(v)).unwrap();
        let w = wire(5);
        let pw = MeasurementPattern::from_fn(&w, |v| p.angle(v + n_small)).unwrap();
        let expect = kron(&unitary_of(&small.graph, &ps), &unitary_of(&w, &pw));
        prop_assert!(unitary_overlap(&expect, &unitary_of(&big.graph, &p)) > 1.0 - 1e-10);
    }

    #[test]
    fn kernel_is_a_bounded_symmetric_similarity(x in prop::array::uniform2(-4.0f64..4.0), y in prop::array::uniform2(-4.0f64..4.0)) {
        let k = kernel(x, y);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&k));
        prop_assert!((k - kernel(y, x)).abs() < 1e-12);
        prop_assert!((kernel(x, x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infidelity_loss_is_bounded(seed in any::<u64>(), params in prop::collection::vec(-PI..PI, 8)) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(4, &mut r);
        let data = PairDataset::haar(&u, 6, 4, &mut r).unwrap();
        let model = PatternModel::from_muta(&build_layer(&LayerSpec::fully_connected(2, 0)).unwrap()).unwrap();
        let obj = GateObjective::new(model, data).unwrap();
        for l in [obj.train_loss(&params).unwrap(), obj.test_loss(&params).unwrap()] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l));
        }
    }

    #[test]
    fn single_qubit_channels_preserve_trace(seed in any::<u64>(), p in 0.0f64..=1.0, q in 0usize..2) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s = StateVector::haar(2, &mut r);
        let mut a = DensityMatrix::from_pure(&s);
        a.depolarize(q, p).unwrap();
        prop_assert!((a.trace() - 1.0).abs() < 1e-10);
        prop_assert!(a.is_physical(1e-10));
        let mut b = DensityMatrix::from_pure(&s);
        b.bit_flip(q, p).unwrap();
        prop_assert!((b.trace() - 1.0).abs() < 1e-10);
        let mut c = DensityMatrix::from_pure(&s);
        c.depolarize(q, 0.0).unwrap();
        prop_assert!((c.matrix() - DensityMatrix::from_pure(&s).matrix()).norm() < 1e-12);
    }
}

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    (1usize..(1 << (2 * n))).prop_map(move |i| PauliString::from_index(n, i))
}

fn generators(n: usize) -> impl Strategy<Value = Vec<PauliString>> {
    prop::collection::vec(pauli(n), 1..6)
}

fn hadamard_on(p: &PauliString, q: usize) -> PauliString {
    let (xb, zb) = ((p.x >> q) & 1, (p.z >> q) & 1);
    PauliString { n: p.n, x: (p.x & !(1 << q)) | (zb << q), z: (p.z & !(1 << q)) | (xb << q) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lie_closure_ignores_generator_order(gens in generators(3), rot in 0usize..6) {
        let mut shuffled = gens.clone();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        prop_assert_eq!(lie_closure(&gens).unwrap().dim, lie_closure(&shuffled).unwrap().dim);
    }

    #[test]
    fn lie_closure_is_frame_invariant(gens in generators(3), p in pauli(3), q in 0usize..3) {
        let dim = lie_closure(&gens).unwrap().dim;
        // P g P = +-g leaves every generator's line fixed
        let conj: Vec<_> = gens.iter().map(|g| g.mul(&p).1.mul(&p).1).collect();
        prop_assert_eq!(lie_closure(&conj).unwrap().dim, dim);
        let h: Vec<_> = gens.iter().map(|g| hadamard_on(g, q)).collect();
        prop_assert_eq!(lie_closure(&h).unwrap().dim, dim);
    }

    #[test]
    fn lie_closure_grows_with_generators(gens in generators(3), more in generators(3)) {
        let small = lie_closure(&gens).unwrap().dim;
        let mut all = gens.clone();
        all.extend(more);
        prop_assert!(lie_closure(&all).unwrap().dim >= small);
    }
}

#[test]
fn brute_force_oracle_sanity() {
    assert!(flow_exists_brute(&wire(6)));
    let triangle = OpenGraph::new(3, &[(0, 1), (1, 2), (0, 2)], &[0], &[2]).unwrap();
    assert!(!flow_exists_brute(&triangle));
    let layer = build_layer(&LayerSpec::fully_connected(3, 1)).unwrap();
    assert!(flow_exists_brute(&layer.graph));
    // both outcomes show up in the random ensemble
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let (mut yes, mut no) = (0, 0);
    for _ in 0..300 {
        let g = open_graph().new_tree(&mut runner).unwrap().current();
        if flow_exists_brute(&g) {
            yes += 1;
        } else {
            no += 1;
        }
    }
    assert!(yes > 20 && no > 20, "{yes} with flow, {no} without");
}
