use mbqml::graph::{find_flow, verify_flow, wire, InitState, OpenGraph};
use mbqml::linalg::{unitary_overlap, C64};
use mbqml::muta::{build_layer, concatenate, LayerSpec, NetworkSpec};
use mbqml::pattern::{MeasurementPattern, MeasurementPlan};
use mbqml::sim::{branch_operators, run_mbqc, run_noisy_mbqc, run_pattern, Mode};
use mbqml::translate::translate;
use mbqml::StateVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_pattern(g: &OpenGraph, rng: &mut ChaCha8Rng) -> MeasurementPattern {
    MeasurementPattern::from_fn(g, |_| rng.random_range(-PI..PI)).unwrap()
}

/// Reorder circuit output (wire order) into O order.
fn circuit_output_in_o_order(g: &OpenGraph, ends: &[usize], amps: &[C64]) -> Vec<C64> {
    let n = ends.len();
    let perm: Vec<usize> = g.outputs().iter().map(|o| ends.iter().position(|e| e == o).unwrap()).collect();
    (0..amps.len())
        .map(|k| {
            let mut src = 0;
            for (t, &w) in perm.iter().enumerate() {
                if (k >> (n - 1 - t)) & 1 == 1 {
                    src |= 1 << (n - 1 - w);
                }
            }
            amps[src]
        })
        .collect()
}

fn networks() -> Vec<OpenGraph> {
    vec![
        wire(5),
        build_layer(&LayerSpec::new(2, 0, &[1])).unwrap().graph,
        build_layer(&LayerSpec::new(2, 1, &[0])).unwrap().graph,
        build_layer(&LayerSpec::new(3, 0, &[1, 2])).unwrap().graph,
        build_layer(&LayerSpec::new(3, 1, &[2])).unwrap().graph,
        concatenate(&NetworkSpec::chain(vec![LayerSpec::new(2, 0, &[1]), LayerSpec::new(2, 1, &[0])])).unwrap().graph,
        build_layer(&LayerSpec::new(2, 0, &[1]).deeper()).unwrap().graph,
    ]
}

#[test]
fn translation_matches_direct_mbqc() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (gi, g) in networks().into_iter().enumerate() {
        let fl = find_flow(&g).unwrap();
        assert!(verify_flow(&g, &fl));
        for _ in 0..5 {
            let p = random_pattern(&g, &mut rng);
            let circ = translate(&g, &fl, &p).unwrap();
            let input = StateVector::haar(g.inputs().len(), &mut rng);
            let mut amps = input.amplitudes().to_vec();
            circ.apply_amps(&mut amps);
            let want = StateVector::new(circuit_output_in_o_order(&g, circ.output_map(), &amps)).unwrap();
            let plan = MeasurementPlan::from_pattern(&g, &p);
            let branches = run_mbqc(&g, &fl, &plan, &input, Mode::BranchAll).unwrap();
            let m = g.measured_nodes().len();
            assert_eq!(branches.len(), 1 << m);
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            assert!((total - 1.0).abs() < 1e-10);
            for b in &branches {
                assert!((b.probability - 0.5f64.powi(m as i32)).abs() < 1e-10);
                let f = b.state.as_ref().unwrap().fidelity(&want);
                assert!(f > 1.0 - 1e-10, "graph {gi} branch {:?} fidelity {f}", b.outcomes);
            }
        }
    }
}

#[test]
fn ideal_operator_is_the_circuit_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = build_layer(&LayerSpec::new(2, 0, &[1])).unwrap().graph;
    let fl = find_flow(&g).unwrap();
    let p = random_pattern(&g, &mut rng);
    let u = translate(&g, &fl, &p).unwrap().unitary().unwrap();
    let basis: Vec<Vec<C64>> = (0..4).map(|k| StateVector::basis(2, k).into_amplitudes()).collect();
    let ops = branch_operators(&g, &fl, &MeasurementPlan::from_pattern(&g, &p), Mode::Ideal, &basis).unwrap();
    assert_eq!(ops.len(), 1);
    assert!(unitary_overlap(&ops[0].matrix, &u) > 1.0 - 1e-12);
}

#[test]
fn noiseless_density_matches_ideal() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = build_layer(&LayerSpec::new(2, 0, &[1])).unwrap().graph.with_init(2, InitState::T).unwrap();
    let fl = find_flow(&g).unwrap();
    let p = random_pattern(&g, &mut rng);
    let input = StateVector::haar(2, &mut rng);
    let pure = run_pattern(&g, &fl, &p, &input).unwrap();
    let rho = run_noisy_mbqc(&g, &fl, &MeasurementPlan::from_pattern(&g, &p), &input.to_density(), 0.0).unwrap();
    assert!((rho.expectation_pure(&pure) - 1.0).abs() < 1e-10);
    let noisy = run_noisy_mbqc(&g, &fl, &MeasurementPlan::from_pattern(&g, &p), &input.to_density(), 0.1).unwrap();
    assert!(noisy.is_physical(1e-9));
    let f = noisy.expectation_pure(&pure);
    assert!(f < 1.0 && f > 0.5, "{f}");
}

#[test]
fn isolated_node_full_depolarizing() {
    let g = OpenGraph::new(1, &[], &[0], &[0]).unwrap();
    let fl = find_flow(&g).unwrap();
    let plan = MeasurementPlan::from_pattern(&g, &MeasurementPattern::zeros(&g));
    let rho = run_noisy_mbqc(&g, &fl, &plan, &StateVector::zero(1).to_density(), 0.75).unwrap();
    assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
    assert!((rho.purity() - 0.5).abs() < 1e-12);
}
