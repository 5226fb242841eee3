//! Exact simulation of measurement patterns and noisy data.

mod mbqc;
mod noise;
mod noisy;

pub use mbqc::{branch_operators, run_mbqc, run_pattern, Branch, BranchOperator, Mode};
pub use noise::{apply_data_noise, brownian_strength, NoiseChannel};
pub use noisy::run_noisy_mbqc;

use crate::error::{Error, Result};
use crate::graph::OpenGraph;
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::state::StateVector;
use rand::Rng;

pub fn sample_haar_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    StateVector::haar(n, rng)
}

/// Haar-random unitary on `n` qubits.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    linalg::haar_unitary(1 << n, rng)
}

/// Full input over `I` (in `I` order): pinned inputs take their init state,
/// the rest are filled from `free` in order.
pub fn embed_input(g: &OpenGraph, free: &StateVector) -> Result<StateVector> {
    let inputs = g.inputs();
    let free_nodes = g.free_inputs();
    if free.num_qubits() != free_nodes.len() {
        return Err(Error::DimensionMismatch { expected: free_nodes.len(), got: free.num_qubits() });
    }
    let n = inputs.len();
    let mut amps = vec![ZERO; 1 << n];
    for (idx, a) in amps.iter_mut().enumerate() {
        let mut amp = C64::new(1.0, 0.0);
        let mut fidx = 0usize;
        for (pos, &v) in inputs.iter().enumerate() {
            let bit = (idx >> (n - 1 - pos)) & 1;
            if g.is_pinned_input(v) {
                amp *= g.init_state(v).amplitudes()[bit];
            } else {
                fidx = (fidx << 1) | bit;
            }
        }
        *a = amp * free.amplitudes()[fidx];
    }
    StateVector::new(amps)
}
