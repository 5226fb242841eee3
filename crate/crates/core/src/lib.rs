//! Measurement-based quantum machine learning.
//!
//! Builds multiple-triangle (MuTA) resource graphs, finds causal flow,
//! translates measurement patterns into gate circuits, simulates both
//! pictures exactly, and trains measurement angles for several learning
//! tasks (gate learning, QFI classification, instruments, kernels and
//! discrete-angle search).

pub mod error;
pub mod linalg;
pub mod state;
pub mod density;
pub mod graph;
pub mod pattern;
pub mod muta;
pub mod circuit;
pub mod translate;
pub mod sim;
pub mod learn;
pub mod kernel;
pub mod hea;
pub mod expressivity;
pub mod experiments;

pub use error::{Error, Result};
pub use graph::{find_flow, verify_flow, Flow, InitState, OpenGraph};
pub use circuit::{Gate, GateCircuit};
pub use state::StateVector;
pub use density::DensityMatrix;
