use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Mat2, C64, MAX_QUBITS, ONE, ZERO};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Normalized pure state on `n` qubits, big-endian amplitude ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

const NORM_TOL: f64 = 1e-10;

fn qubits_for(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::DimensionMismatch { expected: len.next_power_of_two(), got: len });
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::DimensionOverflow { qubits: n, limit: MAX_QUBITS });
    }
    Ok(n)
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for(amps.len())?;
        let ns = linalg::norm_sqr(&amps);
        if !ns.is_finite() || (ns - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(ns));
        }
        Ok(Self { n, amps })
    }

    /// Rescale to unit norm. Fails on the zero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for(amps.len())?;
        let ns = linalg::norm_sqr(&amps);
        if !(ns > 1e-300) || !ns.is_finite() {
            return Err(Error::NotNormalized(ns));
        }
        let s = ns.sqrt();
        Ok(Self { n, amps: amps.into_iter().map(|z| z / s).collect() })
    }

    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        assert!(n <= MAX_QUBITS && index < (1 << n));
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Self { n, amps }
    }

    /// Tensor product of single-qubit states, qubit 0 first.
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        let mut amps = vec![ONE];
        for f in factors {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * f[0]);
                next.push(a * f[1]);
            }
            amps = next;
        }
        Self::new(amps)
    }

    pub fn haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self { n, amps: linalg::haar_vector(1 << n, rng) }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    /// |<self|other>|^2
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        linalg::apply_1q(&mut self.amps, self.n, q, m);
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        linalg::apply_cz(&mut self.amps, self.n, a, b);
    }

    pub fn apply_matrix(&self, m: &CMatrix) -> Result<Self> {
        if m.ncols() != self.dim() || m.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.ncols() });
        }
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        let out = m * v;
        Ok(Self { n: self.n, amps: out.iter().copied().collect() })
    }

    pub fn kron(&self, other: &StateVector) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { n: self.n + other.n, amps }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Reduced density matrix on `keep` (in the given order).
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        self.to_density().partial_trace(keep)
    }
}
