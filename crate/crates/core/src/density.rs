use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, Mat2, C64, MAX_QUBITS, ZERO};
use crate::state::StateVector;

/// Density operator on `n` qubits, big-endian ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    rho: CMatrix,
}

fn conj2(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

impl DensityMatrix {
    pub fn from_pure(s: &StateVector) -> Self {
        let a = s.amplitudes();
        let d = a.len();
        Self { n: s.num_qubits(), rho: CMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj()) }
    }

    pub fn from_matrix(rho: CMatrix) -> Result<Self> {
        let d = rho.nrows();
        if d != rho.ncols() || !d.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: d.next_power_of_two(), got: rho.ncols() });
        }
        let n = d.trailing_zeros() as usize;
        if n > MAX_QUBITS / 2 + 1 {
            return Err(Error::DimensionOverflow { qubits: n, limit: MAX_QUBITS / 2 + 1 });
        }
        Ok(Self { n, rho })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// <phi| rho |phi>
    pub fn expectation_pure(&self, phi: &StateVector) -> f64 {
        let a = phi.amplitudes();
        let mut acc = ZERO;
        for j in 0..a.len() {
            for i in 0..a.len() {
                acc += a[i].conj() * self.rho[(i, j)] * a[j];
            }
        }
        acc.re
    }

    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        apply_1q_both(&mut self.rho, self.n, q, m);
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        apply_cz_both(&mut self.rho, self.n, a, b);
    }

    pub fn apply_unitary(&mut self, u: &CMatrix) -> Result<()> {
        if u.nrows() != self.rho.nrows() {
            return Err(Error::DimensionMismatch { expected: self.rho.nrows(), got: u.nrows() });
        }
        self.rho = u * &self.rho * u.adjoint();
        Ok(())
    }

    /// (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on qubit `q`.
    pub fn depolarize(&mut self, q: usize, p: f64) -> Result<()> {
        check_prob(p)?;
        depolarize_raw(&mut self.rho, self.n, q, p);
        Ok(())
    }

    /// (1-p) rho + p X rho X on qubit `q`.
    pub fn bit_flip(&mut self, q: usize, p: f64) -> Result<()> {
        check_prob(p)?;
        let mut flipped = self.rho.clone();
        apply_1q_both(&mut flipped, self.n, q, &linalg::pauli_x());
        self.rho = &self.rho * c(1.0 - p, 0.0) + flipped * c(p, 0.0);
        Ok(())
    }

    /// Reduced state on `keep`, qubits reordered as listed.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        for &k in keep {
            if k >= self.n {
                return Err(Error::NodeOutOfRange { node: k, num_nodes: self.n });
            }
        }
        let traced: Vec<usize> = (0..self.n).filter(|q| !keep.contains(q)).collect();
        let dk = 1usize << keep.len();
        let dt = 1usize << traced.len();
        let index = |kb: usize, tb: usize| -> usize {
            let mut idx = 0usize;
            for (pos, &q) in keep.iter().enumerate() {
                if kb >> (keep.len() - 1 - pos) & 1 == 1 {
                    idx |= 1 << (self.n - 1 - q);
                }
            }
            for (pos, &q) in traced.iter().enumerate() {
                if tb >> (traced.len() - 1 - pos) & 1 == 1 {
                    idx |= 1 << (self.n - 1 - q);
                }
            }
            idx
        };
        let mut out = CMatrix::zeros(dk, dk);
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = ZERO;
                for t in 0..dt {
                    acc += self.rho[(index(i, t), index(j, t))];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(DensityMatrix { n: keep.len(), rho: out })
    }

    /// Hermitian, unit trace, positive semidefinite within `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let herm = (&self.rho - self.rho.adjoint()).iter().all(|z| z.norm() < tol);
        if !herm || (self.trace() - 1.0).abs() > tol {
            return false;
        }
        let eig = self.rho.clone().symmetric_eigen();
        eig.eigenvalues.iter().all(|&l| l > -tol)
    }
}

pub(crate) fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

/// rho -> M rho M† for a single-qubit M on qubit `q`.
pub(crate) fn apply_1q_both(rho: &mut CMatrix, n: usize, q: usize, m: &Mat2) {
    let d = rho.nrows();
    for j in 0..d {
        linalg::apply_1q(rho.column_mut(j).as_mut_slice(), n, q, m);
    }
    let mc = conj2(m);
    let b = 1usize << (n - 1 - q);
    for i in 0..d {
        for j in 0..d {
            if j & b == 0 {
                let (a0, a1) = (rho[(i, j)], rho[(i, j | b)]);
                rho[(i, j)] = mc[0][0] * a0 + mc[0][1] * a1;
                rho[(i, j | b)] = mc[1][0] * a0 + mc[1][1] * a1;
            }
        }
    }
}

pub(crate) fn apply_cz_both(rho: &mut CMatrix, n: usize, a: usize, b: usize) {
    let mask = (1usize << (n - 1 - a)) | (1usize << (n - 1 - b));
    let d = rho.nrows();
    for j in 0..d {
        let sj = j & mask == mask;
        for i in 0..d {
            if (i & mask == mask) != sj {
                rho[(i, j)] = -rho[(i, j)];
            }
        }
    }
}

pub(crate) fn depolarize_raw(rho: &mut CMatrix, n: usize, q: usize, p: f64) {
    if p == 0.0 {
        return;
    }
    let mut acc = &*rho * c(1.0 - p, 0.0);
    for pauli in [linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z()] {
        let mut t = rho.clone();
        apply_1q_both(&mut t, n, q, &pauli);
        acc += t * c(p / 3.0, 0.0);
    }
    *rho = acc;
}

/// Expand rho (n qubits) with a fresh qubit appended last in state `v`.
pub(crate) fn append_qubit(rho: &CMatrix, v: [C64; 2]) -> CMatrix {
    let d = rho.nrows();
    CMatrix::from_fn(2 * d, 2 * d, |i, j| rho[(i >> 1, j >> 1)] * v[i & 1] * v[j & 1].conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depolarizing_keeps_state_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = StateVector::haar(2, &mut rng);
        let mut r = s.to_density();
        r.depolarize(1, 0.3).unwrap();
        assert!(r.is_physical(1e-10));
        assert!(r.purity() < 1.0);
        assert!(r.depolarize(0, 1.5).is_err());
    }

    #[test]
    fn full_depolarizing_of_one_qubit_gives_maximally_mixed() {
        let s = StateVector::zero(1);
        let mut r = s.to_density();
        r.depolarize(0, 0.75).unwrap();
        assert!((r.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = StateVector::haar(1, &mut rng);
        let b = StateVector::haar(1, &mut rng);
        let ab = a.kron(&b);
        let rb = ab.reduced(&[1]).unwrap();
        assert!((rb.expectation_pure(&b) - 1.0).abs() < 1e-12);
        let ra = ab.reduced(&[0]).unwrap();
        assert!((ra.expectation_pure(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn append_qubit_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = StateVector::haar(1, &mut rng);
        let b = StateVector::haar(1, &mut rng);
        let bb = b.amplitudes();
        let r = append_qubit(a.to_density().matrix(), [bb[0], bb[1]]);
        let want = a.kron(&b).to_density();
        assert!((r - want.matrix()).iter().all(|z| z.norm() < 1e-14));
    }
}
