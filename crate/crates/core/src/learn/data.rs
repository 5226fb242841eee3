use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::sim::{apply_data_noise, NoiseChannel};
use crate::state::StateVector;
use rand::Rng;

/// Input/target pairs; the first `n_train` are the training split.
///
/// `targets` are what the learner sees (possibly noisy); `clean` are the
/// noiseless labels used for testing.
#[derive(Debug, Clone)]
pub struct PairDataset {
    inputs: Vec<StateVector>,
    targets: Vec<StateVector>,
    clean: Vec<StateVector>,
    n_train: usize,
}

impl PairDataset {
    pub fn new(inputs: Vec<StateVector>, targets: Vec<StateVector>, n_train: usize) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), got: targets.len() });
        }
        if n_train == 0 {
            return Err(Error::EmptySplit("train"));
        }
        if n_train > inputs.len() {
            return Err(Error::InvalidParameter(format!("n_train {n_train} exceeds {} pairs", inputs.len())));
        }
        let n = inputs[0].num_qubits();
        for s in inputs.iter().chain(&targets) {
            if s.num_qubits() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.num_qubits() });
            }
        }
        Ok(Self { clean: targets.clone(), inputs, targets, n_train })
    }

    /// `count` Haar-random inputs labelled by `u`.
    pub fn haar<R: Rng + ?Sized>(u: &CMatrix, count: usize, n_train: usize, rng: &mut R) -> Result<Self> {
        if !u.is_square() || !u.nrows().is_power_of_two() {
            return Err(Error::InvalidParameter("target must be a square 2^n matrix".into()));
        }
        let n = u.nrows().trailing_zeros() as usize;
        let inputs: Vec<StateVector> = (0..count).map(|_| StateVector::haar(n, rng)).collect();
        let targets = inputs.iter().map(|s| s.apply_matrix(u)).collect::<Result<_>>()?;
        Self::new(inputs, targets, n_train)
    }

    /// Corrupt the training labels; test labels stay clean.
    pub fn with_label_noise<R: Rng + ?Sized>(mut self, noise: &NoiseChannel, rng: &mut R) -> Result<Self> {
        let noisy = apply_data_noise(&self.clean[..self.n_train], noise, rng)?;
        self.targets[..self.n_train].clone_from_slice(&noisy);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.inputs[0].num_qubits()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn train(&self) -> (&[StateVector], &[StateVector]) {
        (&self.inputs[..self.n_train], &self.targets[..self.n_train])
    }

    pub fn test(&self) -> (&[StateVector], &[StateVector]) {
        (&self.inputs[self.n_train..], &self.clean[self.n_train..])
    }

    pub fn clean_train(&self) -> (&[StateVector], &[StateVector]) {
        (&self.inputs[..self.n_train], &self.clean[..self.n_train])
    }
}

/// 1 - mean |<target|U|input>|^2.
pub fn infidelity_loss(u: &CMatrix, inputs: &[StateVector], targets: &[StateVector]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::EmptySplit("loss"));
    }
    let mut acc = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        acc += x.apply_matrix(u)?.fidelity(y);
    }
    Ok(1.0 - acc / inputs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, mat2_to_dense, pauli_x};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let id = CMatrix::identity(4, 4);
        let d = PairDataset::haar(&id, 5, 3, &mut rng).unwrap();
        let (x, y) = d.train();
        assert!(infidelity_loss(&id, x, y).unwrap().abs() < 1e-12);
        let x = vec![StateVector::basis(1, 0)];
        let y = vec![StateVector::basis(1, 1)];
        let one = CMatrix::identity(2, 2);
        assert!((infidelity_loss(&one, &x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(infidelity_loss(&one, &[], &[]).is_err());
    }

    #[test]
    fn splits_and_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let id = CMatrix::identity(4, 4);
        let d = PairDataset::haar(&id, 10, 7, &mut rng).unwrap();
        assert_eq!(d.train().0.len(), 7);
        assert_eq!(d.test().0.len(), 3);
        let noisy = d.clone().with_label_noise(&NoiseChannel::BitFlip { p: 1.0 }, &mut rng).unwrap();
        let xx = kron(&mat2_to_dense(&pauli_x()), &mat2_to_dense(&pauli_x()));
        let (x, y) = noisy.train();
        assert!(infidelity_loss(&xx, x, y).unwrap().abs() < 1e-12);
        let (x, y) = noisy.test();
        assert!(infidelity_loss(&id, x, y).unwrap().abs() < 1e-12);
        assert!(PairDataset::haar(&id, 3, 0, &mut rng).is_err());
    }
}
