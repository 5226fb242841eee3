use crate::density::check_prob;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::StateVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseChannel {
    Depolarizing { p: f64 },
    #[serde(rename = "bitflip")]
    BitFlip { p: f64 },
    /// V = prod_{j=0}^{steps} exp(i H_j dt), H_j from the unit-variance GUE.
    Brownian { dt: f64, steps: usize },
}

impl NoiseChannel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseChannel::Depolarizing { p } | NoiseChannel::BitFlip { p } => check_prob(p),
            NoiseChannel::Brownian { dt, steps } => {
                if !(dt > 0.0) || !dt.is_finite() {
                    return Err(Error::InvalidParameter(format!("brownian dt must be positive, got {dt}")));
                }
                if steps < 1 {
                    return Err(Error::InvalidParameter("brownian steps must be at least 1".into()));
                }
                Ok(())
            }
        }
    }
}

/// (dt / 2 pi) sqrt(2^n r)
pub fn brownian_strength(dt: f64, steps: usize, n: usize) -> f64 {
    dt / (2.0 * PI) * ((1u64 << n) as f64 * steps as f64).sqrt()
}

fn flip_all(s: &StateVector, mask: usize) -> StateVector {
    let a = s.amplitudes();
    let amps = (0..a.len()).map(|i| a[i ^ mask]).collect();
    StateVector::new(amps).expect("permutation keeps the norm")
}

/// Replace each label by V_i label_i.
///
/// Bit flip: qubit j of sample i flips when a fresh uniform f_{i,j} < p.
/// Depolarizing noise acts on resource states, not on data, and is rejected.
pub fn apply_data_noise<R: Rng + ?Sized>(labels: &[StateVector], noise: &NoiseChannel, rng: &mut R) -> Result<Vec<StateVector>> {
    noise.validate()?;
    match *noise {
        NoiseChannel::Depolarizing { .. } => {
            Err(Error::InvalidParameter("depolarizing noise applies to resource states, not data".into()))
        }
        NoiseChannel::BitFlip { p } => Ok(labels
            .iter()
            .map(|s| {
                let n = s.num_qubits();
                let mut mask = 0usize;
                for q in 0..n {
                    let f: f64 = rng.random();
                    if f < p {
                        mask |= 1 << (n - 1 - q);
                    }
                }
                flip_all(s, mask)
            })
            .collect()),
        NoiseChannel::Brownian { dt, steps } => labels
            .iter()
            .map(|s| {
                let d = s.dim();
                let mut v = CMatrix::identity(d, d);
                for _ in 0..=steps {
                    let h = linalg::gue(d, rng);
                    v = linalg::expm_i_hermitian(&h, dt) * v;
                }
                let out = s.apply_matrix(&v)?;
                StateVector::normalized(out.into_amplitudes())
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(rng: &mut ChaCha8Rng) -> Vec<StateVector> {
        (0..20).map(|_| StateVector::haar(2, rng)).collect()
    }

    #[test]
    fn bitflip_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = labels(&mut rng);
        let same = apply_data_noise(&l, &NoiseChannel::BitFlip { p: 0.0 }, &mut rng).unwrap();
        assert_eq!(same, l);
        let all = apply_data_noise(&l, &NoiseChannel::BitFlip { p: 1.0 }, &mut rng).unwrap();
        for (a, b) in all.iter().zip(&l) {
            assert!((a.fidelity(&flip_all(b, 3)) - 1.0).abs() < 1e-12);
        }
        assert!(apply_data_noise(&l, &NoiseChannel::BitFlip { p: 1.5 }, &mut rng).is_err());
    }

    #[test]
    fn brownian_vanishes_with_dt() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = labels(&mut rng);
        let mut prev = 0.0;
        for dt in [0.3, 0.03, 0.003] {
            let noisy = apply_data_noise(&l, &NoiseChannel::Brownian { dt, steps: 4 }, &mut rng).unwrap();
            let f: f64 = noisy.iter().zip(&l).map(|(a, b)| a.fidelity(b)).sum::<f64>() / l.len() as f64;
            assert!(f > prev);
            prev = f;
        }
        assert!(prev > 0.999);
        assert!(NoiseChannel::Brownian { dt: 0.0, steps: 1 }.validate().is_err());
        assert!(NoiseChannel::Brownian { dt: 0.1, steps: 0 }.validate().is_err());
    }

    #[test]
    fn strength_formula() {
        assert!((brownian_strength(2.0 * PI, 1, 2) - 2.0).abs() < 1e-12);
    }
}
