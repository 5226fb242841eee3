//! Quantum kernel from a one-layer MBQC embedding, plus an SMO-trained SVM
//! and the synthetic 2-D datasets it is evaluated on.
//!
//! The embedding measures the `(2,0)` layer at
//! (a0, a1, a2, a3) = (x0, 0, x0, 0), (a5, a6, a7, a8) = (x1, t, x1, 0) with
//! t = cos x0 cos x1 and input |00>, which compiles to
//! Rz1(-x1) Rz0(-x0) exp(i t X0 X1 / 2) Rz1(-x1) Rz0(-x0).

use crate::error::{Error, Result};
use crate::graph::{Flow, OpenGraph};
use crate::linalg::{c, cis, ZERO};
use crate::muta::{build_layer, LayerSpec};
use crate::pattern::MeasurementPattern;
use crate::sim::run_pattern;
use crate::state::StateVector;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point = [f64; 2];

/// Closed-form embedding state.
pub fn embed(x: Point) -> StateVector {
    let t = x[0].cos() * x[1].cos();
    // the first Z rotations give e^{is/2}|00>, the XX rotation
    // cos(t/2)|00> + i sin(t/2)|11>, the last ones e^{+-is/2} on |00>, |11>
    let s = x[0] + x[1];
    let mut a = vec![ZERO; 4];
    a[0] = cis(s) * (t / 2.0).cos();
    a[3] = c(0.0, (t / 2.0).sin());
    StateVector::new(a).expect("unit norm")
}

/// The same embedding obtained by running the measurement pattern.
#[derive(Debug, Clone)]
pub struct MbqcEmbedding {
    graph: OpenGraph,
    flow: Flow,
}

impl MbqcEmbedding {
    pub fn new() -> Result<Self> {
        let m = build_layer(&LayerSpec::new(2, 0, &[1]))?;
        Ok(Self { flow: m.flow()?, graph: m.graph })
    }

    pub fn pattern(&self, x: Point) -> Result<MeasurementPattern> {
        let t = x[0].cos() * x[1].cos();
        let angles = [x[0], 0.0, x[0], 0.0, 0.0, x[1], t, x[1], 0.0];
        MeasurementPattern::from_fn(&self.graph, |v| angles[v])
    }

    pub fn embed(&self, x: Point) -> Result<StateVector> {
        run_pattern(&self.graph, &self.flow, &self.pattern(x)?, &StateVector::zero(2))
    }
}

/// |<phi(x)|phi(y)>|^2
pub fn kernel(x: Point, y: Point) -> f64 {
    embed(x).fidelity(&embed(y))
}

fn overlaps(a: &[StateVector], b: &[StateVector]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i].fidelity(&b[j]))
}

pub fn gram(xs: &[Point]) -> DMatrix<f64> {
    let e: Vec<StateVector> = xs.iter().map(|&x| embed(x)).collect();
    overlaps(&e, &e)
}

/// Rows over `a`, columns over `b`.
pub fn cross_gram(a: &[Point], b: &[Point]) -> DMatrix<f64> {
    let ea: Vec<StateVector> = a.iter().map(|&x| embed(x)).collect();
    let eb: Vec<StateVector> = b.iter().map(|&x| embed(x)).collect();
    overlaps(&ea, &eb)
}

const TAU: f64 = 1e-12;
const MAX_ITER: usize = 1_000_000;

/// Dual solution of the soft-margin SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Dual objective sum(a) - a^T Q a / 2 after each iteration.
    pub dual_objective: Vec<f64>,
}

/// SMO with second-order working-set selection on a precomputed Gram
/// matrix. Stops when the maximal KKT violation drops below `tol`.
pub fn smo(gram: &DMatrix<f64>, labels: &[i8], c_reg: f64, tol: f64) -> Result<SmoSolution> {
    let n = labels.len();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: gram.nrows() });
    }
    if n == 0 {
        return Err(Error::EmptySplit("svm training"));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gram matrix".into()));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidParameter("labels must be +1 or -1".into()));
    }
    if !(c_reg > 0.0) {
        return Err(Error::InvalidParameter(format!("C = {c_reg}")));
    }
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * gram[(i, j)];
    let mut a = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let up = |a: &[f64], t: usize| (y[t] > 0.0 && a[t] < c_reg) || (y[t] < 0.0 && a[t] > 0.0);
    let low = |a: &[f64], t: usize| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < c_reg);
    let dual = |a: &[f64], g: &[f64]| -> f64 {
        // f(a) = a^T Q a / 2 - sum a = sum a_t (G_t - 1) / 2
        -a.iter().zip(g).map(|(ai, gi)| ai * (gi - 1.0)).sum::<f64>() / 2.0
    };
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..n {
            if up(&a, t) && -y[t] * g[t] >= gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(&a, t) {
                continue;
            }
            let v = -y[t] * g[t];
            gmin = gmin.min(v);
            if i != usize::MAX {
                let b = gmax - v;
                if b > 0.0 {
                    let mut quad = gram[(i, i)] + gram[(t, t)] - 2.0 * gram[(i, t)];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -b * b / quad;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            break;
        }
        iterations += 1;
        let (ai_old, aj_old) = (a[i], a[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c_reg {
                    a[i] = c_reg;
                    a[j] = c_reg - diff;
                }
            } else if a[j] > c_reg {
                a[j] = c_reg;
                a[i] = c_reg + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c_reg {
                if a[i] > c_reg {
                    a[i] = c_reg;
                    a[j] = sum - c_reg;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c_reg {
                if a[j] > c_reg {
                    a[j] = c_reg;
                    a[i] = sum - c_reg;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - ai_old, a[j] - aj_old);
        for t in 0..n {
            g[t] += q(t, i) * di + q(t, j) * dj;
        }
        history.push(dual(&a, &g));
    }

    // bias: average over free vectors, else the middle of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut nfree, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * g[t];
        if a[t] >= c_reg {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nfree += 1;
            sum_free += yg;
        }
    }
    let rho = if nfree > 0 {
        sum_free / nfree as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    Ok(SmoSolution { alpha: a, bias: -rho, iterations, dual_objective: history })
}

/// Kernel SVM over 2-D points with the quantum kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub points: Vec<Point>,
    pub labels: Vec<i8>,
}

impl SvmModel {
    pub fn train(points: &[Point], labels: &[i8], c_reg: f64) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: labels.len() });
        }
        let sol = smo(&gram(points), labels, c_reg, 1e-3)?;
        Ok(Self { alpha: sol.alpha, bias: sol.bias, c: c_reg, points: points.to_vec(), labels: labels.to_vec() })
    }

    /// sum_i a_i y_i K(x, x_i) + b for every query point.
    pub fn decision_values(&self, xs: &[Point]) -> Vec<f64> {
        let k = cross_gram(xs, &self.points);
        (0..xs.len())
            .map(|r| {
                self.bias
                    + (0..self.points.len()).map(|i| self.alpha[i] * self.labels[i] as f64 * k[(r, i)]).sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, xs: &[Point]) -> Vec<i8> {
        self.decision_values(xs).into_iter().map(|d| if d >= 0.0 { 1 } else { -1 }).collect()
    }

    pub fn accuracy(&self, xs: &[Point], labels: &[i8]) -> f64 {
        let p = self.predict(xs);
        p.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Circles,
    Moons,
    Blobs,
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circles" => Ok(Self::Circles),
            "moons" => Ok(Self::Moons),
            "blobs" => Ok(Self::Blobs),
            _ => Err(Error::Parse(format!("unknown dataset '{s}' (expected circles, moons or blobs)"))),
        }
    }
}

/// Regularization used by the experiments. At C = 1 the SVM underfits this
/// kernel (train and test accuracy both near 0.89 on circles).
pub const DEFAULT_C: f64 = 10.0;

pub const CIRCLE_RADII: (f64, f64) = (1.0, 0.6);
pub const BLOB_CENTER: f64 = 1.0;

/// `n` labelled points in random order, `n / 2` of class -1 and the rest +1.
/// Circles: evenly spaced on the outer ring (-1) and inner ring (+1).
/// Moons: evenly spaced on the upper (-1) and lower (+1) half circles.
/// Blobs: centred at (-1,-1) for -1 and (1,1) for +1. Isotropic Gaussian
/// noise of std `noise` is added after shuffling, as in the usual
/// scikit-learn generators.
pub fn make_dataset<R: Rng + ?Sized>(kind: DatasetKind, n: usize, noise: f64, rng: &mut R) -> Result<(Vec<Point>, Vec<i8>)> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 points, got {n}")));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::InvalidParameter(format!("noise {noise}")));
    }
    let gauss = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("valid normal");
    let jitter = |rng: &mut R| if noise == 0.0 { 0.0 } else { gauss.sample(rng) };
    let n_neg = n / 2;
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        let (label, idx, count): (i8, usize, usize) = if k < n_neg { (-1, k, n_neg) } else { (1, k - n_neg, n - n_neg) };
        let base = match kind {
            DatasetKind::Circles => {
                let r = if label > 0 { CIRCLE_RADII.1 } else { CIRCLE_RADII.0 };
                let t = 2.0 * PI * idx as f64 / count as f64;
                [r * t.cos(), r * t.sin()]
            }
            DatasetKind::Moons => {
                let t = PI * idx as f64 / (count - 1) as f64;
                if label < 0 {
                    [t.cos(), t.sin()]
                } else {
                    [1.0 - t.cos(), 0.5 - t.sin()]
                }
            }
            DatasetKind::Blobs => {
                let m = BLOB_CENTER * label as f64;
                [m, m]
            }
        };
        pts.push((base, label));
    }
    pts.shuffle(rng);
    for (p, _) in pts.iter_mut() {
        p[0] += jitter(rng);
        p[1] += jitter(rng);
    }
    Ok(pts.into_iter().unzip())
}

/// Accuracies and per-point decision values of one train/test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub dataset: DatasetKind,
    pub seed: u64,
    pub c: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_points: Vec<Point>,
    pub test_labels: Vec<i8>,
    pub test_decision: Vec<f64>,
}

pub fn run_kernel_svm<R: Rng + ?Sized>(
    kind: DatasetKind,
    n_train: usize,
    n_test: usize,
    noise: f64,
    c_reg: f64,
    seed: u64,
    rng: &mut R,
) -> Result<KernelReport> {
    if n_test == 0 {
        return Err(Error::EmptySplit("test"));
    }
    let (mut x, mut y) = make_dataset(kind, n_train + n_test, noise, rng)?;
    let xt = x.split_off(n_train);
    let yt = y.split_off(n_train);
    let model = SvmModel::train(&x, &y, c_reg)?;
    let test_decision = model.decision_values(&xt);
    let correct = test_decision.iter().zip(&yt).filter(|(d, &l)| (**d >= 0.0) == (l > 0)).count();
    Ok(KernelReport {
        dataset: kind,
        seed,
        c: c_reg,
        train_accuracy: model.accuracy(&x, &y),
        test_accuracy: correct as f64 / n_test as f64,
        test_points: xt,
        test_labels: yt,
        test_decision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_embedding() {
        let s = embed([0.0, 0.0]);
        let a = s.amplitudes();
        assert!((a[0] - c(0.5f64.cos(), 0.0)).norm() < 1e-12);
        assert!((a[3] - c(0.0, 0.5f64.sin())).norm() < 1e-12);
    }

    #[test]
    fn mbqc_embedding_matches_closed_form() {
        let e = MbqcEmbedding::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
            assert!(e.embed(x).unwrap().fidelity(&embed(x)) > 1.0 - 1e-10);
        }
    }

    #[test]
    fn kernel_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let y = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            assert!((kernel(x, x) - 1.0).abs() < 1e-12);
            assert!((kernel(x, y) - kernel(y, x)).abs() < 1e-12);
        }
        let h = std::f64::consts::FRAC_PI_2;
        assert!((kernel([h, 0.3], [h, -2.0]) - 1.0).abs() < 1e-12);
        let xs: Vec<Point> = (0..50).map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let eig = gram(&xs).symmetric_eigen();
        assert!(eig.eigenvalues.min() > -1e-9);
    }

    #[test]
    fn svm_separates_and_handles_one_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..20 {
            let (c0, l) = if k % 2 == 0 { ([0.0, 0.0], 1) } else { ([1.5, 1.5], -1) };
            xs.push([c0[0] + rng.random_range(-0.05..0.05), c0[1] + rng.random_range(-0.05..0.05)]);
            ys.push(l);
        }
        let m = SvmModel::train(&xs, &ys, 10.0).unwrap();
        assert_eq!(m.accuracy(&xs, &ys), 1.0);
        let sol = smo(&gram(&xs), &ys, 10.0, 1e-3).unwrap();
        assert!(sol.dual_objective.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(sol.alpha.iter().all(|&a| (0.0..=10.0).contains(&a)));
        let same = vec![1i8; 20];
        let m = SvmModel::train(&xs, &same, 1.0).unwrap();
        assert!(m.predict(&[[3.0, -1.0], [0.0, 0.0]]).iter().all(|&p| p == 1));
        let mut bad = gram(&xs);
        bad[(0, 1)] = f64::NAN;
        assert!(smo(&bad, &ys, 1.0, 1e-3).is_err());
    }

    #[test]
    fn datasets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, y) = make_dataset(DatasetKind::Blobs, 10, 0.0, &mut rng).unwrap();
        for (p, l) in x.iter().zip(&y) {
            assert_eq!(*p, [*l as f64, *l as f64]);
        }
        assert_eq!(y.iter().filter(|&&l| l > 0).count(), 5);
        let (x, y) = make_dataset(DatasetKind::Circles, 40, 0.0, &mut rng).unwrap();
        for (p, l) in x.iter().zip(&y) {
            let r = p[0].hypot(p[1]);
            assert!((r < 0.8) == (*l > 0));
        }
        let a = make_dataset(DatasetKind::Moons, 30, 0.1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = make_dataset(DatasetKind::Moons, 30, 0.1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(make_dataset(DatasetKind::Moons, 3, 0.1, &mut rng).is_err());
    }
}
