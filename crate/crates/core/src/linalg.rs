//! Small dense linear-algebra helpers on complex amplitudes.
//!
//! Qubit ordering is big-endian throughout: qubit 0 is the most significant
//! bit of a basis index, so `kron(a, b)` places `a` on qubit 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type Mat2 = [[C64; 2]; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest register the dense routines will allocate.
pub const MAX_QUBITS: usize = 14;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn identity2() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn pauli_x() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> Mat2 {
    [[ZERO, -I], [I, ZERO]]
}

pub fn pauli_z() -> Mat2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub fn hadamard() -> Mat2 {
    let h = c(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// exp(-i theta Z / 2)
pub fn rz(theta: f64) -> Mat2 {
    [[cis(-theta / 2.0), ZERO], [ZERO, cis(theta / 2.0)]]
}

/// exp(-i theta X / 2)
pub fn rx(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

/// diag(1, e^{-i pi/4})
pub fn t_gate() -> Mat2 {
    [[ONE, ZERO], [ZERO, cis(-std::f64::consts::FRAC_PI_4)]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_to_dense(m: &Mat2) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[i][j])
}

/// exp(-i theta X⊗X / 2) as a 4x4 matrix.
pub fn ising_xx(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    let mut m = CMatrix::zeros(4, 4);
    for k in 0..4 {
        m[(k, k)] = c(co, 0.0);
        m[(k, 3 - k)] = c(0.0, -s);
    }
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(ms: &[CMatrix]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for m in ms {
        out = out.kronecker(m);
    }
    out
}

/// |Tr(A† B)| / d, equal to 1 exactly when A and B agree up to a global phase
/// (for unitaries).
pub fn unitary_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let d = a.nrows() as f64;
    let mut acc = ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc.norm() / d
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    let prod = m.adjoint() * m;
    let id = CMatrix::identity(m.nrows(), m.ncols());
    (prod - id).iter().all(|z| z.norm() < tol)
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Apply a single-qubit gate to qubit `q` of an `n`-qubit amplitude vector.
pub fn apply_1q(amps: &mut [C64], n: usize, q: usize, m: &Mat2) {
    let b = bit(n, q);
    for i in 0..amps.len() {
        if i & b == 0 {
            let (a0, a1) = (amps[i], amps[i | b]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | b] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

pub fn apply_cz(amps: &mut [C64], n: usize, a: usize, b: usize) {
    let mask = bit(n, a) | bit(n, b);
    for (i, z) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *z = -*z;
        }
    }
}

pub fn apply_cnot(amps: &mut [C64], n: usize, control: usize, target: usize) {
    let (cb, tb) = (bit(n, control), bit(n, target));
    for i in 0..amps.len() {
        if i & cb != 0 && i & tb == 0 {
            amps.swap(i, i | tb);
        }
    }
}

pub fn apply_ising_xx(amps: &mut [C64], n: usize, a: usize, b: usize, theta: f64) {
    let mask = bit(n, a) | bit(n, b);
    let (s, co) = (theta / 2.0).sin_cos();
    let (cc, ms) = (c(co, 0.0), c(0.0, -s));
    for i in 0..amps.len() {
        let j = i ^ mask;
        if i < j {
            let (x, y) = (amps[i], amps[j]);
            amps[i] = cc * x + ms * y;
            amps[j] = ms * x + cc * y;
        }
    }
}

/// Uniformly random unit vector in C^d.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let nrm = norm_sqr(&v).sqrt();
        if nrm > 1e-12 {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal)) / 2f64.sqrt()
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// GUE sample with unit-variance entries: E|H_ab|^2 = 1.
pub fn gue<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = c(rng.sample(StandardNormal), 0.0);
        for j in (i + 1)..d {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            let z = c(x, y) / 2f64.sqrt();
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// exp(i t H) for Hermitian H.
pub fn expm_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let d = h.nrows();
    let phases = CMatrix::from_fn(d, d, |i, j| if i == j { cis(t * eig.eigenvalues[i]) } else { ZERO });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}
