#![allow(dead_code)]

use dqsync::dqlinalg::{project_udq, DQVector, HermitianDQMatrix};
use dqsync::{DualNumber, DualQuaternion, Quaternion};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_quat(rng: &mut ChaCha8Rng) -> Quaternion {
    Quaternion::new(gauss(rng), gauss(rng), gauss(rng), gauss(rng))
}

/// Gaussian dual quaternion with an overall log-uniform scale in `[1e-3, 1e3]`.
pub fn random_dq(rng: &mut ChaCha8Rng) -> DualQuaternion {
    let s = 10f64.powf(rng.random_range(-3.0..3.0));
    DualQuaternion::new(random_quat(rng), random_quat(rng)).scale(s)
}

pub fn random_udq(rng: &mut ChaCha8Rng) -> DualQuaternion {
    DualQuaternion::new(random_quat(rng), random_quat(rng)).normalize().unwrap().get()
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> DQVector {
    DQVector::new((0..n).map(|_| random_dq(rng)).collect())
}

pub fn random_feasible(n: usize, rng: &mut ChaCha8Rng) -> DQVector {
    project_udq(&DQVector::random_gaussian(n, rng))
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianDQMatrix {
    HermitianDQMatrix::from_upper(n, |_, _| DualQuaternion::new(random_quat(rng), random_quat(rng)))
}

/// `h + s·I` with `s` the Frobenius norm of the standard part, so the
/// spectrum is nonnegative and the largest eigenvalue is dominant.
pub fn psd_shift(h: &HermitianDQMatrix) -> HermitianDQMatrix {
    let n = h.dim();
    let s: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| h.get(i, j).st.norm_squared()).sum::<f64>().sqrt();
    HermitianDQMatrix::from_upper(n, |i, j| {
        if i == j { h.get(i, j) + DualQuaternion::from_dual(DualNumber::real(s)) } else { h.get(i, j) }
    })
}

/// `a ≤ b` under the lexicographic order.
pub fn dn_le(a: DualNumber, b: DualNumber) -> bool {
    a.total_cmp(&b) != std::cmp::Ordering::Greater
}
