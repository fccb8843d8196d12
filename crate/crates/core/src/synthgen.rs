//! Synthetic ground truth and noisy measurement matrices.
//!
//! Measurements follow the shifted additive model
//! `C_ij = e_ij (x̂_i x̂_j* + ξ_ij − 1)` for `i < j`, `C_ii = 1`, completed by
//! conjugation, where `e_ij ~ Bernoulli(p)` and `ξ_ij` is a random unit dual
//! quaternion close to the identity.
//!
//! # Random streams
//!
//! All randomness comes from ChaCha8 seeded with the run seed. Every trial
//! and every edge draws from its own stream (ChaCha's 64-bit stream id), so
//! results do not depend on execution order:
//!
//! | stream id                       | consumer                          |
//! |---------------------------------|-----------------------------------|
//! | `trial << 32`                   | ground-truth poses                |
//! | `trial << 32 \| (i·n + j + 1)`  | edge `(i, j)`: mask draw, then ξ  |
//! | `trial << 32 \| 0xFFFF_FFFF`    | solver seed (one `u64`)           |
//!
//! Normals are drawn with `rand_distr::StandardNormal` (ziggurat).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dq::{pose_to_dq, DualQuaternion, Pose, UnitDualQuaternion};
use crate::dqlinalg::{DQVector, HermitianDQMatrix};
use crate::dualnum::DualNumber;
use crate::quat::{Quaternion, Vec3};

/// Noise scales; the rotation scale is stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub sigma_r: f64,
    pub sigma_t: f64,
}

impl NoiseLevel {
    pub const ZERO: NoiseLevel = NoiseLevel { sigma_r: 0.0, sigma_t: 0.0 };

    pub fn from_degrees(sigma_r_deg: f64, sigma_t: f64) -> Self {
        Self { sigma_r: sigma_r_deg.to_radians(), sigma_t }
    }
}

/// One cell of a synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub p: f64,
    pub sigma_r_deg: f64,
    pub sigma_t: f64,
    pub seed: u64,
    pub trials: usize,
}

impl SynthConfig {
    pub fn noise(&self) -> NoiseLevel {
        NoiseLevel::from_degrees(self.sigma_r_deg, self.sigma_t)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(format!("p must lie in (0, 1], got {}", self.p));
        }
        if !(self.sigma_r_deg >= 0.0 && self.sigma_t >= 0.0) {
            return Err("noise scales must be nonnegative".into());
        }
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        Ok(())
    }
}

/// Per-trial random stream factory.
#[derive(Debug, Clone, Copy)]
pub struct TrialStreams {
    pub seed: u64,
    pub trial: u32,
}

impl TrialStreams {
    pub fn new(seed: u64, trial: u32) -> Self {
        Self { seed, trial }
    }

    fn stream(&self, low: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((self.trial as u64) << 32) | low);
        rng
    }

    pub fn ground_truth(&self) -> ChaCha8Rng {
        self.stream(0)
    }

    pub fn edge(&self, i: usize, j: usize, n: usize) -> ChaCha8Rng {
        let id = (i * n + j + 1) as u64;
        debug_assert!(id < 0xFFFF_FFFF, "edge index overflows the stream layout");
        self.stream(id)
    }

    pub fn solver_seed(&self) -> u64 {
        self.stream(0xFFFF_FFFF).next_u64()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthInstance {
    pub xhat: DQVector,
    pub c: HermitianDQMatrix,
    /// Row-major observation mask; the diagonal is `true`.
    pub mask: Vec<bool>,
    /// `‖Δ x̂‖₂` with `Δ = C − x̂ x̂*`.
    pub delta_xhat_norm: DualNumber,
}

impl SynthInstance {
    pub fn n(&self) -> usize {
        self.xhat.len()
    }

    pub fn observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n() + j]
    }

    /// Fraction of observed off-diagonal pairs.
    pub fn observed_fraction(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 1.0;
        }
        let hits = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| self.observed(i, j)).count();
        hits as f64 / (n * (n - 1) / 2) as f64
    }

    /// `Δ = C − x̂ x̂*`.
    pub fn delta(&self) -> HermitianDQMatrix {
        self.c.sub(&HermitianDQMatrix::outer(&self.xhat)).expect("same dimension")
    }

    /// Whether the observation graph is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        connected(n, |i, j| self.observed(i, j))
    }
}

/// Breadth-first connectivity over an implicit undirected graph.
pub fn connected<F: Fn(usize, usize) -> bool>(n: usize, edge: F) -> bool {
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && i != j && edge(i.min(j), i.max(j)) {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

fn unit_axis<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v * (1.0 / n);
        }
    }
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vec3 {
    Vec3::new(
        sigma * rng.sample::<f64, _>(StandardNormal),
        sigma * rng.sample::<f64, _>(StandardNormal),
        sigma * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Random pose: axis uniform on S², angle uniform on `[0, 2π)`, translation `N(0, I₃)`.
pub fn sample_pose<R: Rng + ?Sized>(rng: &mut R) -> Pose {
    let axis = unit_axis(rng);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let t = gaussian_vec(rng, 1.0);
    Pose::new(Quaternion::from_axis_angle(axis, theta).expect("unit axis"), t)
}

pub fn sample_ground_truth<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DQVector {
    DQVector::new((0..n).map(|_| pose_to_dq(&sample_pose(rng)).expect("unit rotation").get()).collect())
}

/// Noise pose: axis uniform, angle `~ N(0, σ_r²)`, translation `~ N(0, σ_t² I₃)`.
pub fn sample_noise_pose<R: Rng + ?Sized>(noise: NoiseLevel, rng: &mut R) -> Pose {
    let axis = unit_axis(rng);
    let theta = noise.sigma_r * rng.sample::<f64, _>(StandardNormal);
    let t = gaussian_vec(rng, noise.sigma_t);
    Pose::new(Quaternion::from_axis_angle(axis, theta).expect("unit axis"), t)
}

pub fn sample_noise_udq<R: Rng + ?Sized>(noise: NoiseLevel, rng: &mut R) -> UnitDualQuaternion {
    pose_to_dq(&sample_noise_pose(noise, rng)).expect("unit rotation")
}

/// Builds `C` from ground truth `xhat` with observation rate `p`.
pub fn build_measurement(xhat: &DQVector, p: f64, noise: NoiseLevel, streams: &TrialStreams) -> SynthInstance {
    let n = xhat.len();
    let mut mask = vec![false; n * n];
    let c = HermitianDQMatrix::from_upper(n, |i, j| {
        if i == j {
            mask[i * n + i] = true;
            return DualQuaternion::ONE;
        }
        let mut rng = streams.edge(i, j, n);
        let u: f64 = rng.random();
        if u >= p {
            return DualQuaternion::ZERO;
        }
        mask[i * n + j] = true;
        mask[j * n + i] = true;
        let xi = sample_noise_udq(noise, &mut rng).get();
        xhat[i] * xhat[j].conj() + xi - DualQuaternion::ONE
    });
    let cx = c.matvec(xhat).expect("same dimension");
    let delta_xhat = cx.sub(&xhat.scale(n as f64)).expect("same dimension");
    SynthInstance { xhat: xhat.clone(), c, mask, delta_xhat_norm: delta_xhat.norm2() }
}

/// Ground truth plus measurements for one trial.
pub fn generate(n: usize, p: f64, noise: NoiseLevel, streams: &TrialStreams) -> SynthInstance {
    let xhat = sample_ground_truth(n, &mut streams.ground_truth());
    build_measurement(&xhat, p, noise, streams)
}
