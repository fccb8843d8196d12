//! Shared fixtures for the solver benchmarks.

use dqsync::registration::synthetic::{scan_poses, synthetic_scans};
use dqsync::registration::PointCloud;
use dqsync::{generate, NoiseLevel, SynthInstance, SyncProblem, TrialStreams};

pub const BENCH_SEED: u64 = 7;

/// A seeded synthetic instance and the problem built from its matrix.
pub fn instance(n: usize, p: f64, sigma_r_deg: f64, sigma_t: f64) -> (SynthInstance, SyncProblem) {
    let inst = generate(n, p, NoiseLevel::from_degrees(sigma_r_deg, sigma_t), &TrialStreams::new(BENCH_SEED, 0));
    let problem = SyncProblem::new(inst.c.clone());
    (inst, problem)
}

/// Two overlapping synthetic scans of the same surface.
pub fn scan_pair(points: usize) -> (PointCloud, PointCloud) {
    let mut rng = TrialStreams::new(BENCH_SEED, 0).ground_truth();
    let poses = scan_poses(2, 0.3, 0.1, &mut rng);
    let mut scans = synthetic_scans(&poses, points, &mut rng);
    let b = scans.pop().unwrap();
    let a = scans.pop().unwrap();
    (a, b)
}
