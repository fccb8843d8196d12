//! Synthetic scan generation for tests, benchmarks and demos.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dq::Pose;
use crate::quat::{Quaternion, Vec3};

use super::PointCloud;

/// Radius of an asymmetric bumpy closed surface in direction `d` (unit).
fn radius(d: Vec3) -> f64 {
    1.0 + 0.25 * (3.0 * d.x).sin() * (2.0 * d.y).cos() + 0.15 * (4.0 * d.z + 0.5).cos() + 0.2 * d.x * d.y + 0.1 * d.z
}

/// `n` points on a star-shaped surface with no rotational symmetry, about a meter across.
pub fn sample_surface<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let len = v.norm();
        if len < 1e-9 {
            continue;
        }
        let d = v * (1.0 / len);
        out.push(Vec3::new(1.3 * d.x, d.y, 0.8 * d.z) * radius(d));
    }
    out
}

/// Scan poses spread around the identity by up to `max_angle` radians and `max_offset` meters.
pub fn scan_poses<R: Rng + ?Sized>(n: usize, max_angle: f64, max_offset: f64, rng: &mut R) -> Vec<Pose> {
    (0..n)
        .map(|_| {
            let axis = loop {
                let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let l = v.norm();
                if l > 1e-3 && l <= 1.0 {
                    break v * (1.0 / l);
                }
            };
            let q = Quaternion::from_axis_angle(axis, rng.random_range(-max_angle..max_angle)).expect("unit axis");
            let t = Vec3::new(
                rng.random_range(-max_offset..max_offset),
                rng.random_range(-max_offset..max_offset),
                rng.random_range(-max_offset..max_offset),
            );
            Pose::new(q, t)
        })
        .collect()
}

/// One independently sampled scan per pose, expressed in that scan's local frame.
///
/// `poses[k]` maps scan `k` into the common frame, so the scan holds
/// `poses[k]⁻¹` applied to surface samples.
pub fn synthetic_scans<R: Rng + ?Sized>(poses: &[Pose], points_per_scan: usize, rng: &mut R) -> Vec<PointCloud> {
    poses
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let inv = w.inverse();
            let pts = sample_surface(points_per_scan, rng).into_iter().map(|p| inv.transform_point(p)).collect();
            PointCloud::named(pts, format!("scan_{k:03}"))
        })
        .collect()
}
