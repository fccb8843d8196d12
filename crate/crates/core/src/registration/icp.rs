//! Point-to-point ICP with Horn's closed-form quaternion fit.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dq::Pose;
use crate::error::{Error, Result};
use crate::quat::{Quaternion, Vec3};

use super::kdtree::SpatialIndex;

pub const DEFAULT_ICP_MAX_ITERS: usize = 300;
pub const DEFAULT_RMS_TOL: f64 = 1e-9;

/// Outcome of one ICP run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    /// Maps source coordinates onto target coordinates.
    pub pose: Pose,
    pub rms: f64,
    /// Closest-point distance of every source point under `pose`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// RMS before the first update and after every update.
    pub rms_history: Vec<f64>,
}

impl IcpResult {
    /// Fraction of source points within `dist` of the target.
    pub fn inlier_fraction(&self, dist: f64) -> f64 {
        if self.residuals.is_empty() {
            return 0.0;
        }
        self.residuals.iter().filter(|&&r| r <= dist).count() as f64 / self.residuals.len() as f64
    }
}

/// Least-squares rigid motion `(R, t)` minimizing `Σ |R pₖ + t − qₖ|²`.
///
/// Uses the dominant eigenvector of Horn's symmetric 4×4 matrix. Fails when
/// the cross-covariance has rank below two, where the rotation is not unique.
pub fn fit_rigid(src: &[Vec3], dst: &[Vec3]) -> Result<Pose> {
    if src.len() != dst.len() {
        return Err(Error::DimensionMismatch { expected: src.len(), got: dst.len() });
    }
    if src.len() < 3 {
        return Err(Error::DegenerateCorrespondences("fewer than three correspondences"));
    }
    let inv = 1.0 / src.len() as f64;
    let cs = src.iter().fold(Vec3::ZERO, |a, &p| a + p) * inv;
    let cd = dst.iter().fold(Vec3::ZERO, |a, &p| a + p) * inv;
    let mut s = Matrix3::<f64>::zeros();
    for (p, q) in src.iter().zip(dst) {
        let a = (*p - cs).to_array();
        let b = (*q - cd).to_array();
        for r in 0..3 {
            for c in 0..3 {
                s[(r, c)] += a[r] * b[c];
            }
        }
    }
    let sv = s.singular_values();
    let top = sv.max();
    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    if top == 0.0 || sorted[1] <= 1e-12 * top {
        return Err(Error::DegenerateCorrespondences("cross-covariance has rank below two"));
    }
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    let n = Matrix4::new(
        sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
    );
    let eig = SymmetricEigen::new(n);
    let k = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(k);
    let q = Quaternion::new(v[0], v[1], v[2], v[3]).normalized()?;
    let t = cd - q.rotate_unchecked(cs);
    Ok(Pose::new(q, t))
}

fn correspond(index: &SpatialIndex, source: &[Vec3], pose: &Pose) -> (Vec<Vec3>, Vec<f64>, f64) {
    let mut matched = Vec::with_capacity(source.len());
    let mut dists = Vec::with_capacity(source.len());
    let mut sum = 0.0;
    for p in source {
        let (i, d2) = index.nearest(&pose.transform_point(*p)).expect("nonempty target");
        matched.push(index.point(i));
        dists.push(d2.sqrt());
        sum += d2;
    }
    (matched, dists, (sum / source.len() as f64).sqrt())
}

/// Aligns `source` to `target` starting from `init`.
///
/// Each iteration matches every transformed source point to its nearest
/// target point and refits the full pose in closed form. Stops when the RMS
/// drops by less than `rms_tol` or after `max_iters` updates. An update that
/// would raise the RMS is discarded, so the history is nonincreasing.
pub fn icp(source: &[Vec3], target: &[Vec3], init: &Pose, max_iters: usize, rms_tol: f64) -> Result<IcpResult> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput);
    }
    let index = SpatialIndex::new(target);
    icp_indexed(source, &index, init, max_iters, rms_tol)
}

pub fn icp_indexed(source: &[Vec3], index: &SpatialIndex, init: &Pose, max_iters: usize, rms_tol: f64) -> Result<IcpResult> {
    if source.is_empty() || index.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pose = *init;
    let (mut matched, mut residuals, mut rms) = correspond(index, source, &pose);
    let mut history = vec![rms];
    let mut iterations = 0;
    while iterations < max_iters {
        let next = fit_rigid(source, &matched)?;
        iterations += 1;
        let (m, r, next_rms) = correspond(index, source, &next);
        if next_rms > rms {
            break;
        }
        let gain = rms - next_rms;
        pose = next;
        matched = m;
        residuals = r;
        rms = next_rms;
        history.push(rms);
        if gain < rms_tol {
            break;
        }
    }
    Ok(IcpResult { pose, rms, residuals, iterations, rms_history: history })
}
