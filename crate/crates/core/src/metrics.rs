//! Gauge alignment in pose space and rotation/translation error statistics.

use serde::{Deserialize, Serialize};

use crate::dq::Pose;
use crate::error::{Error, Result};
use crate::quat::{Quaternion, Vec3};

/// `‖s‖` below this makes the rotation aligner undefined.
pub const GAUGE_EPS: f64 = 1e-9;

/// Trim fraction used for the robust summaries.
pub const DEFAULT_TRIM: f64 = 0.15;

/// Global right factor `z = (q, t)` with `estimates ≈ truth ∘ z`.
///
/// `q = s/‖s‖` with `s = Σ q̂_j* q_j` and `t = (1/n) Σ ψ_{q̂_j*}(t_j − t̂_j)`.
/// Each `q_j` is sign-flipped to the hemisphere of `q̂_j` before summing.
pub fn gauge_align(estimates: &[Pose], truth: &[Pose]) -> Result<Pose> {
    if estimates.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: estimates.len() });
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = truth.len() as f64;
    let mut s = Quaternion::ZERO;
    let mut t = Vec3::ZERO;
    for (e, g) in estimates.iter().zip(truth) {
        let q = if g.rotation.dot(&e.rotation) < 0.0 { -e.rotation } else { e.rotation };
        s += g.rotation.conj() * q;
        t += g.rotation.conj().rotate_unchecked(e.translation - g.translation);
    }
    let ns = s.norm();
    if ns < GAUGE_EPS {
        return Err(Error::DegenerateGauge(ns));
    }
    Ok(Pose::new(s * (1.0 / ns), t * (1.0 / n)))
}

/// `d_R(q₁, q₂) = 2 arccos(2⟨q₁, q₂⟩² − 1)`.
///
/// For rotations `θ` apart this evaluates to `2θ`. It is computed as
/// `4 atan2(|im(q₁* q₂)|, |sc(q₁* q₂)|)`, which is the same quantity for unit
/// inputs but keeps full precision near zero, where `arccos` loses half the
/// digits.
pub fn rot_error(q1: &Quaternion, q2: &Quaternion) -> f64 {
    let r = q1.conj() * *q2;
    4.0 * r.v.norm().atan2(r.w.abs())
}

/// The literal `2 arccos(2⟨q₁, q₂⟩² − 1)` with the argument clamped to `[−1, 1]`.
pub fn rot_error_arccos(q1: &Quaternion, q2: &Quaternion) -> f64 {
    let d = q1.dot(q2);
    2.0 * (2.0 * d * d - 1.0).clamp(-1.0, 1.0).acos()
}

/// `d_T(t₁, t₂) = ‖t₁ − t₂‖₂`.
pub fn trans_error(t1: &Vec3, t2: &Vec3) -> f64 {
    t1.distance(t2)
}

/// Per-node `(d_R, d_T)` of `estimates` against `truth ∘ z`.
pub fn per_node_errors(estimates: &[Pose], truth: &[Pose], z: &Pose) -> Vec<(f64, f64)> {
    estimates
        .iter()
        .zip(truth)
        .map(|(e, g)| {
            let aligned = g.compose(z);
            (rot_error(&e.rotation, &aligned.rotation), trans_error(&e.translation, &aligned.translation))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Mean `d_R` in radians, after trimming.
    pub error_r: f64,
    /// Mean `d_T` in meters, after trimming.
    pub error_t: f64,
    pub std_r: f64,
    pub std_t: f64,
    pub per_node: Vec<(f64, f64)>,
    pub elapsed: f64,
}

/// Mean and population standard deviation of `values` after dropping the
/// `⌊trim·len⌋` smallest and largest entries.
pub fn trimmed_stats(values: &[f64], trim_fraction: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::Domain("trim fraction must lie in [0, 0.5)"));
    }
    let k = (trim_fraction * values.len() as f64).floor() as usize;
    let kept: Vec<f64> = if k == 0 {
        values.to_vec()
    } else {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted[k..sorted.len() - k].to_vec()
    };
    let m = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / m;
    let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    Ok((mean, var.sqrt()))
}

/// Summarizes `(d_R, d_T)` pairs; each column is trimmed independently.
pub fn aggregate(per_node: &[(f64, f64)], trim_fraction: f64) -> Result<ErrorReport> {
    let r: Vec<f64> = per_node.iter().map(|p| p.0).collect();
    let t: Vec<f64> = per_node.iter().map(|p| p.1).collect();
    let (error_r, std_r) = trimmed_stats(&r, trim_fraction)?;
    let (error_t, std_t) = trimmed_stats(&t, trim_fraction)?;
    Ok(ErrorReport { error_r, error_t, std_r, std_t, per_node: per_node.to_vec(), elapsed: 0.0 })
}

/// Gauge-aligns `estimates` to `truth` and summarizes the per-node errors without trimming.
pub fn evaluate(estimates: &[Pose], truth: &[Pose]) -> Result<ErrorReport> {
    let z = gauge_align(estimates, truth)?;
    aggregate(&per_node_errors(estimates, truth, &z), 0.0)
}
