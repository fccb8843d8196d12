//! Multi-scan registration: PLY input, pairwise ICP, measurement graph
//! assembly, synchronization and merged-cloud export.
//!
//! # Frame convention
//!
//! A scan pose `W_k` maps scan-local coordinates to the common frame. The
//! synchronization variable is its inverse, `x_k = W_k⁻¹`, so the relative
//! measurement `C_ij ≈ x_i x_j*` is the motion taking scan `j`'s frame into
//! scan `i`'s. ICP is run with scan `j` as source and scan `i` as target.

pub mod graph;
pub mod icp;
pub mod kdtree;
pub mod ply;
pub mod synthetic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dq::Pose;
use crate::quat::Vec3;

pub use graph::{
    assemble_graph, build_graph, measure_pairs, merge, merge_and_export, perturb_measurement, register, GraphParams,
    PairwiseMeasurements, Pairing, RegistrationGraph, RegistrationResult, ScanPairMeasurement,
};
pub use icp::{icp, IcpResult};
pub use kdtree::SpatialIndex;
pub use ply::{parse_ply, read_ply, write_ply_ascii};

/// Default voxel edge as a fraction of the bounding-box diagonal.
pub const DEFAULT_VOXEL_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub name: String,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, name: String::new() }
    }

    pub fn named(points: Vec<Vec3>, name: impl Into<String>) -> Self {
        Self { points, name: name.into() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Componentwise `(min, max)`, or `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        bounds(&self.points)
    }

    pub fn transformed(&self, pose: &Pose) -> PointCloud {
        PointCloud { points: self.points.iter().map(|p| pose.transform_point(*p)).collect(), name: self.name.clone() }
    }

    /// Replaces the points in each occupied voxel of edge `voxel` by their centroid.
    ///
    /// Output order follows the voxel grid coordinates, so it is deterministic.
    pub fn voxel_downsample(&self, voxel: f64) -> PointCloud {
        if !(voxel > 0.0) {
            return self.clone();
        }
        let mut cells: BTreeMap<(i64, i64, i64), (Vec3, usize)> = BTreeMap::new();
        for p in &self.points {
            let key = ((p.x / voxel).floor() as i64, (p.y / voxel).floor() as i64, (p.z / voxel).floor() as i64);
            let e = cells.entry(key).or_insert((Vec3::ZERO, 0));
            e.0 += *p;
            e.1 += 1;
        }
        let points = cells.into_values().map(|(s, c)| s * (1.0 / c as f64)).collect();
        PointCloud { points, name: self.name.clone() }
    }
}

pub fn bounds(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| {
        (
            Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
            Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
        )
    }))
}

/// `DEFAULT_VOXEL_FRACTION` of the diagonal of the box enclosing every scan.
pub fn default_voxel_size(scans: &[PointCloud]) -> f64 {
    let all: Vec<Vec3> = scans.iter().filter_map(|s| s.bounds()).flat_map(|(a, b)| [a, b]).collect();
    match bounds(&all) {
        Some((lo, hi)) => DEFAULT_VOXEL_FRACTION * lo.distance(&hi),
        None => 0.0,
    }
}
