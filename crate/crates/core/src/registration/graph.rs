//! Pairwise measurement graph and the end-to-end registration pipeline.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dq::{dq_to_pose, pose_to_dq, DualQuaternion, Pose};
use crate::dqlinalg::HermitianDQMatrix;
use crate::error::{Error, Result};
use crate::quat::Vec3;
use crate::sync::{solve, SolverConfig, SyncEstimate, SyncProblem};
use crate::synthgen::{connected, sample_noise_pose, NoiseLevel};

use super::icp::{icp_indexed, DEFAULT_ICP_MAX_ITERS, DEFAULT_RMS_TOL};
use super::kdtree::SpatialIndex;
use super::ply::write_ply_ascii;
use super::{default_voxel_size, PointCloud};

/// Which scan pairs are registered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    #[default]
    AllPairs,
    /// Consecutive scans after sorting by name.
    NameAdjacent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPairMeasurement {
    pub i: usize,
    pub j: usize,
    /// Motion taking scan `j`'s frame into scan `i`'s.
    pub relative: Pose,
    pub rms: f64,
    pub inlier_fraction: f64,
    pub accepted: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub pairing: Pairing,
    /// Voxel edge; `None` uses 1% of the bounding-box diagonal.
    pub voxel: Option<f64>,
    /// Maximum accepted RMS; `None` means twice the voxel edge.
    pub accept_rms: Option<f64>,
    pub accept_inlier: f64,
    /// Inlier distance; `None` means three voxel edges.
    pub inlier_dist: Option<f64>,
    pub icp_max_iters: usize,
    pub icp_rms_tol: f64,
    /// Initial guesses for `(i, j)` with `i < j`, in the same convention as `relative`.
    pub init: BTreeMap<(usize, usize), Pose>,
    /// Extra rigid noise composed onto every accepted measurement by [`register`].
    pub perturbation: Option<NoiseLevel>,
    /// Seed for the perturbation draws.
    pub seed: u64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            pairing: Pairing::AllPairs,
            voxel: None,
            accept_rms: None,
            accept_inlier: 0.3,
            inlier_dist: None,
            icp_max_iters: DEFAULT_ICP_MAX_ITERS,
            icp_rms_tol: DEFAULT_RMS_TOL,
            init: BTreeMap::new(),
            perturbation: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationGraph {
    pub problem: SyncProblem,
    /// Row-major acceptance mask; the diagonal is `true`.
    pub mask: Vec<bool>,
    pub measurements: Vec<ScanPairMeasurement>,
    pub voxel: f64,
    pub accepted: usize,
    /// `n(n−1)/2`, the number of off-diagonal pairs.
    pub total: usize,
    pub elapsed_icp: f64,
}

impl RegistrationGraph {
    /// `1 − accepted/total`.
    pub fn missing_fraction(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        1.0 - self.accepted as f64 / self.total as f64
    }
}

/// Composes a sampled rigid perturbation onto the relative pose.
pub fn perturb_measurement(m: &ScanPairMeasurement, noise: NoiseLevel, rng: &mut ChaCha8Rng) -> ScanPairMeasurement {
    if noise.sigma_r == 0.0 && noise.sigma_t == 0.0 {
        return m.clone();
    }
    let e = sample_noise_pose(noise, rng);
    ScanPairMeasurement { relative: e.compose(&m.relative), ..m.clone() }
}

fn candidate_pairs(scans: &[PointCloud], pairing: Pairing) -> Vec<(usize, usize)> {
    let n = scans.len();
    match pairing {
        Pairing::AllPairs => (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect(),
        Pairing::NameAdjacent => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| scans[a].name.cmp(&scans[b].name).then(a.cmp(&b)));
            let mut pairs: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
            pairs.sort();
            pairs
        }
    }
}

/// ICP outcome for every candidate pair, before graph assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMeasurements {
    pub n: usize,
    pub measurements: Vec<ScanPairMeasurement>,
    pub voxel: f64,
    pub elapsed: f64,
}

/// Runs ICP on every candidate pair, in parallel, each with its own index.
pub fn measure_pairs(scans: &[PointCloud], params: &GraphParams) -> Result<PairwiseMeasurements> {
    let n = scans.len();
    if n < 2 {
        return Err(Error::Domain("registration needs at least two scans"));
    }
    if scans.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyInput);
    }
    let start = Instant::now();
    let voxel = params.voxel.unwrap_or_else(|| default_voxel_size(scans));
    let accept_rms = params.accept_rms.unwrap_or(2.0 * voxel);
    let inlier_dist = params.inlier_dist.unwrap_or(3.0 * voxel);
    let down: Vec<PointCloud> = scans.par_iter().map(|s| s.voxel_downsample(voxel)).collect();
    let pairs = candidate_pairs(scans, params.pairing);

    let measurements = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<ScanPairMeasurement> {
            let init = params.init.get(&(i, j)).copied().unwrap_or(Pose::IDENTITY);
            let index = SpatialIndex::new(&down[i].points);
            match icp_indexed(&down[j].points, &index, &init, params.icp_max_iters, params.icp_rms_tol) {
                Ok(r) => {
                    let inlier_fraction = r.inlier_fraction(inlier_dist);
                    Ok(ScanPairMeasurement {
                        i,
                        j,
                        relative: r.pose,
                        rms: r.rms,
                        inlier_fraction,
                        accepted: r.rms <= accept_rms && inlier_fraction >= params.accept_inlier,
                        iterations: r.iterations,
                    })
                }
                Err(Error::DegenerateCorrespondences(_)) => Ok(ScanPairMeasurement {
                    i,
                    j,
                    relative: Pose::IDENTITY,
                    rms: f64::INFINITY,
                    inlier_fraction: 0.0,
                    accepted: false,
                    iterations: 0,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairwiseMeasurements { n, measurements, voxel, elapsed: start.elapsed().as_secs_f64() })
}

/// Fills `C_ij = pose_to_dq(relative)` and its conjugate for accepted pairs;
/// rejected pairs stay zero. Fails if the accepted edges leave the graph disconnected.
pub fn assemble_graph(pairs: PairwiseMeasurements) -> Result<RegistrationGraph> {
    let n = pairs.n;
    let mut mask = vec![false; n * n];
    for k in 0..n {
        mask[k * n + k] = true;
    }
    let mut entries: BTreeMap<(usize, usize), DualQuaternion> = BTreeMap::new();
    for m in pairs.measurements.iter().filter(|m| m.accepted) {
        mask[m.i * n + m.j] = true;
        mask[m.j * n + m.i] = true;
        entries.insert((m.i, m.j), pose_to_dq(&m.relative)?.get());
    }
    let accepted = entries.len();
    let total = n * (n - 1) / 2;
    if !connected(n, |i, j| mask[i * n + j]) {
        return Err(Error::InsufficientGraph { accepted, total });
    }
    Ok(RegistrationGraph {
        problem: assemble(n, &entries),
        mask,
        measurements: pairs.measurements,
        voxel: pairs.voxel,
        accepted,
        total,
        elapsed_icp: pairs.elapsed,
    })
}

/// [`measure_pairs`] followed by [`assemble_graph`].
pub fn build_graph(scans: &[PointCloud], params: &GraphParams) -> Result<RegistrationGraph> {
    assemble_graph(measure_pairs(scans, params)?)
}

fn assemble(n: usize, entries: &BTreeMap<(usize, usize), DualQuaternion>) -> SyncProblem {
    SyncProblem::new(HermitianDQMatrix::from_upper(n, |i, j| {
        if i == j {
            DualQuaternion::ONE
        } else {
            entries.get(&(i, j)).copied().unwrap_or(DualQuaternion::ZERO)
        }
    }))
}

impl RegistrationGraph {
    pub fn n(&self) -> usize {
        self.problem.n()
    }

    /// Measurement matrix with every accepted edge perturbed by `noise`.
    ///
    /// Edge `(i, j)` of trial `t` draws from ChaCha8 seeded with `seed` on
    /// stream `t << 32 | (i·n + j + 1)`, so trials are independent of each
    /// other and of evaluation order.
    pub fn perturbed(&self, noise: NoiseLevel, seed: u64, trial: u32) -> Result<SyncProblem> {
        let n = self.n();
        let mut entries = BTreeMap::new();
        for m in self.measurements.iter().filter(|m| m.accepted) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((trial as u64) << 32) | (m.i * n + m.j + 1) as u64);
            let p = perturb_measurement(m, noise, &mut rng);
            entries.insert((m.i, m.j), pose_to_dq(&p.relative)?.get());
        }
        Ok(assemble(n, &entries))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    pub graph: RegistrationGraph,
    pub estimate: SyncEstimate,
    /// Scan-to-common-frame poses, `W_k = x_k⁻¹`.
    pub poses: Vec<Pose>,
}

/// ICP graph construction followed by synchronization.
pub fn register(scans: &[PointCloud], params: &GraphParams, solver: &SolverConfig) -> Result<RegistrationResult> {
    let graph = build_graph(scans, params)?;
    let problem = match params.perturbation {
        Some(noise) => graph.perturbed(noise, params.seed, 0)?,
        None => graph.problem.clone(),
    };
    let estimate = solve(&problem, solver, None)?;
    let poses = estimate.poses.iter().map(|x| dq_to_pose(x).map(|p| p.inverse())).collect::<Result<Vec<_>>>()?;
    Ok(RegistrationResult { graph, estimate, poses })
}

/// Distinct, saturated colors for scan `k`.
fn scan_color(k: usize) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 8] = [
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
        [210, 245, 60],
    ];
    PALETTE[k % PALETTE.len()]
}

/// Every scan moved by its pose and concatenated, with per-point scan colors.
pub fn merge(scans: &[PointCloud], poses: &[Pose]) -> Result<(Vec<Vec3>, Vec<[u8; 3]>)> {
    if scans.len() != poses.len() {
        return Err(Error::DimensionMismatch { expected: scans.len(), got: poses.len() });
    }
    let mut points = Vec::new();
    let mut colors = Vec::new();
    for (k, (s, w)) in scans.iter().zip(poses).enumerate() {
        points.extend(s.points.iter().map(|p| w.transform_point(*p)));
        colors.extend(std::iter::repeat_n(scan_color(k), s.len()));
    }
    Ok((points, colors))
}

pub fn merge_and_export(scans: &[PointCloud], poses: &[Pose], path: &Path) -> Result<()> {
    let (points, colors) = merge(scans, poses)?;
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    write_ply_ascii(&mut out, &points, Some(&colors), &[])?;
    out.flush()?;
    Ok(())
}
