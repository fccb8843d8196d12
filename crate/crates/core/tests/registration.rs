use std::time::Instant;

use dqsync::metrics::{gauge_align, per_node_errors, rot_error};
use dqsync::registration::synthetic::{sample_surface, scan_poses, synthetic_scans};
use dqsync::registration::{
    build_graph, merge, merge_and_export, parse_ply, perturb_measurement, read_ply, register, GraphParams,
    PointCloud, ScanPairMeasurement, SpatialIndex,
};
use dqsync::synthgen::NoiseLevel;
use dqsync::{Error, Pose, Quaternion, SolverConfig, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(n: usize, points: usize, seed: u64) -> (Vec<Pose>, Vec<PointCloud>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses = scan_poses(n, 0.3, 0.1, &mut rng);
    let scans = synthetic_scans(&poses, points, &mut rng);
    (poses, scans)
}

/// Errors of the recovered sync variables against `W_k⁻¹`, after gauge alignment.
fn pose_errors(estimated: &[Pose], truth: &[Pose]) -> (f64, f64) {
    let est: Vec<Pose> = estimated.iter().map(Pose::inverse).collect();
    let gt: Vec<Pose> = truth.iter().map(Pose::inverse).collect();
    let z = gauge_align(&est, &gt).unwrap();
    let e = per_node_errors(&est, &gt, &z);
    let n = e.len() as f64;
    (e.iter().map(|v| v.0).sum::<f64>() / n, e.iter().map(|v| v.1).sum::<f64>() / n)
}

#[test]
fn three_scans_recover_poses() {
    let (truth, scans) = fixture(3, 10_000, 1);
    let params = GraphParams::default();
    let r = register(&scans, &params, &SolverConfig::default()).unwrap();
    assert_eq!(r.graph.accepted, 3);
    let (er, et) = pose_errors(&r.poses, &truth);
    assert!(et <= 2.0 * r.graph.voxel, "error_t {et} voxel {}", r.graph.voxel);
    assert!(er <= 0.02, "error_r {er}");
}

#[test]
fn all_pairs_rejected_is_insufficient() {
    let (_, scans) = fixture(3, 500, 2);
    let params = GraphParams { accept_inlier: 1.1, ..GraphParams::default() };
    match build_graph(&scans, &params) {
        Err(Error::InsufficientGraph { accepted, total }) => {
            assert_eq!(accepted, 0);
            assert_eq!(total, 3);
        }
        other => panic!("expected InsufficientGraph, got {other:?}"),
    }
}

#[test]
fn missing_fraction_bookkeeping() {
    let (_, scans) = fixture(4, 800, 3);
    let params = GraphParams { pairing: dqsync::registration::Pairing::NameAdjacent, ..GraphParams::default() };
    let g = build_graph(&scans, &params).unwrap();
    assert_eq!(g.total, 6);
    assert_eq!(g.measurements.len(), 3);
    let accepted = g.measurements.iter().filter(|m| m.accepted).count();
    assert_eq!(g.accepted, accepted);
    assert!((g.missing_fraction() - (1.0 - accepted as f64 / 6.0)).abs() < 1e-15);
    for m in &g.measurements {
        assert!(m.i < m.j && m.rms >= 0.0);
    }
}

#[test]
fn relative_poses_compose_on_triples() {
    let (_, scans) = fixture(3, 10_000, 4);
    let g = build_graph(&scans, &GraphParams::default()).unwrap();
    let rel = |i: usize, j: usize| g.measurements.iter().find(|m| m.i == i && m.j == j).unwrap().relative;
    // (0←1)∘(1←2) against (0←2)
    let composed = rel(0, 1).compose(&rel(1, 2));
    let direct = rel(0, 2);
    assert!(composed.translation.distance(&direct.translation) <= 2.0 * g.voxel);
    assert!(rot_error(&composed.rotation, &direct.rotation) <= 0.02);
}

#[test]
fn perturbation_scale_matches_one_degree() {
    let m = ScanPairMeasurement {
        i: 0,
        j: 1,
        relative: Pose::IDENTITY,
        rms: 0.0,
        inlier_fraction: 1.0,
        accepted: true,
        iterations: 0,
    };
    let noise = NoiseLevel::from_degrees(1.0, 0.001);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let draws = 1000;
    let mut sq = 0.0;
    let mut tsq = 0.0;
    for _ in 0..draws {
        let p = perturb_measurement(&m, noise, &mut rng);
        // d_R is twice the rotation angle
        sq += (rot_error(&p.relative.rotation, &Quaternion::ONE) / 2.0).powi(2);
        tsq += p.relative.translation.norm_squared();
    }
    let rms_angle = (sq / draws as f64).sqrt();
    assert!((rms_angle - 1f64.to_radians()).abs() < 0.1 * 1f64.to_radians(), "{rms_angle}");
    let rms_t = (tsq / (3 * draws) as f64).sqrt();
    assert!((rms_t - 0.001).abs() < 1e-4, "{rms_t}");
}

#[test]
fn merge_identity_and_round_trip() {
    let (_, scans) = fixture(2, 300, 5);
    let poses = vec![Pose::IDENTITY; 2];
    let (points, colors) = merge(&scans, &poses).unwrap();
    let concat: Vec<Vec3> = scans.iter().flat_map(|s| s.points.clone()).collect();
    assert_eq!(points, concat);
    assert_ne!(colors[0], colors[300]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("merged.ply");
    merge_and_export(&scans, &poses, &path).unwrap();
    let back = read_ply(&path).unwrap();
    assert_eq!(back.len(), 600);
    assert_eq!(back.points, concat);
    assert!(merge(&scans, &poses[..1]).is_err());
}

#[test]
fn merged_reconstruction_matches_surface() {
    let (truth, scans) = fixture(4, 5000, 6);
    let r = register(&scans, &GraphParams::default(), &SolverConfig::default()).unwrap();
    // Bring the estimate into the ground-truth frame before comparing clouds.
    let est: Vec<Pose> = r.poses.iter().map(Pose::inverse).collect();
    let gt: Vec<Pose> = truth.iter().map(Pose::inverse).collect();
    let z = gauge_align(&est, &gt).unwrap();
    let aligned: Vec<Pose> = r.poses.iter().map(|w| w.compose(&z)).collect();
    let (points, _) = merge(&scans, &aligned).unwrap();
    let reference = sample_surface(20000, &mut ChaCha8Rng::seed_from_u64(99));
    let index = SpatialIndex::new(&reference);
    let mean = points.iter().map(|p| index.nearest(p).unwrap().1.sqrt()).sum::<f64>() / points.len() as f64;
    assert!(mean <= 3.0 * r.graph.voxel, "mean nn distance {mean}");
}

#[test]
fn registration_is_deterministic() {
    let (_, scans) = fixture(3, 800, 7);
    let params = GraphParams { perturbation: Some(NoiseLevel::from_degrees(1.0, 0.001)), seed: 11, ..GraphParams::default() };
    let a = register(&scans, &params, &SolverConfig::default()).unwrap();
    let b = register(&scans, &params, &SolverConfig::default()).unwrap();
    assert_eq!(a.poses, b.poses);
    assert_eq!(a.graph.measurements, b.graph.measurements);
}

#[test]
fn parse_rejects_garbage() {
    assert!(matches!(parse_ply(b"not a ply"), Err(Error::MalformedHeader(_))));
}

#[test]
fn five_scan_runtime() {
    let (truth, scans) = fixture(5, 10_000, 8);
    let t = Instant::now();
    let r = register(&scans, &GraphParams::default(), &SolverConfig::default()).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let (er, et) = pose_errors(&r.poses, &truth);
    println!("five scans: error_r {er:.2e} error_t {et:.2e} voxel {:.3} time {elapsed:.2}s", r.graph.voxel);
    assert!(et <= 2.0 * r.graph.voxel && er <= 0.02);
}
