//! `register`: multi-scan registration from PLY files.

use std::collections::BTreeMap;
use std::io::BufWriter;
use std::path::PathBuf;

use dqsync::metrics::{gauge_align, per_node_errors};
use dqsync::registration::{assemble_graph, measure_pairs, merge, parse_ply, write_ply_ascii, GraphParams, PointCloud};
use dqsync::synthgen::{NoiseLevel, TrialStreams};
use dqsync::{dq_to_pose, Pose};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::manifest::{PoseSpec, RegisterSpec, Resolved};
use crate::output::{write_file, Cell, Header, Table};
use crate::CliError;

const EDGE_COLUMNS: [&str; 8] = ["i", "j", "name_i", "name_j", "rms", "inlier_fraction", "accepted", "iterations"];
const REPORT_COLUMNS: [&str; 8] = ["trial", "scans", "accepted", "pairs", "missing_fraction", "iters", "error_r", "error_t"];
const POSE_COLUMNS: [&str; 9] = ["scan", "name", "qw", "qx", "qy", "qz", "tx", "ty", "tz"];
const TIMING_COLUMNS: [&str; 4] = ["trial", "icp_s", "init_s", "refine_s"];

/// Reads every scan file; the raw bytes are returned for hashing.
pub fn read_scans(spec: &RegisterSpec) -> Result<(Vec<PointCloud>, Vec<Vec<u8>>), CliError> {
    let mut clouds = Vec::new();
    let mut raw = Vec::new();
    for path in &spec.scans {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read scan {}: {e}", path.display())))?;
        let mut cloud = parse_ply(&bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if cloud.is_empty() {
            return Err(CliError::Io(format!("{}: scan has no vertices", path.display())));
        }
        cloud.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        clouds.push(cloud);
        raw.push(bytes);
    }
    Ok((clouds, raw))
}

fn graph_params(spec: &RegisterSpec) -> Result<GraphParams, CliError> {
    let mut init = BTreeMap::new();
    for e in &spec.init {
        init.insert((e.i, e.j), PoseSpec { rotation: e.rotation, translation: e.translation }.pose()?);
    }
    Ok(GraphParams {
        pairing: spec.pairing,
        voxel: spec.voxel,
        accept_rms: spec.accept_rms,
        accept_inlier: spec.accept_inlier,
        inlier_dist: spec.inlier_dist,
        icp_max_iters: spec.icp_max_iters,
        icp_rms_tol: spec.icp_rms_tol,
        init,
        perturbation: None,
        seed: 0,
    })
}

struct TrialResult {
    poses: Vec<Pose>,
    iters: usize,
    init_s: f64,
    refine_s: f64,
    errors: Option<(f64, f64)>,
}

/// Mean errors of `x_k = W_k⁻¹` against the ground-truth inverses after gauge alignment.
fn pose_errors(estimated: &[Pose], truth: &[Pose]) -> Result<(f64, f64), CliError> {
    let est: Vec<Pose> = estimated.iter().map(Pose::inverse).collect();
    let gt: Vec<Pose> = truth.iter().map(Pose::inverse).collect();
    let z = gauge_align(&est, &gt)?;
    let e = per_node_errors(&est, &gt, &z);
    let n = e.len() as f64;
    Ok((e.iter().map(|v| v.0).sum::<f64>() / n, e.iter().map(|v| v.1).sum::<f64>() / n))
}

pub fn cmd_register(
    cfg: &Resolved,
    scans: &[PointCloud],
    header: &Header,
    pool: &ThreadPool,
) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.register.as_ref().expect("validated");
    let params = graph_params(spec)?;
    let truth = match &spec.ground_truth {
        Some(gt) => Some(gt.iter().map(PoseSpec::pose).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    let mut written = Vec::new();

    let pairs = pool.install(|| measure_pairs(scans, &params))?;
    let mut edges = Table::new(&EDGE_COLUMNS);
    for m in &pairs.measurements {
        edges.push(vec![
            m.i.into(),
            m.j.into(),
            Cell::S(scans[m.i].name.clone()),
            Cell::S(scans[m.j].name.clone()),
            m.rms.into(),
            m.inlier_fraction.into(),
            Cell::B(m.accepted),
            m.iterations.into(),
        ]);
    }
    let edge_header = header.with("voxel", pairs.voxel);
    written.push(edges.write(&cfg.out, "edges", &edge_header, cfg.format)?);

    let graph = match assemble_graph(pairs.clone()) {
        Ok(g) => g,
        Err(e @ dqsync::Error::InsufficientGraph { .. }) => {
            let mut msg = format!("{e}\npairwise ICP summary (voxel {:.6}):", pairs.voxel);
            for m in &pairs.measurements {
                msg.push_str(&format!(
                    "\n  {} <- {}: rms {:.6} inliers {:.3} {}",
                    scans[m.i].name,
                    scans[m.j].name,
                    m.rms,
                    m.inlier_fraction,
                    if m.accepted { "accepted" } else { "rejected" }
                ));
            }
            return Err(CliError::Solver(msg));
        }
        Err(e) => return Err(e.into()),
    };

    let noise = NoiseLevel::from_degrees(spec.perturbation.sigma_r_deg, spec.perturbation.sigma_t);
    let results: Vec<Result<TrialResult, CliError>> = pool.install(|| {
        (0..cfg.trials as u32)
            .into_par_iter()
            .map(|t| {
                let problem = graph.perturbed(noise, cfg.seed, t)?;
                let solver = cfg.solver.config(TrialStreams::new(cfg.seed, t).solver_seed());
                let est = dqsync::solve(&problem, &solver, None)?;
                let poses = est
                    .poses
                    .iter()
                    .map(|x| dq_to_pose(x).map(|p| p.inverse()))
                    .collect::<dqsync::Result<Vec<_>>>()?;
                let errors = match &truth {
                    Some(gt) => Some(pose_errors(&poses, gt)?),
                    None => None,
                };
                Ok(TrialResult { poses, iters: est.iters, init_s: est.elapsed_init, refine_s: est.elapsed_refine, errors })
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut report = Table::new(&REPORT_COLUMNS);
    let mut timing = Table::new(&TIMING_COLUMNS);
    for (t, r) in results.iter().enumerate() {
        report.push(vec![
            t.into(),
            scans.len().into(),
            graph.accepted.into(),
            graph.total.into(),
            graph.missing_fraction().into(),
            r.iters.into(),
            r.errors.map(|e| e.0).into(),
            r.errors.map(|e| e.1).into(),
        ]);
        timing.push(vec![t.into(), graph.elapsed_icp.into(), r.init_s.into(), r.refine_s.into()]);
    }
    written.push(report.write(&cfg.out, "register", header, cfg.format)?);
    written.push(timing.write(&cfg.out, "register_timing", header, cfg.format)?);

    let first = &results[0];
    let mut pose_table = Table::new(&POSE_COLUMNS);
    for (k, p) in first.poses.iter().enumerate() {
        let q = p.rotation.to_array();
        let t = p.translation.to_array();
        pose_table.push(vec![
            k.into(),
            Cell::S(scans[k].name.clone()),
            q[0].into(),
            q[1].into(),
            q[2].into(),
            q[3].into(),
            t[0].into(),
            t[1].into(),
            t[2].into(),
        ]);
    }
    written.push(pose_table.write(&cfg.out, "poses", &header.with("trial", 0), cfg.format)?);

    if spec.merged {
        let (points, colors) = merge(scans, &first.poses)?;
        let mut buf = BufWriter::new(Vec::new());
        write_ply_ascii(&mut buf, &points, Some(&colors), &header.with("trial", 0).comment_lines())?;
        let path = cfg.out.join("merged.ply");
        write_file(&path, &buf.into_inner().map_err(|e| CliError::Io(e.to_string()))?)?;
        written.push(path);
    }
    Ok(written)
}
