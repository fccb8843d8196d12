//! `synth` and `trace`: synthetic experiments over a grid of cells.

use std::path::PathBuf;
use std::time::Instant;

use dqsync::metrics::{evaluate, trimmed_stats};
use dqsync::sync::{dqgpm_observed, spectral_init_with, SyncProblem};
use dqsync::synthgen::{generate, NoiseLevel, SynthInstance, TrialStreams};
use dqsync::{dq_to_pose, DQVector, Pose};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::manifest::{NoiseSpec, Resolved};
use crate::output::{Header, Table};
use crate::CliError;

const SYNTH_COLUMNS: [&str; 15] = [
    "p",
    "sigma_t",
    "sigma_r_deg",
    "n",
    "trials",
    "error_r",
    "std_r",
    "error_t",
    "std_t",
    "error_r_trimmed",
    "std_r_trimmed",
    "error_t_trimmed",
    "std_t_trimmed",
    "iters",
    "degenerate_entries",
];

const SYNTH_TIMING_COLUMNS: [&str; 7] = ["p", "sigma_t", "sigma_r_deg", "trials", "init_s", "refine_s", "wall_s"];

const TRACE_COLUMNS: [&str; 5] = ["iter", "d_st", "d_I", "error_r", "error_t"];

const TRACE_TIMING_COLUMNS: [&str; 7] = ["cell", "p", "sigma_t", "sigma_r_deg", "trial", "init_s", "refine_s"];

struct TrialOutcome {
    error_r: f64,
    error_t: f64,
    iters: usize,
    degenerate: usize,
    init_s: f64,
    refine_s: f64,
}

fn poses(x: &DQVector) -> Result<Vec<Pose>, CliError> {
    Ok(x.iter().map(dq_to_pose).collect::<dqsync::Result<Vec<_>>>()?)
}

fn instance(cfg: &Resolved, p: f64, noise: NoiseSpec, trial: u32) -> Result<(SynthInstance, TrialStreams), CliError> {
    let streams = TrialStreams::new(cfg.seed, trial);
    let inst = generate(cfg.synth.n, p, NoiseLevel::from_degrees(noise.sigma_r_deg, noise.sigma_t), &streams);
    if !cfg.synth.allow_disconnected && !inst.is_connected() {
        return Err(CliError::Solver(format!(
            "cell p={p} sigma_t={} sigma_r_deg={}: trial {trial} has a disconnected measurement graph \
             (set synth.allow_disconnected to solve it anyway)",
            noise.sigma_t, noise.sigma_r_deg
        )));
    }
    Ok((inst, streams))
}

fn run_trial(cfg: &Resolved, p: f64, noise: NoiseSpec, trial: u32) -> Result<TrialOutcome, CliError> {
    let (inst, streams) = instance(cfg, p, noise, trial)?;
    let problem = SyncProblem::new(inst.c.clone());
    let est = dqsync::solve(&problem, &cfg.solver.config(streams.solver_seed()), None)?;
    let report = evaluate(&poses(&est.poses)?, &poses(&inst.xhat)?)?;
    Ok(TrialOutcome {
        error_r: report.error_r,
        error_t: report.error_t,
        iters: est.iters,
        degenerate: est.degenerate_entries,
        init_s: est.elapsed_init,
        refine_s: est.elapsed_refine,
    })
}

fn stats(values: &[f64], trim: f64) -> (f64, f64) {
    trimmed_stats(values, trim).unwrap_or((f64::NAN, f64::NAN))
}

/// Runs every cell, rewriting the result files after each one so that a
/// failure leaves the completed cells on disk.
pub fn cmd_synth(cfg: &Resolved, header: &Header, pool: &ThreadPool) -> Result<Vec<PathBuf>, CliError> {
    let mut table = Table::new(&SYNTH_COLUMNS);
    let mut timing = Table::new(&SYNTH_TIMING_COLUMNS);
    let trim = cfg.synth.trim;
    let mut written = Vec::new();
    for (p, noise) in cfg.synth.cells() {
        let start = Instant::now();
        let outcomes: Vec<Result<TrialOutcome, CliError>> =
            pool.install(|| (0..cfg.trials as u32).into_par_iter().map(|t| run_trial(cfg, p, noise, t)).collect());
        let wall = start.elapsed().as_secs_f64();
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
        let er: Vec<f64> = outcomes.iter().map(|o| o.error_r).collect();
        let et: Vec<f64> = outcomes.iter().map(|o| o.error_t).collect();
        let (mr, sr) = stats(&er, 0.0);
        let (mt, st) = stats(&et, 0.0);
        let (tr, tsr) = stats(&er, trim);
        let (tt, tst) = stats(&et, trim);
        let k = outcomes.len() as f64;
        let iters = outcomes.iter().map(|o| o.iters as f64).sum::<f64>() / k;
        let degenerate: usize = outcomes.iter().map(|o| o.degenerate).sum();
        table.push(vec![
            p.into(),
            noise.sigma_t.into(),
            noise.sigma_r_deg.into(),
            cfg.synth.n.into(),
            cfg.trials.into(),
            mr.into(),
            sr.into(),
            mt.into(),
            st.into(),
            tr.into(),
            tsr.into(),
            tt.into(),
            tst.into(),
            iters.into(),
            degenerate.into(),
        ]);
        timing.push(vec![
            p.into(),
            noise.sigma_t.into(),
            noise.sigma_r_deg.into(),
            cfg.trials.into(),
            (outcomes.iter().map(|o| o.init_s).sum::<f64>() / k).into(),
            (outcomes.iter().map(|o| o.refine_s).sum::<f64>() / k).into(),
            wall.into(),
        ]);
        written = vec![
            table.write(&cfg.out, "synth", header, cfg.format)?,
            timing.write(&cfg.out, "synth_timing", header, cfg.format)?,
        ];
    }
    Ok(written)
}

struct TraceOutcome {
    table: Table,
    init_s: f64,
    refine_s: f64,
}

fn run_trace(cfg: &Resolved, p: f64, noise: NoiseSpec, trial: u32) -> Result<TraceOutcome, CliError> {
    let (inst, streams) = instance(cfg, p, noise, trial)?;
    let truth = poses(&inst.xhat)?;
    let problem = SyncProblem::new(inst.c.clone());
    let config = cfg.solver.config(streams.solver_seed());
    let start = Instant::now();
    let x0 = spectral_init_with(&problem, &config)?;
    let init_s = start.elapsed().as_secs_f64();
    let mut errors: Vec<dqsync::Result<(f64, f64)>> = Vec::new();
    let est = dqgpm_observed(&problem, &x0, config.max_iters, config.change_tol, Some(&inst.xhat), |_, x| {
        let r = x
            .iter()
            .map(dq_to_pose)
            .collect::<dqsync::Result<Vec<_>>>()
            .and_then(|e| evaluate(&e, &truth))
            .map(|r| (r.error_r, r.error_t));
        errors.push(r);
    })?;
    let mut table = Table::new(&TRACE_COLUMNS);
    for (k, (&(d_st, d_du), err)) in est.trace.iter().zip(errors).enumerate() {
        let (er, et) = err?;
        table.push(vec![k.into(), d_st.into(), d_du.into(), er.into(), et.into()]);
    }
    Ok(TraceOutcome { table, init_s, refine_s: est.elapsed_refine })
}

/// One trace file per (cell, trial), named `trace_c<cell>_t<trial>`.
pub fn cmd_trace(cfg: &Resolved, header: &Header, pool: &ThreadPool) -> Result<Vec<PathBuf>, CliError> {
    let mut timing = Table::new(&TRACE_TIMING_COLUMNS);
    let mut written = Vec::new();
    for (ci, (p, noise)) in cfg.synth.cells().into_iter().enumerate() {
        let outcomes: Vec<Result<TraceOutcome, CliError>> =
            pool.install(|| (0..cfg.trials as u32).into_par_iter().map(|t| run_trace(cfg, p, noise, t)).collect());
        for (t, o) in outcomes.into_iter().enumerate() {
            let o = o?;
            let h = header
                .with("cell", ci)
                .with("p", p)
                .with("sigma_t", noise.sigma_t)
                .with("sigma_r_deg", noise.sigma_r_deg)
                .with("n", cfg.synth.n)
                .with("trial", t);
            written.push(o.table.write(&cfg.out, &format!("trace_c{ci}_t{t}"), &h, cfg.format)?);
            timing.push(vec![
                ci.into(),
                p.into(),
                noise.sigma_t.into(),
                noise.sigma_r_deg.into(),
                t.into(),
                o.init_s.into(),
                o.refine_s.into(),
            ]);
        }
        timing.write(&cfg.out, "trace_timing", header, cfg.format)?;
    }
    Ok(written)
}
