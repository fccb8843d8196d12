//! SE(3) synchronization: spectral initialization followed by the dual
//! quaternion generalized power method (DQGPM).
//!
//! Given a Hermitian measurement matrix `C` with `C_ij ≈ x̂_i x̂_j*`, the
//! solver estimates `x̂ ∈ UDQⁿ` up to a global right factor `x̂ ↦ x̂ z`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dq::{DualQuaternion, UnitDualQuaternion, UDQ_TOL};
use crate::dqlinalg::{
    power_iteration, project_udq, project_udq_counted, DQVector, EigenPair, HermitianDQMatrix,
    DEFAULT_MAX_ITERS, DEFAULT_RESIDUAL_TOL,
};
use crate::dualnum::DualNumber;
use crate::error::{Error, Result};

pub const DEFAULT_GPM_MAX_ITERS: usize = 100;
pub const DEFAULT_CHANGE_TOL: f64 = 1e-8;

/// Direct and closed-form distances disagreeing by more than this are logged.
pub const DISTANCE_CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncProblem {
    pub c: HermitianDQMatrix,
}

impl SyncProblem {
    pub fn new(c: HermitianDQMatrix) -> Self {
        Self { c }
    }

    pub fn n(&self) -> usize {
        self.c.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub residual_tol: f64,
    pub power_max_iters: usize,
    pub max_iters: usize,
    pub change_tol: f64,
    /// Seed for the power-iteration starting vector.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: DEFAULT_RESIDUAL_TOL,
            power_max_iters: DEFAULT_MAX_ITERS,
            max_iters: DEFAULT_GPM_MAX_ITERS,
            change_tol: DEFAULT_CHANGE_TOL,
            seed: 0,
        }
    }
}

/// What the per-iteration trace records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceKind {
    /// `(d_st, d_I)` of the iterate against the supplied ground truth.
    Distance,
    /// Standard and dual parts of `‖x^k − x^{k−1}‖₂`; entry 0 is NaN.
    Change,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncEstimate {
    pub poses: DQVector,
    pub init_poses: DQVector,
    pub iters: usize,
    /// One entry per iterate, `iters + 1` in total.
    pub trace: Vec<(f64, f64)>,
    pub trace_kind: TraceKind,
    pub elapsed_init: f64,
    pub elapsed_refine: f64,
    /// Entries that went through the zero-entry branch of the projection.
    pub degenerate_entries: usize,
    /// Iterates where the closed-form distance disagreed with the direct norm.
    pub distance_mismatches: usize,
}

impl SyncEstimate {
    pub fn elapsed(&self) -> f64 {
        self.elapsed_init + self.elapsed_refine
    }

    pub fn unit_poses(&self) -> Result<Vec<UnitDualQuaternion>> {
        self.poses.to_unit()
    }
}

/// Raw power-iteration eigenpair for `problem`, starting from a seeded Gaussian vector.
///
/// Retries once with a fresh draw if an iterate loses its standard part.
pub fn spectral_eigenpair(problem: &SyncProblem, config: &SolverConfig) -> Result<EigenPair> {
    let n = problem.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let attempt = |rng: &mut ChaCha8Rng| {
        let w0 = DQVector::random_gaussian(n, rng);
        power_iteration(&problem.c, &w0, config.residual_tol, config.power_max_iters)
    };
    match attempt(&mut rng) {
        Err(Error::NonAppreciableNorm(_)) => attempt(&mut rng),
        other => other,
    }
}

/// Rounded spectral estimator `Π(u₁)`; feasible by construction.
pub fn spectral_init(problem: &SyncProblem, seed: u64) -> Result<DQVector> {
    let config = SolverConfig { seed, ..SolverConfig::default() };
    spectral_init_with(problem, &config)
}

pub fn spectral_init_with(problem: &SyncProblem, config: &SolverConfig) -> Result<DQVector> {
    Ok(project_udq(&spectral_eigenpair(problem, config)?.vector))
}

/// Projected power iteration `x^k = Π(C x^{k−1})`.
///
/// Stops after `max_iters` iterations or once the standard part of
/// `‖x^k − x^{k−1}‖₂` falls below `change_tol`. Every iterate is in UDQⁿ.
pub fn dqgpm(
    problem: &SyncProblem,
    x0: &DQVector,
    max_iters: usize,
    change_tol: f64,
    ground_truth: Option<&DQVector>,
) -> Result<SyncEstimate> {
    dqgpm_observed(problem, x0, max_iters, change_tol, ground_truth, |_, _| {})
}

/// [`dqgpm`] calling `observe(k, x^k)` on every iterate, starting with `x^0`.
pub fn dqgpm_observed<F>(
    problem: &SyncProblem,
    x0: &DQVector,
    max_iters: usize,
    change_tol: f64,
    ground_truth: Option<&DQVector>,
    mut observe: F,
) -> Result<SyncEstimate>
where
    F: FnMut(usize, &DQVector),
{
    let n = problem.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if let Some(i) = x0.first_non_unit(UDQ_TOL) {
        return Err(Error::InfeasibleStart(i));
    }
    if let Some(gt) = ground_truth {
        if gt.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: gt.len() });
        }
    }

    let start = Instant::now();
    let mut mismatches = 0;
    let mut record = |x: &DQVector, change: DualNumber| -> (f64, f64) {
        match ground_truth {
            Some(gt) => {
                let d = udq_distance(x, gt);
                if let Some(cf) = distance_closed_form(x, gt) {
                    if !cf.approx_eq(&d, DISTANCE_CROSS_CHECK_TOL) {
                        mismatches += 1;
                    }
                }
                (d.st, d.du)
            }
            None => (change.st, change.du),
        }
    };

    let mut x = x0.clone();
    observe(0, &x);
    let mut trace = vec![record(&x, DualNumber::new(f64::NAN, f64::NAN))];
    let mut degenerate_entries = 0;
    let mut iters = 0;
    while iters < max_iters {
        let y = problem.c.matvec(&x)?;
        let (next, deg) = project_udq_counted(&y);
        degenerate_entries += deg;
        let change = next.sub(&x)?.norm2();
        x = next;
        iters += 1;
        observe(iters, &x);
        trace.push(record(&x, change));
        if change.st < change_tol {
            break;
        }
    }

    Ok(SyncEstimate {
        poses: x,
        init_poses: x0.clone(),
        iters,
        trace,
        trace_kind: if ground_truth.is_some() { TraceKind::Distance } else { TraceKind::Change },
        elapsed_init: 0.0,
        elapsed_refine: start.elapsed().as_secs_f64(),
        degenerate_entries,
        distance_mismatches: mismatches,
    })
}

/// Spectral initialization followed by DQGPM, with per-stage wall-clock timing.
pub fn solve(problem: &SyncProblem, config: &SolverConfig, ground_truth: Option<&DQVector>) -> Result<SyncEstimate> {
    let start = Instant::now();
    let x0 = spectral_init_with(problem, config)?;
    let elapsed_init = start.elapsed().as_secs_f64();
    let mut est = dqgpm(problem, &x0, config.max_iters, config.change_tol, ground_truth)?;
    est.elapsed_init = elapsed_init;
    Ok(est)
}

/// `z ∈ UDQ` minimizing `‖x − x̂ z‖₂`.
///
/// With `x̂* x = a + b ε`, the conjugate `z* = c + d ε` has `c = a*/|a|` and
/// `d a = −im(a* b / |a|)`. Fails when `a = 0`, where every unit `z` ties on
/// the standard part.
pub fn optimal_aligner(x: &DQVector, xhat: &DQVector) -> Result<UnitDualQuaternion> {
    let s = xhat.inner(x)?;
    let (a, b) = (s.st, s.du);
    let na = a.norm();
    if na == 0.0 {
        return Err(Error::DegenerateAlignment);
    }
    let c = a.conj() * (1.0 / na);
    let m = (a.conj() * b).im() * (1.0 / na);
    let d = -(m * a.inverse()?);
    Ok(UnitDualQuaternion::new_unchecked(DualQuaternion::new(c.conj(), d.conj())))
}

/// Gauge-invariant distance `d(x, x̂) = min_z ‖x − x̂ z‖₂`.
///
/// Degenerate alignment falls back to `z = 1`.
pub fn udq_distance(x: &DQVector, xhat: &DQVector) -> DualNumber {
    let z = optimal_aligner(x, xhat).unwrap_or(UnitDualQuaternion::IDENTITY);
    match x.sub(&xhat.mul_right(&z.get())) {
        Ok(r) => r.norm2(),
        Err(_) => DualNumber::new(f64::NAN, f64::NAN),
    }
}

/// `√(2n − 2|x̂* x|)`, valid for feasible `x`; `None` when the radicand has a
/// nonpositive standard part and the dual square root is undefined.
pub fn distance_closed_form(x: &DQVector, xhat: &DQVector) -> Option<DualNumber> {
    let s = xhat.inner(x).ok()?;
    let n = x.len() as f64;
    let radicand = DualNumber::real(2.0 * n) - s.magnitude().scale(2.0);
    if radicand.st <= 0.0 {
        return None;
    }
    radicand.sqrt().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::{pose_to_dq, Pose};
    use crate::quat::{Quaternion, Vec3};

    fn random_udq_vec(n: usize, rng: &mut ChaCha8Rng) -> DQVector {
        project_udq(&DQVector::random_gaussian(n, rng))
    }

    #[test]
    fn aligner_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xhat = random_udq_vec(8, &mut rng);
        let z = optimal_aligner(&xhat, &xhat).unwrap();
        assert!(z.get().approx_eq(&DualQuaternion::ONE, 1e-12));

        let g = pose_to_dq(&Pose::new(
            Quaternion::new(0.2, -0.4, 0.8, 0.4).normalized().unwrap(),
            Vec3::new(0.5, -1.5, 2.0),
        ))
        .unwrap();
        let x = xhat.mul_right(&g.get());
        let z = optimal_aligner(&x, &xhat).unwrap();
        assert!(z.get().approx_eq(&g.get(), 1e-10), "{} vs {}", z.get(), g.get());

        let zero = DQVector::zeros(8);
        assert!(matches!(optimal_aligner(&zero, &xhat), Err(Error::DegenerateAlignment)));
    }

    #[test]
    fn distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xhat = random_udq_vec(6, &mut rng);
        assert!(udq_distance(&xhat, &xhat).approx_eq(&DualNumber::ZERO, 1e-12));
        let g = random_udq_vec(1, &mut rng)[0];
        let d = udq_distance(&xhat.mul_right(&g), &xhat);
        assert!(d.approx_eq(&DualNumber::ZERO, 1e-10), "{d}");
    }

    #[test]
    fn closed_form_matches_direct_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let xhat = random_udq_vec(7, &mut rng);
            let x = random_udq_vec(7, &mut rng);
            let direct = udq_distance(&x, &xhat);
            let cf = distance_closed_form(&x, &xhat).unwrap();
            assert!(direct.approx_eq(&cf, 1e-9), "{direct} vs {cf}");
        }
    }

    #[test]
    fn noiseless_recovery_in_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xhat = random_udq_vec(12, &mut rng);
        let problem = SyncProblem::new(HermitianDQMatrix::outer(&xhat));
        let x0 = spectral_init(&problem, 9).unwrap();
        assert!(udq_distance(&x0, &xhat).st <= 1e-8);
        let est = dqgpm(&problem, &x0, 1, 0.0, Some(&xhat)).unwrap();
        assert_eq!(est.iters, 1);
        assert_eq!(est.trace.len(), 2);
        let d = udq_distance(&est.poses, &xhat);
        assert!(d.st.abs() <= 1e-10 && d.du.abs() <= 1e-10, "{d}");
    }

    #[test]
    fn identity_measurements_still_feasible() {
        let problem = SyncProblem::new(HermitianDQMatrix::identity(5));
        let x0 = spectral_init(&problem, 3).unwrap();
        assert!(x0.is_feasible(1e-12));
    }

    #[test]
    fn dqgpm_rejects_infeasible_start() {
        let problem = SyncProblem::new(HermitianDQMatrix::identity(3));
        let mut x0 = DQVector::ones(3);
        x0[1] = DualQuaternion::ONE.scale(2.0);
        assert!(matches!(dqgpm(&problem, &x0, 5, 1e-8, None), Err(Error::InfeasibleStart(1))));
    }

    #[test]
    fn change_trace_without_ground_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xhat = random_udq_vec(5, &mut rng);
        let problem = SyncProblem::new(HermitianDQMatrix::outer(&xhat));
        let x0 = random_udq_vec(5, &mut rng);
        let est = dqgpm(&problem, &x0, 50, 1e-10, None).unwrap();
        assert_eq!(est.trace_kind, TraceKind::Change);
        assert!(est.trace[0].0.is_nan());
        assert_eq!(est.trace.len(), est.iters + 1);
        assert!(est.trace.last().unwrap().0 < 1e-10);
        assert!(est.poses.is_feasible(1e-9));
    }
}
