//! Run manifest schema and flag/manifest/default resolution.

use std::path::{Path, PathBuf};

use dqsync::registration::Pairing;
use dqsync::{Pose, Quaternion, SolverConfig, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Top-level manifest. Every field is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub parallel: Option<usize>,
    pub trials: Option<usize>,
    pub synth: Option<SynthSpec>,
    pub solver: Option<SolverSpec>,
    pub register: Option<RegisterSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma_t: f64,
    pub sigma_r_deg: f64,
}

/// Grid of synthetic cells: every `p` crossed with every noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n: usize,
    pub p: Vec<f64>,
    pub noise: Vec<NoiseSpec>,
    pub trim: f64,
    pub allow_disconnected: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 100,
            p: vec![0.3],
            noise: vec![NoiseSpec { sigma_t: 0.05, sigma_r_deg: 5.0 }],
            trim: dqsync::metrics::DEFAULT_TRIM,
            allow_disconnected: false,
        }
    }
}

impl SynthSpec {
    pub fn cells(&self) -> Vec<(f64, NoiseSpec)> {
        self.p.iter().flat_map(|&p| self.noise.iter().map(move |&s| (p, s))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub residual_tol: f64,
    pub power_max_iters: usize,
    pub max_iters: usize,
    pub change_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { residual_tol: d.residual_tol, power_max_iters: d.power_max_iters, max_iters: d.max_iters, change_tol: d.change_tol }
    }
}

impl SolverSpec {
    pub fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            residual_tol: self.residual_tol,
            power_max_iters: self.power_max_iters,
            max_iters: self.max_iters,
            change_tol: self.change_tol,
            seed,
        }
    }
}

/// Rotation as `[w, x, y, z]`, translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl PoseSpec {
    pub fn pose(&self) -> Result<Pose, CliError> {
        let q = Quaternion::from_array(self.rotation);
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(CliError::Config(format!("rotation {:?} is not a unit quaternion", self.rotation)));
        }
        Ok(Pose::new(q.normalized().expect("nonzero"), Vec3::from(self.translation)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInit {
    pub i: usize,
    pub j: usize,
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegisterSpec {
    /// PLY files; relative paths are resolved against the manifest's directory.
    pub scans: Vec<PathBuf>,
    pub pairing: Pairing,
    pub voxel: Option<f64>,
    pub accept_rms: Option<f64>,
    pub accept_inlier: f64,
    pub inlier_dist: Option<f64>,
    pub icp_max_iters: usize,
    pub icp_rms_tol: f64,
    pub perturbation: NoiseSpec,
    /// Initial relative poses (scan `j` into scan `i`) for selected pairs.
    pub init: Vec<PairInit>,
    /// Scan-to-common-frame poses, one per scan.
    pub ground_truth: Option<Vec<PoseSpec>>,
    pub merged: bool,
}

impl Default for RegisterSpec {
    fn default() -> Self {
        Self {
            scans: Vec::new(),
            pairing: Pairing::AllPairs,
            voxel: None,
            accept_rms: None,
            accept_inlier: 0.3,
            inlier_dist: None,
            icp_max_iters: dqsync::registration::icp::DEFAULT_ICP_MAX_ITERS,
            icp_rms_tol: dqsync::registration::icp::DEFAULT_RMS_TOL,
            perturbation: NoiseSpec { sigma_t: 0.001, sigma_r_deg: 1.0 },
            init: Vec::new(),
            ground_truth: None,
            merged: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Synth,
    Trace,
    Register,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Trace => "trace",
            Command::Register => "register",
        }
    }

    fn default_trials(self) -> usize {
        match self {
            Command::Synth => 20,
            Command::Trace | Command::Register => 1,
        }
    }
}

/// Command-line overrides; `None` defers to the manifest.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub parallel: Option<usize>,
    pub trials: Option<usize>,
}

/// Fully resolved run configuration. Its canonical JSON, minus the output
/// directory and worker count, is what the manifest hash covers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub seed: u64,
    pub format: OutputFormat,
    pub trials: usize,
    pub synth: SynthSpec,
    pub solver: SolverSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub register: Option<RegisterSpec>,
    /// SHA-256 of every scan file, in manifest order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scan_sha256: Vec<String>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub parallel: usize,
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid manifest {}: {e}", path.display())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Resolved {
    /// Applies `flag > manifest > default`, validates, and resolves scan paths.
    pub fn new(command: Command, manifest: RunManifest, manifest_dir: Option<&Path>, flags: Overrides) -> Result<Self, CliError> {
        let parallel = flags
            .parallel
            .or(manifest.parallel)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let mut r = Resolved {
            command,
            seed: flags.seed.or(manifest.seed).unwrap_or(0),
            format: flags.format.or(manifest.format).unwrap_or_default(),
            trials: flags.trials.or(manifest.trials).unwrap_or(command.default_trials()),
            synth: manifest.synth.unwrap_or_default(),
            solver: manifest.solver.unwrap_or_default(),
            register: manifest.register,
            scan_sha256: Vec::new(),
            out: flags.out.or(manifest.out).unwrap_or_else(|| PathBuf::from("dqsync-out")),
            parallel,
        };
        if let (Some(reg), Some(dir)) = (r.register.as_mut(), manifest_dir) {
            for s in &mut reg.scans {
                if s.is_relative() {
                    *s = dir.join(&*s);
                }
            }
        }
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.parallel == 0 {
            return bad("parallel must be at least 1".into());
        }
        if self.trials > u32::MAX as usize {
            return bad("too many trials".into());
        }
        let s = &self.solver;
        if !(s.residual_tol > 0.0) || !(s.change_tol >= 0.0) || s.power_max_iters == 0 {
            return bad("solver tolerances must be positive and power_max_iters at least 1".into());
        }
        match self.command {
            Command::Synth | Command::Trace => {
                let y = &self.synth;
                if y.n < 2 {
                    return bad(format!("synth.n must be at least 2, got {}", y.n));
                }
                if (y.n * y.n) as u64 >= 0xFFFF_FFFF {
                    return bad(format!("synth.n = {} overflows the per-edge random stream layout", y.n));
                }
                if y.p.is_empty() || y.noise.is_empty() {
                    return bad("synth.p and synth.noise must be nonempty".into());
                }
                if let Some(p) = y.p.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
                    return bad(format!("synth.p entries must lie in (0, 1], got {p}"));
                }
                if y.noise.iter().any(|s| !(s.sigma_t >= 0.0 && s.sigma_r_deg >= 0.0)) {
                    return bad("noise scales must be nonnegative".into());
                }
                if !(0.0..0.5).contains(&y.trim) {
                    return bad(format!("synth.trim must lie in [0, 0.5), got {}", y.trim));
                }
            }
            Command::Register => {
                let Some(reg) = &self.register else {
                    return bad("the register command needs a 'register' section in the manifest".into());
                };
                if reg.scans.len() < 2 {
                    return bad("register.scans must list at least two files".into());
                }
                let n = reg.scans.len();
                if let Some(gt) = &reg.ground_truth {
                    if gt.len() != n {
                        return bad(format!("register.ground_truth has {} poses for {n} scans", gt.len()));
                    }
                    for p in gt {
                        p.pose()?;
                    }
                }
                for e in &reg.init {
                    if !(e.i < e.j && e.j < n) {
                        return bad(format!("register.init pair ({}, {}) needs i < j < {n}", e.i, e.j));
                    }
                    PoseSpec { rotation: e.rotation, translation: e.translation }.pose()?;
                }
                if !(reg.accept_inlier >= 0.0 && reg.accept_inlier <= 1.0) {
                    return bad("register.accept_inlier must lie in [0, 1]".into());
                }
                if reg.voxel.is_some_and(|v| !(v > 0.0)) {
                    return bad("register.voxel must be positive".into());
                }
                let p = reg.perturbation;
                if !(p.sigma_t >= 0.0 && p.sigma_r_deg >= 0.0) {
                    return bad("perturbation scales must be nonnegative".into());
                }
            }
        }
        Ok(())
    }

    /// Records the digest of each scan file so the manifest hash pins the inputs.
    pub fn attach_scan_digests(&mut self, files: &[Vec<u8>]) {
        self.scan_sha256 = files.iter().map(|b| sha256_hex(b)).collect();
    }

    /// SHA-256 of the canonical JSON of this configuration.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("serializable"))
    }
}
