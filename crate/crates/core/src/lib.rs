//! Dual-quaternion pose synchronization.
//!
//! Estimates absolute rigid poses from noisy pairwise relative measurements
//! with a spectral initializer followed by a projected power method, and
//! includes a small ICP front-end for multi-scan point cloud registration.

pub mod dq;
pub mod dqlinalg;
pub mod dualnum;
pub mod error;
pub mod metrics;
pub mod quat;
pub mod registration;
pub mod sync;
pub mod synthgen;

pub use dq::{dq_to_pose, pose_to_dq, se3_action, DualQuaternion, Pose, UnitDualQuaternion};
pub use dqlinalg::{hermitian_opnorm, power_iteration, project_udq, DQVector, EigenPair, HermitianDQMatrix};
pub use dualnum::DualNumber;
pub use error::{Error, Result};
pub use metrics::{evaluate, gauge_align, ErrorReport};
pub use quat::{Quaternion, Vec3};
pub use sync::{dqgpm, solve, spectral_init, SolverConfig, SyncEstimate, SyncProblem};
pub use synthgen::{generate, NoiseLevel, SynthConfig, SynthInstance, TrialStreams};
