//! Evaluation, uncertainty scoring and dataset curation for monocular visual
//! odometry models that predict metric-scale relative poses.
//!
//! The crate is organised by concern:
//!
//! - [`pose`]: SO(3)/SE(3) values, Z-Y-X Euler angles, trajectory composition.
//! - [`metrics`]: subsequence drift (`t_rel`, `r_rel`) and two-frame scale error.
//! - [`fisher`]: the matrix Fisher distribution on SO(3) (normalizer, entropy, NLL).
//! - [`losses`]: loss kernels for pose regression, segmentation, audio, dense fields.
//! - [`io`]: pose / prediction / manifest text formats.
//! - [`curation`]: entropy filtering, dataset mixing, per-frame scale alignment.
//! - [`synth`]: synthetic trajectories and predictions for end-to-end checks.
//!
//! All operations are pure functions over immutable values.

pub mod curation;
pub mod error;
pub mod fisher;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod pose;
mod special;
pub mod synth;

pub use error::{Error, Result};
pub use fisher::{Expectation, FisherParams, ProperSvd};
pub use metrics::{EvalConfig, EvalReport};
pub use pose::{EulerAngles, Pose, RelativePose, Rotation, Trajectory};

/// Version string recorded in manifests and reports.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
