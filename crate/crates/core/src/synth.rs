//! Synthetic ground truth and predictions with known error.
//!
//! Motion is along the camera `+Z` axis; turns are rotations about `Y`, so
//! trajectories lie in the X-Z plane.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::curation::SampleRecord;
use crate::error::{invalid, Result};
use crate::fisher::{FisherParams, MAX_CONCENTRATION};
use crate::pose::{compose_trajectory, RelativePose, Rotation, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Straight,
    /// One full turn over the sequence.
    Circle,
    /// Alternating +90 / -90 degree turns: `+90, -90, +90, -90, 0`, repeated.
    Zigzag,
    /// Gaussian heading changes and step lengths in `[0.5, 1.5] x step`.
    RandomWalk,
}

/// Fixed prediction schedules for the zigzag shape. Both keep the end pose
/// exact while individual steps are wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZigzagSchedule {
    /// Exact turns, step norms scaled by `1.5, 1.5, 1, 0.5, 0.5`.
    ScaleOnly,
    /// Turns `+90, -90, 0, 0, 0` and step norms scaled by `0.5, 2, 0.5, 1, 1`.
    TurnAndScale,
}

const ZIGZAG_TURNS: [f64; 5] = [90.0, -90.0, 90.0, -90.0, 0.0];

impl ZigzagSchedule {
    fn step(self, k: usize) -> (f64, f64) {
        let (turns, scales) = match self {
            ZigzagSchedule::ScaleOnly => (ZIGZAG_TURNS, [1.5, 1.5, 1.0, 0.5, 0.5]),
            ZigzagSchedule::TurnAndScale => ([90.0, -90.0, 0.0, 0.0, 0.0], [0.5, 2.0, 0.5, 1.0, 1.0]),
        };
        (turns[k % 5], scales[k % 5])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub shape: Shape,
    /// Number of absolute poses (relative poses + 1).
    pub frame_count: usize,
    pub step_meters: f64,
    /// Predicted translations are scaled by `1 + scale_noise`.
    pub scale_noise: f64,
    /// Standard deviation, radians, of a per-frame random rotation error.
    pub rotation_jitter: f64,
    /// `Psi = concentration * R_gt` for every synthesized record.
    pub concentration: f64,
    pub seed: u64,
    /// Replaces `scale_noise` / `rotation_jitter` for [`Shape::Zigzag`].
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zigzag_schedule: Option<ZigzagSchedule>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            shape: Shape::Straight,
            frame_count: 101,
            step_meters: 1.0,
            scale_noise: 0.0,
            rotation_jitter: 0.0,
            concentration: 50.0,
            seed: 0,
            zigzag_schedule: None,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frame_count < 2 {
            return Err(invalid("frame_count must be at least 2"));
        }
        if !(self.step_meters.is_finite() && self.step_meters > 0.0) {
            return Err(invalid("step_meters must be positive"));
        }
        if !(self.scale_noise.is_finite() && self.scale_noise > -1.0) {
            return Err(invalid("scale_noise must be greater than -1"));
        }
        if !(self.rotation_jitter.is_finite() && self.rotation_jitter >= 0.0) {
            return Err(invalid("rotation_jitter must be non-negative"));
        }
        if !(self.concentration.is_finite() && (0.0..=MAX_CONCENTRATION).contains(&self.concentration)) {
            return Err(invalid(format!("concentration must lie in [0, {MAX_CONCENTRATION}]")));
        }
        if self.zigzag_schedule.is_some() && self.shape != Shape::Zigzag {
            return Err(invalid("a zigzag schedule requires the zigzag shape"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub gt_rels: Vec<RelativePose>,
    pub gt: Trajectory,
    pub pred_rels: Vec<RelativePose>,
    /// Prediction records with ids `000001..`, one per relative pose.
    pub records: Vec<SampleRecord>,
}

fn turn(degrees: f64) -> Rotation {
    Rotation::from_axis_angle(&Vector3::y(), degrees.to_radians()).expect("unit axis")
}

fn forward(meters: f64) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, meters)
}

pub fn synthesize(spec: &SynthSpec) -> Result<Synthesized> {
    spec.validate()?;
    let n = spec.frame_count - 1;
    let step = spec.step_meters;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let heading = Normal::new(0.0, 0.05).expect("valid sigma");
    let gt_rels: Vec<RelativePose> = (0..n)
        .map(|k| match spec.shape {
            Shape::Straight => RelativePose::from_translation(forward(step)),
            Shape::Circle => RelativePose { rotation: turn(360.0 / n as f64), translation: forward(step) },
            Shape::Zigzag => RelativePose { rotation: turn(ZIGZAG_TURNS[k % 5]), translation: forward(step) },
            Shape::RandomWalk => {
                let yaw: f64 = heading.sample(&mut rng);
                let len = step * rng.random_range(0.5..1.5);
                RelativePose { rotation: turn(yaw.to_degrees()), translation: forward(len) }
            }
        })
        .collect();

    let pred_rels: Vec<RelativePose> = match spec.zigzag_schedule {
        Some(schedule) => (0..n)
            .map(|k| {
                let (deg, scale) = schedule.step(k);
                RelativePose { rotation: turn(deg), translation: gt_rels[k].translation * scale }
            })
            .collect(),
        None => {
            let jitter = Normal::new(0.0, spec.rotation_jitter).expect("validated");
            gt_rels
                .iter()
                .map(|g| {
                    let rotation = if spec.rotation_jitter > 0.0 {
                        let axis: [f64; 3] = UnitSphere.sample(&mut rng);
                        let e = Rotation::from_axis_angle(&Vector3::from(axis), jitter.sample(&mut rng))
                            .expect("unit axis");
                        g.rotation.compose(&e)
                    } else {
                        g.rotation
                    };
                    RelativePose { rotation, translation: g.translation * (1.0 + spec.scale_noise) }
                })
                .collect()
        }
    };

    let records = gt_rels
        .iter()
        .zip(&pred_rels)
        .enumerate()
        .map(|(k, (g, p))| {
            let psi = FisherParams::concentrated(&g.rotation, spec.concentration)?;
            Ok(SampleRecord::new(format!("{:06}", k + 1), *p, psi))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Synthesized { gt: compose_trajectory(&gt_rels), gt_rels, pred_rels, records })
}

/// Radius of the circle traced by [`Shape::Circle`] with `n` relative poses.
pub fn circle_radius(step: f64, n: usize) -> f64 {
    step / (2.0 * (PI / n as f64).sin())
}
