//! Trajectory drift metrics and the two-frame scale error.
//!
//! Drift is measured on every subsequence that starts at a (strided) frame
//! and ends at the first frame whose *ground-truth* path length from the
//! start reaches one of the configured lengths. For a subsequence of target
//! length `l` with error pose `E = pred_rel^-1 * gt_rel`:
//!
//! ```text
//! t_rel = |t_E| * 100 / l                               [%]
//! r_rel = acos(clamp((tr R_E - 1) / 2)) * 180/pi * 100/l [deg / 100 m]
//! ```
//!
//! Both are averaged over all scored subsequences. The scale error compares
//! translation norms of each consecutive frame pair:
//!
//! ```text
//! se = 1 - min(|t_pred| / max(|t_gt|, eps), |t_gt| / max(|t_pred|, eps))
//! ```
//!
//! with `se = 0` when both norms are below `eps` (a stationary frame that is
//! predicted stationary is not an error).

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pose::{compose_trajectory, RelativePose, Trajectory};

/// Default subsequence lengths in meters.
pub const DEFAULT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

/// Default `eps` of the scale error, meters.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Subsequence lengths in meters, strictly increasing.
    pub lengths: Vec<f64>,
    /// Every `start_stride`-th frame starts a subsequence.
    pub start_stride: usize,
    pub epsilon: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { lengths: DEFAULT_LENGTHS.to_vec(), start_stride: 1, epsilon: DEFAULT_EPSILON }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(invalid("at least one subsequence length is required"));
        }
        if self.lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid("subsequence lengths must be positive"));
        }
        if self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("subsequence lengths must be strictly increasing"));
        }
        if self.start_stride == 0 {
            return Err(invalid("start stride must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(invalid("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Drift averaged over the subsequences of one target length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBreakdown {
    pub length: f64,
    pub count: usize,
    pub t_rel: Option<f64>,
    pub r_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Percent; absent when no subsequence could be scored.
    pub t_rel: Option<f64>,
    /// Degrees per 100 m; absent when no subsequence could be scored.
    pub r_rel: Option<f64>,
    /// Mean two-frame scale error in `[0, 1]`.
    pub se: f64,
    pub per_length: Vec<LengthBreakdown>,
    pub subsequence_count: usize,
    pub frame_count: usize,
    /// Number of sequences averaged into this report.
    pub sequence_count: usize,
    pub config: EvalConfig,
}

/// Smallest `j > start` with `arclen[j] - arclen[start] >= length`.
pub fn subsequence_end(gt: &Trajectory, start: usize, length: f64) -> Option<usize> {
    let arclen = gt.arclen();
    if start >= arclen.len() {
        return None;
    }
    let base = arclen[start];
    // `x - base` is monotone in `x`, so the predicate is partitioned.
    let tail = &arclen[start + 1..];
    let k = tail.partition_point(|&a| a - base < length);
    (k < tail.len()).then_some(start + 1 + k)
}

/// Geodesic angle of a (near-)rotation matrix, radians, as
/// `atan2(sin, cos)` from the skew part and the trace. Equal to the usual
/// `acos((tr - 1) / 2)` but without its loss of precision near 0 and pi, and
/// never NaN.
pub fn rotation_error_angle(m: &Matrix3<f64>) -> f64 {
    let skew = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    (skew.norm() / 2.0).atan2((m.trace() - 1.0) / 2.0)
}

/// One scored subsequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsequenceError {
    pub start: usize,
    pub end: usize,
    pub length_index: usize,
    /// Percent.
    pub t_err: f64,
    /// Degrees per 100 m.
    pub r_err: f64,
}

fn check_pair(gt: &Trajectory, pred: &Trajectory) -> Result<()> {
    if gt.len() != pred.len() {
        return Err(invalid(format!(
            "ground truth has {} poses, prediction has {}",
            gt.len(),
            pred.len()
        )));
    }
    if gt.len() < 2 {
        return Err(invalid("trajectories need at least two poses"));
    }
    Ok(())
}

/// All scored subsequences, ordered by start frame then length.
pub fn subsequence_errors(gt: &Trajectory, pred: &Trajectory, cfg: &EvalConfig) -> Result<Vec<SubsequenceError>> {
    cfg.validate()?;
    check_pair(gt, pred)?;
    let per_start: Vec<Vec<SubsequenceError>> = (0..gt.len())
        .into_par_iter()
        .step_by(cfg.start_stride)
        .map(|start| {
            let mut out = Vec::new();
            for (length_index, &length) in cfg.lengths.iter().enumerate() {
                let Some(end) = subsequence_end(gt, start, length) else {
                    // Lengths increase, so longer ones cannot fit either.
                    break;
                };
                let g = gt.relative_between(start, end).expect("indices in range");
                let p = pred.relative_between(start, end).expect("indices in range");
                let err = p.inverse().compose(&g);
                let scale = 100.0 / length;
                out.push(SubsequenceError {
                    start,
                    end,
                    length_index,
                    t_err: err.translation.norm() * scale,
                    r_err: rotation_error_angle(err.rotation.matrix()).to_degrees() * scale,
                });
            }
            out
        })
        .collect();
    Ok(per_start.into_iter().flatten().collect())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Averaged translational drift, percent. `None` when no subsequence fits.
pub fn t_rel_error(gt: &Trajectory, pred: &Trajectory, cfg: &EvalConfig) -> Result<Option<f64>> {
    Ok(mean(subsequence_errors(gt, pred, cfg)?.iter().map(|e| e.t_err)))
}

/// Averaged rotational drift, degrees per 100 m. `None` when no subsequence fits.
pub fn r_rel_error(gt: &Trajectory, pred: &Trajectory, cfg: &EvalConfig) -> Result<Option<f64>> {
    Ok(mean(subsequence_errors(gt, pred, cfg)?.iter().map(|e| e.r_err)))
}

/// Two-frame scale error in `[0, 1]`; symmetric in its arguments.
pub fn scale_error(t_gt: &Vector3<f64>, t_pred: &Vector3<f64>, epsilon: f64) -> f64 {
    let n_gt = t_gt.norm();
    let n_pred = t_pred.norm();
    if n_gt < epsilon && n_pred < epsilon {
        return 0.0;
    }
    let ratio = (n_pred / n_gt.max(epsilon)).min(n_gt / n_pred.max(epsilon));
    (1.0 - ratio).clamp(0.0, 1.0)
}

/// Mean of [`scale_error`] over aligned frame pairs.
pub fn sequence_scale_error(gt_rels: &[RelativePose], pred_rels: &[RelativePose], epsilon: f64) -> Result<f64> {
    if gt_rels.len() != pred_rels.len() {
        return Err(invalid(format!(
            "{} ground-truth relative poses vs {} predicted",
            gt_rels.len(),
            pred_rels.len()
        )));
    }
    if gt_rels.is_empty() {
        return Err(invalid("scale error needs at least one frame pair"));
    }
    let sum: f64 = gt_rels
        .iter()
        .zip(pred_rels)
        .map(|(g, p)| scale_error(&g.translation, &p.translation, epsilon))
        .sum();
    Ok(sum / gt_rels.len() as f64)
}

/// Scores a prediction given as relative poses against ground-truth relatives.
pub fn evaluate_sequence(gt_rels: &[RelativePose], pred_rels: &[RelativePose], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let se = sequence_scale_error(gt_rels, pred_rels, cfg.epsilon)?;
    let gt = compose_trajectory(gt_rels);
    let pred = compose_trajectory(pred_rels);
    report_from(&gt, &pred, se, cfg)
}

/// Scores absolute trajectories (the scale error uses consecutive relatives).
pub fn evaluate_trajectories(gt: &Trajectory, pred: &Trajectory, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    check_pair(gt, pred)?;
    let se = sequence_scale_error(&gt.relatives(), &pred.relatives(), cfg.epsilon)?;
    report_from(gt, pred, se, cfg)
}

fn report_from(gt: &Trajectory, pred: &Trajectory, se: f64, cfg: &EvalConfig) -> Result<EvalReport> {
    let errors = subsequence_errors(gt, pred, cfg)?;
    let per_length = cfg
        .lengths
        .iter()
        .enumerate()
        .map(|(i, &length)| {
            let of_len = || errors.iter().filter(move |e| e.length_index == i);
            LengthBreakdown {
                length,
                count: of_len().count(),
                t_rel: mean(of_len().map(|e| e.t_err)),
                r_rel: mean(of_len().map(|e| e.r_err)),
            }
        })
        .collect();
    Ok(EvalReport {
        t_rel: mean(errors.iter().map(|e| e.t_err)),
        r_rel: mean(errors.iter().map(|e| e.r_err)),
        se,
        per_length,
        subsequence_count: errors.len(),
        frame_count: gt.len(),
        sequence_count: 1,
        config: cfg.clone(),
    })
}

/// Unweighted mean over sequences (each scene counts once regardless of its
/// length). Absent per-sequence drift values are skipped.
pub fn aggregate_reports(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports.first().ok_or_else(|| invalid("no reports to aggregate"))?;
    if reports.iter().any(|r| r.config != first.config) {
        return Err(invalid("reports were computed with different configurations"));
    }
    let per_length = first
        .config
        .lengths
        .iter()
        .enumerate()
        .map(|(i, &length)| LengthBreakdown {
            length,
            count: reports.iter().map(|r| r.per_length[i].count).sum(),
            t_rel: mean(reports.iter().filter_map(|r| r.per_length[i].t_rel)),
            r_rel: mean(reports.iter().filter_map(|r| r.per_length[i].r_rel)),
        })
        .collect();
    Ok(EvalReport {
        t_rel: mean(reports.iter().filter_map(|r| r.t_rel)),
        r_rel: mean(reports.iter().filter_map(|r| r.r_rel)),
        se: mean(reports.iter().map(|r| r.se)).expect("non-empty"),
        per_length,
        subsequence_count: reports.iter().map(|r| r.subsequence_count).sum(),
        frame_count: reports.iter().map(|r| r.frame_count).sum(),
        sequence_count: reports.iter().map(|r| r.sequence_count).sum(),
        config: first.config.clone(),
    })
}
