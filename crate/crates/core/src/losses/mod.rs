//! Loss kernels for the pose-regression objective and its auxiliary tasks.
//!
//! ```text
//! L_total = L_vo + lambda_u * L_unc + L_aux
//! L_vo    = |t - t_hat|^2 + lambda_theta * |theta - theta_hat|^2
//! L_unc   = -log p(R | Psi)
//! L_aux   = lambda_a L_audio + lambda_s L_seg + lambda_f L_flow + lambda_d L_depth
//! ```
//!
//! Losses are plain sums over their elements unless a [`Reduction::Mean`] is
//! requested. Only values and verification gradients are provided; there is
//! no autodiff.

mod grad;
pub mod stft;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fisher::{self, Expectation, FisherParams};
use crate::pose::{euler_from_rotation, EulerAngles, Pose, Rotation};

pub use grad::{grad_check, GradCheckReport};
pub use stft::{stft, AudioClip, Spectrogram, DEFAULT_HOP, DEFAULT_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_theta: f64,
    pub lambda_u: f64,
    pub lambda_a: f64,
    pub lambda_s: f64,
    pub lambda_f: f64,
    pub lambda_d: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_theta: 1.0, lambda_u: 0.1, lambda_a: 0.01, lambda_s: 0.01, lambda_f: 0.01, lambda_d: 0.01 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_theta, self.lambda_u, self.lambda_a, self.lambda_s, self.lambda_f, self.lambda_d];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("loss weights must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

impl Reduction {
    fn apply(self, sum: f64, n: usize) -> f64 {
        match self {
            Reduction::Sum => sum,
            Reduction::Mean => sum / n.max(1) as f64,
        }
    }
}

/// Pose-regression loss. Ground-truth angles come from
/// [`euler_from_rotation`]; angle differences are not wrapped.
pub fn loss_vo(gt: &Pose, pred_translation: &Vector3<f64>, pred_angles: &EulerAngles, lambda_theta: f64) -> f64 {
    let theta = euler_from_rotation(&gt.rotation).angles.to_vector();
    (gt.translation - pred_translation).norm_squared() + lambda_theta * (theta - pred_angles.to_vector()).norm_squared()
}

/// Negative log-likelihood of the ground-truth rotation.
pub fn loss_unc(r_gt: &Rotation, p: &FisherParams) -> Result<f64> {
    fisher::nll(r_gt, p)
}

/// `d nll / d Psi = E[R] - R`.
pub fn nll_gradient(r: &Rotation, p: &FisherParams, method: &Expectation) -> Result<Matrix3<f64>> {
    Ok(fisher::expected_rotation(p, method)? - r.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    Segmentation,
    Depth,
    Flow,
}

/// Dense `width x height x channels` grid, channel-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    role: FieldRole,
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Field {
    /// Segmentation fields must have two channels with values in `[0, 1]`.
    pub fn new(role: FieldRole, width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(invalid(format!(
                "field data has {} values, expected {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("field value".into()));
        }
        if role == FieldRole::Segmentation {
            if channels != 2 {
                return Err(invalid("segmentation fields have exactly 2 channels"));
            }
            if data.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(invalid("segmentation values must lie in [0, 1]"));
            }
        }
        Ok(Self { role, width, height, channels, data })
    }

    pub fn zeros(role: FieldRole, width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::new(role, width, height, channels, vec![0.0; width * height * channels])
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.role, self.width, self.height, self.channels, data)
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.role != other.role {
            return Err(invalid(format!("field roles differ: {:?} vs {:?}", self.role, other.role)));
        }
        if self.shape() != other.shape() {
            return Err(invalid(format!("field shapes differ: {:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }
}

fn dice_parts(target: &Field, pred: &Field) -> Result<(f64, f64)> {
    if target.role != FieldRole::Segmentation {
        return Err(invalid("Dice loss needs segmentation fields"));
    }
    target.check_compatible(pred)?;
    let mut overlap = 0.0;
    let mut mass = 0.0;
    for (t, p) in target.data.iter().zip(&pred.data) {
        overlap += t * p;
        mass += t * t + p * p;
    }
    Ok((overlap, mass))
}

/// `1 - 2 sum(S o S_hat) / (sum S^2 + sum S_hat^2)`; 0 when both masks are empty.
pub fn loss_dice(target: &Field, pred: &Field) -> Result<f64> {
    let (overlap, mass) = dice_parts(target, pred)?;
    if mass == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - 2.0 * overlap / mass)
}

/// Gradient of [`loss_dice`] with respect to every entry of `pred`.
pub fn dice_gradient(target: &Field, pred: &Field) -> Result<Vec<f64>> {
    let (overlap, mass) = dice_parts(target, pred)?;
    if mass == 0.0 {
        return Ok(vec![0.0; pred.data.len()]);
    }
    let m2 = mass * mass;
    Ok(target.data.iter().zip(&pred.data).map(|(t, p)| -2.0 * (t * mass - 2.0 * overlap * p) / m2).collect())
}

/// Squared error between two fields of the same role and shape.
pub fn loss_field_mse(target: &Field, pred: &Field, reduction: Reduction) -> Result<f64> {
    target.check_compatible(pred)?;
    let sum: f64 = target.data.iter().zip(&pred.data).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(reduction.apply(sum, target.data.len()))
}

/// Representation compared by the spectral term of the audio loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralMode {
    /// `| |STFT(a)| - |STFT(b)| |^2`.
    #[default]
    Magnitude,
    /// `| STFT(a) - STFT(b) |^2` on complex coefficients.
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudioLossConfig {
    pub window: usize,
    pub hop: usize,
    pub spectral: SpectralMode,
    pub reduction: Reduction,
}

impl Default for AudioLossConfig {
    fn default() -> Self {
        Self { window: DEFAULT_WINDOW, hop: DEFAULT_HOP, spectral: SpectralMode::Magnitude, reduction: Reduction::Sum }
    }
}

/// Time-domain and spectral parts of the audio loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioLoss {
    pub time: f64,
    pub spectral: f64,
}

impl AudioLoss {
    pub fn total(&self) -> f64 {
        self.time + self.spectral
    }
}

pub fn audio_loss_terms(target: &AudioClip, pred: &AudioClip, cfg: &AudioLossConfig) -> Result<AudioLoss> {
    if target.channels().len() != pred.channels().len() || target.len() != pred.len() {
        return Err(invalid("audio clips differ in shape"));
    }
    if target.sample_rate() != pred.sample_rate() {
        return Err(invalid("audio clips differ in sample rate"));
    }
    let time: f64 = target
        .channels()
        .iter()
        .flatten()
        .zip(pred.channels().iter().flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let sa = stft(target, cfg.window, cfg.hop)?;
    let sb = stft(pred, cfg.window, cfg.hop)?;
    let spectral: f64 = sa
        .coefficients()
        .iter()
        .zip(sb.coefficients())
        .map(|(a, b)| match cfg.spectral {
            SpectralMode::Magnitude => (a.norm() - b.norm()).powi(2),
            SpectralMode::Complex => (a - b).norm_sqr(),
        })
        .sum();
    let n_time = target.channels().len() * target.len();
    Ok(AudioLoss {
        time: cfg.reduction.apply(time, n_time),
        spectral: cfg.reduction.apply(spectral, sa.coefficients().len()),
    })
}

pub fn loss_audio(target: &AudioClip, pred: &AudioClip, cfg: &AudioLossConfig) -> Result<f64> {
    Ok(audio_loss_terms(target, pred, cfg)?.total())
}

/// Per-task auxiliary losses; absent tasks contribute nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxTerms {
    pub audio: Option<f64>,
    pub seg: Option<f64>,
    pub flow: Option<f64>,
    pub depth: Option<f64>,
}

pub fn loss_aux(terms: &AuxTerms, w: &LossWeights) -> f64 {
    w.lambda_a * terms.audio.unwrap_or(0.0)
        + w.lambda_s * terms.seg.unwrap_or(0.0)
        + w.lambda_f * terms.flow.unwrap_or(0.0)
        + w.lambda_d * terms.depth.unwrap_or(0.0)
}

/// Full objective `L_vo + lambda_u L_unc + L_aux`.
pub fn loss_xvo(vo: f64, unc: f64, aux: f64, w: &LossWeights) -> f64 {
    vo + w.lambda_u * unc + aux
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::rotation_from_euler;

    fn seg(data: Vec<f64>) -> Field {
        Field::new(FieldRole::Segmentation, 2, 2, 2, data).unwrap()
    }

    #[test]
    fn vo_loss_cases() {
        let r = rotation_from_euler(&EulerAngles::new(0.1, -0.2, 0.3)).unwrap();
        let gt = Pose::new(r, Vector3::new(1.0, 2.0, 3.0)).unwrap();
        let angles = EulerAngles::new(0.1, -0.2, 0.3);
        assert!(loss_vo(&gt, &gt.translation, &angles, 1.0) < 1e-28);
        let t = gt.translation + Vector3::x();
        assert!((loss_vo(&gt, &t, &angles, 1.0) - 1.0).abs() < 1e-12);
        let off = EulerAngles::new(0.2, -0.2, 0.1);
        let l1 = loss_vo(&gt, &t, &off, 1.0);
        let l2 = loss_vo(&gt, &t, &off, 2.0);
        // 1 + lambda * (0.1^2 + 0.2^2)
        assert!((l1 - (1.0 + 0.05)).abs() < 1e-12);
        assert!((l2 - (1.0 + 2.0 * 0.05)).abs() < 1e-12);
    }

    #[test]
    fn dice_fixtures() {
        let a = seg(vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let b = seg(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let half = seg(vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(loss_dice(&a, &a).unwrap(), 0.0);
        assert_eq!(loss_dice(&a, &b).unwrap(), 1.0);
        assert_eq!(loss_dice(&a, &half).unwrap(), 0.5);
        let empty = seg(vec![0.0; 8]);
        assert_eq!(loss_dice(&empty, &empty).unwrap(), 0.0);
    }

    #[test]
    fn dice_rejects_bad_inputs() {
        assert!(Field::new(FieldRole::Segmentation, 2, 2, 1, vec![0.0; 4]).is_err());
        assert!(Field::new(FieldRole::Segmentation, 1, 1, 2, vec![0.0, 1.5]).is_err());
        let a = seg(vec![0.0; 8]);
        let b = Field::new(FieldRole::Segmentation, 4, 1, 2, vec![0.0; 8]).unwrap();
        assert!(loss_dice(&a, &b).is_err());
        let d = Field::zeros(FieldRole::Depth, 2, 2, 2).unwrap();
        assert!(loss_dice(&d, &d).is_err());
        assert!(loss_field_mse(&a, &d, Reduction::Sum).is_err());
    }

    #[test]
    fn field_mse_cases() {
        let a = Field::zeros(FieldRole::Flow, 3, 2, 2).unwrap();
        assert_eq!(loss_field_mse(&a, &a, Reduction::Sum).unwrap(), 0.0);
        let mut data = vec![0.0; 12];
        data[a.index(2, 1, 1)] = 1.0;
        let b = a.with_data(data).unwrap();
        assert_eq!(loss_field_mse(&a, &b, Reduction::Sum).unwrap(), 1.0);
        assert_eq!(loss_field_mse(&a, &b, Reduction::Mean).unwrap(), 1.0 / 12.0);
    }

    #[test]
    fn aux_and_total_weighting() {
        let w = LossWeights::default();
        assert_eq!(loss_aux(&AuxTerms::default(), &w), 0.0);
        let only_audio = AuxTerms { audio: Some(1.0), ..Default::default() };
        assert_eq!(loss_aux(&only_audio, &w), 0.01);
        assert_eq!(loss_xvo(0.0, 1.0, 0.0, &w), 0.1);
        assert_eq!(loss_xvo(0.0, 0.0, 0.0, &w), 0.0);
        assert!(LossWeights { lambda_s: -1.0, ..w }.validate().is_err());
    }

    #[test]
    fn audio_loss_basic() {
        let l: Vec<f64> = (0..600).map(|i| (i as f64 * 0.05).sin()).collect();
        let r: Vec<f64> = (0..600).map(|i| (i as f64 * 0.11).cos() * 0.5).collect();
        let a = AudioClip::stereo(l, r, 16_000).unwrap();
        let cfg = AudioLossConfig { window: 128, hop: 32, ..Default::default() };
        assert_eq!(loss_audio(&a, &a, &cfg).unwrap(), 0.0);
        let neg = a.map(|x| -x);
        let parts = audio_loss_terms(&a, &neg, &cfg).unwrap();
        let energy: f64 = a.channels().iter().flatten().map(|x| x * x).sum();
        assert!((parts.time - 4.0 * energy).abs() < 1e-9 * energy);
        assert!(parts.spectral < 1e-18);
        let other = AudioClip::stereo(vec![0.0; 600], vec![0.0; 600], 8000).unwrap();
        assert!(loss_audio(&a, &other, &cfg).is_err());
    }
}
