//! Rotations, rigid poses and trajectories.
//!
//! # Conventions
//!
//! * Euler angles are intrinsic Z-Y-X: `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
//!   [`EulerAngles`] stores them as the vector `(roll, pitch, yaw)`, so the
//!   middle component is always the rotation about the Y axis.
//! * A relative pose `rel_i` maps coordinates of frame `i` into frame `i - 1`.
//!   Absolute poses map frame `i` into the world frame, which is the first
//!   camera frame: `abs_i = abs_{i-1} * rel_i`, `abs_0 = I`.
//!
//! ```text
//!            [ cy*cp   cy*sp*sr - sy*cr   cy*sp*cr + sy*sr ]
//!   R(r,p,y) [ sy*cp   sy*sp*sr + cy*cr   sy*sp*cr - cy*sr ]
//!            [ -sp     cp*sr              cp*cr            ]
//! ```

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{invalid, Error, Result};

/// Orthonormality / determinant tolerance every [`Rotation`] satisfies.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Deviation up to which [`validate_rotation`] projects onto SO(3) instead of
/// rejecting. Larger drift indicates corrupt data.
pub const LOOSE_ROTATION_TOLERANCE: f64 = 1e-4;

/// `cos(pitch)` below this is treated as gimbal lock.
const GIMBAL_LOCK_COS: f64 = 1e-9;

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates `m` with the default tolerance, projecting small drift away.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        validate_rotation(&m, ROTATION_TOLERANCE).map(|v| v.rotation)
    }

    /// Caller guarantees `m` is a rotation to working precision.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self> {
        let norm = axis.norm();
        if !(norm.is_finite() && norm > 0.0 && angle.is_finite()) {
            return Err(invalid("axis must be finite and non-zero"));
        }
        let k = axis / norm;
        let kx = k.cross_matrix();
        let m = Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos());
        Ok(Self(m))
    }

    /// Rotation from a (not necessarily normalized) quaternion `w + xi + yj + zk`.
    pub(crate) fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Self(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, rhs: &Rotation) -> Self {
        Self(self.0 * rhs.0)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Geodesic angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        crate::metrics::rotation_error_angle(&self.0)
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Measured deviation of `m` from SO(3): the larger of `||m^T m - I||_F` and
/// `|det m - 1|`.
pub fn rotation_deviation(m: &Matrix3<f64>) -> f64 {
    let ortho = (m.transpose() * m - Matrix3::identity()).norm();
    let det = (m.determinant() - 1.0).abs();
    ortho.max(det)
}

/// Nearest rotation in Frobenius norm (orthogonal polar factor with the
/// determinant forced to +1).
pub fn project_to_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let d = (u * v_t).determinant().signum();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t
}

/// Outcome of [`validate_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedRotation {
    pub rotation: Rotation,
    /// Deviation measured on the input matrix.
    pub deviation: f64,
    /// True when the input was replaced by its nearest rotation.
    pub projected: bool,
}

/// Checks that `m` is a rotation.
///
/// * deviation above `max(tol, 1e-4)`: rejected with the measured deviation.
/// * deviation above `tol` (or above the 1e-9 invariant of [`Rotation`]):
///   replaced by the nearest rotation and flagged as projected.
/// * otherwise returned unchanged.
pub fn validate_rotation(m: &Matrix3<f64>, tol: f64) -> Result<ValidatedRotation> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("rotation matrix entry".into()));
    }
    if !(tol >= 0.0) {
        return Err(invalid("tolerance must be non-negative"));
    }
    let deviation = rotation_deviation(m);
    let loose = tol.max(LOOSE_ROTATION_TOLERANCE);
    if deviation > loose {
        return Err(Error::NotARotation { deviation, tolerance: loose });
    }
    if deviation > tol.min(ROTATION_TOLERANCE) {
        let p = project_to_rotation(m);
        // A reflection close to orthonormal cannot reach this branch: its
        // determinant deviation is ~2.
        return Ok(ValidatedRotation { rotation: Rotation(p), deviation, projected: true });
    }
    Ok(ValidatedRotation { rotation: Rotation(*m), deviation, projected: false })
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Intrinsic Z-Y-X Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    /// About X, applied first.
    pub roll: f64,
    /// About Y.
    pub pitch: f64,
    /// About Z, applied last.
    pub yaw: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// `(roll, pitch, yaw)`.
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.roll, self.pitch, self.yaw)
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }

    /// Each component wrapped into `(-pi, pi]`.
    pub fn normalized(&self) -> Self {
        Self::new(normalize_angle(self.roll), normalize_angle(self.pitch), normalize_angle(self.yaw))
    }
}

pub fn rotation_from_euler(angles: &EulerAngles) -> Result<Rotation> {
    if !angles.is_finite() {
        return Err(invalid("Euler angles must be finite"));
    }
    let (sr, cr) = angles.roll.sin_cos();
    let (sp, cp) = angles.pitch.sin_cos();
    let (sy, cy) = angles.yaw.sin_cos();
    Ok(Rotation(Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )))
}

/// Result of [`euler_from_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDecomposition {
    pub angles: EulerAngles,
    /// Pitch at +-pi/2: roll was fixed to 0 and the remaining freedom folded into yaw.
    pub gimbal_locked: bool,
}

pub fn euler_from_rotation(r: &Rotation) -> EulerDecomposition {
    let m = &r.0;
    let cos_pitch = m[(2, 1)].hypot(m[(2, 2)]);
    let pitch = (-m[(2, 0)]).atan2(cos_pitch);
    if cos_pitch < GIMBAL_LOCK_COS {
        // With roll = 0: m01 = -sin(yaw) * (+-1 folded), m11 = cos(yaw).
        let yaw = (-m[(0, 1)]).atan2(m[(1, 1)]);
        let angles = EulerAngles::new(0.0, pitch, yaw).normalized();
        return EulerDecomposition { angles, gimbal_locked: true };
    }
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    EulerDecomposition { angles: EulerAngles::new(roll, pitch, yaw).normalized(), gimbal_locked: false }
}

/// A rigid transform `x -> R x + t`, translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

/// Motion between two consecutive frames: frame `i` expressed in frame `i - 1`.
pub type RelativePose = Pose;

impl Pose {
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Result<Self> {
        if translation.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("translation".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self { rotation: Rotation::identity(), translation: t }
    }

    /// `self * rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.compose(&rhs.rotation),
            translation: self.rotation.rotate(&rhs.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let r_inv = self.rotation.inverse();
        Pose { rotation: r_inv, translation: -r_inv.rotate(&self.translation) }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    /// Row-major 3x4 `[R | t]`.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = self.rotation.matrix();
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
        ]
    }

    /// Inverse of [`Pose::to_row_major`]; the rotation block goes through
    /// [`validate_rotation`] with `tol`.
    pub fn from_row_major(v: &[f64; 12], tol: f64) -> Result<Pose> {
        let m = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let rotation = validate_rotation(&m, tol)?.rotation;
        Pose::new(rotation, Vector3::new(v[3], v[7], v[11]))
    }
}

/// Absolute poses in the first camera frame plus cumulative path length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
    arclen: Vec<f64>,
}

impl Trajectory {
    pub fn from_poses(poses: Vec<Pose>) -> Self {
        let mut arclen = Vec::with_capacity(poses.len());
        let mut acc = 0.0;
        for (i, p) in poses.iter().enumerate() {
            if i > 0 {
                acc += (p.translation - poses[i - 1].translation).norm();
            }
            arclen.push(acc);
        }
        Self { poses, arclen }
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    /// `arclen[i]` is the path length from frame 0 to frame `i`.
    pub fn arclen(&self) -> &[f64] {
        &self.arclen
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.arclen.last().copied().unwrap_or(0.0)
    }

    pub fn positions(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.poses.iter().map(|p| p.translation)
    }

    /// Pose of frame `j` expressed in frame `i`.
    pub fn relative_between(&self, i: usize, j: usize) -> Result<RelativePose> {
        if i > j || j >= self.poses.len() {
            return Err(invalid(format!(
                "relative_between({i}, {j}) on trajectory of {} poses",
                self.poses.len()
            )));
        }
        if i == j {
            return Ok(Pose::identity());
        }
        Ok(self.poses[i].inverse().compose(&self.poses[j]))
    }

    /// Consecutive relative poses; inverse of [`compose_trajectory`].
    pub fn relatives(&self) -> Vec<RelativePose> {
        self.poses.windows(2).map(|w| w[0].inverse().compose(&w[1])).collect()
    }

    /// Left-multiplies every pose by `g` (changes the world frame).
    pub fn transformed(&self, g: &Pose) -> Trajectory {
        Trajectory::from_poses(self.poses.iter().map(|p| g.compose(p)).collect())
    }
}

/// Chains relative poses from the identity: `n` relatives give `n + 1` poses.
pub fn compose_trajectory(rels: &[RelativePose]) -> Trajectory {
    let mut poses = Vec::with_capacity(rels.len() + 1);
    let mut current = Pose::identity();
    poses.push(current);
    for rel in rels {
        current = current.compose(rel);
        poses.push(current);
    }
    Trajectory::from_poses(poses)
}
