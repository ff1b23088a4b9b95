//! Matrix Fisher distribution on SO(3).
//!
//! `p(R | Psi) = exp(tr(Psi^T R)) / c(Psi)` with respect to the Haar measure
//! **normalized to total mass 1**. Under this convention the uniform
//! distribution (`Psi = 0`) has density 1, `log c(0) = 0` and entropy 0, and
//! concentrated distributions have negative entropy. Entropies under the
//! unnormalized measure (volume `8 pi^2`) are larger by `ln(8 pi^2) ~ 4.3689`.
//!
//! # Normalizer
//!
//! With the proper SVD `Psi = U diag(s) V^T` (`s1 >= s2 >= |s3|`), `c` depends
//! only on `s` and reduces to a one-dimensional integral
//!
//! ```text
//! c(s) = int_{-1}^{1} 1/2 I0((s1 - s2)(1 - u)/2) I0((s1 + s2)(1 + u)/2) exp(s3 u) du
//! ```
//!
//! which is evaluated with adaptive Gauss-Kronrod quadrature on exponentially
//! scaled Bessel functions, so it stays finite for large concentrations. The
//! gradient `d log c / d s` comes from the same pass and gives
//! `E[R] = U diag(d log c / d s) V^T` and `H = log c - tr(Psi^T E[R])`.
//!
//! [`Expectation::MonteCarlo`] provides an independent estimator that
//! reweights seeded, stratified Haar samples.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Rotation;
use crate::special::{bessel_i0e, bessel_i1e, integrate};

/// Largest proper singular value accepted by the quadrature.
pub const MAX_CONCENTRATION: f64 = 1e6;

const QUADRATURE_REL_TOL: f64 = 1e-13;
const QUADRATURE_MAX_INTERVALS: usize = 4000;

/// Stratified cells handled per Monte-Carlo work unit; each unit draws its
/// jitter from its own ChaCha stream, so results do not depend on the number
/// of worker threads.
const MC_CHUNK: u64 = 4096;

/// Unconstrained 3x3 parameter matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherParams(Matrix3<f64>);

impl FisherParams {
    pub fn new(psi: Matrix3<f64>) -> Result<Self> {
        if psi.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Fisher parameter".into()));
        }
        Ok(Self(psi))
    }

    pub fn zero() -> Self {
        Self(Matrix3::zeros())
    }

    /// `s * R`: mode `R`, isotropic concentration `s`.
    pub fn concentrated(rotation: &Rotation, s: f64) -> Result<Self> {
        Self::new(rotation.matrix() * s)
    }

    pub fn from_row_major(v: &[f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(v))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)], m[(2, 1)], m[(2, 2)]]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// `psi = u * diag(s) * v^T` with `u, v` in SO(3) and `s1 >= s2 >= |s3|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperSvd {
    pub u: Rotation,
    pub s: Vector3<f64>,
    pub v: Rotation,
}

impl ProperSvd {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.u.matrix() * Matrix3::from_diagonal(&self.s) * self.v.matrix().transpose()
    }
}

pub fn proper_svd(p: &FisherParams) -> ProperSvd {
    let svd = p.0.svd(true, true);
    let u0 = svd.u.expect("svd u");
    let v0 = svd.v_t.expect("svd v_t").transpose();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut u = Matrix3::zeros();
    let mut v = Matrix3::zeros();
    let mut s = Vector3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u0.column(src));
        v.set_column(dst, &v0.column(src));
        s[dst] = svd.singular_values[src];
    }
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        s[2] = -s[2];
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
        s[2] = -s[2];
    }
    ProperSvd { u: Rotation::from_matrix_unchecked(u), s, v: Rotation::from_matrix_unchecked(v) }
}

/// `log c` and its gradient with respect to the proper singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub log_c: f64,
    pub grad: Vector3<f64>,
}

/// Normalizer for proper singular values `s` (`s1 >= s2 >= |s3|`).
pub fn normalizer(s: &Vector3<f64>) -> Result<Normalizer> {
    let fail = || Error::Quadrature { singular_values: [s[0], s[1], s[2]], bound: MAX_CONCENTRATION };
    if s.iter().any(|x| !x.is_finite()) || s[0] > MAX_CONCENTRATION {
        return Err(fail());
    }
    if s.iter().all(|&x| x == 0.0) {
        return Ok(Normalizer { log_c: 0.0, grad: Vector3::zeros() });
    }
    let a = 0.5 * (s[0] - s[1]);
    let b = 0.5 * (s[0] + s[1]);
    let kappa = s[1] + s[2];
    // Substituting v = 1 - u pulls the peak of exp(s3 u) to v = 0 and the
    // scaled integrand never exceeds 1/2.
    let integrand = |v: f64| {
        let decay = (-kappa * v).exp();
        let (av, bw) = (a * v, b * (2.0 - v));
        let i0a = bessel_i0e(av);
        let i0b = bessel_i0e(bw);
        let f = 0.5 * i0a * i0b * decay;
        let da = 0.5 * v * bessel_i1e(av) * i0b * decay;
        let db = 0.5 * (2.0 - v) * i0a * bessel_i1e(bw) * decay;
        [f, 0.5 * (da + db), 0.5 * (db - da), (1.0 - v) * f]
    };
    let [mass, d1, d2, d3] =
        integrate(integrand, 0.0, 2.0, QUADRATURE_REL_TOL, QUADRATURE_MAX_INTERVALS).ok_or_else(fail)?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(fail());
    }
    Ok(Normalizer { log_c: s.sum() + mass.ln(), grad: Vector3::new(d1, d2, d3) / mass })
}

/// `log c(Psi)` under the unit-mass Haar measure.
pub fn log_c(p: &FisherParams) -> Result<f64> {
    Ok(normalizer(&proper_svd(p).s)?.log_c)
}

/// `tr(Psi^T R)`.
pub fn alignment(r: &Rotation, p: &FisherParams) -> f64 {
    p.0.component_mul(r.matrix()).sum()
}

pub fn log_density(r: &Rotation, p: &FisherParams) -> Result<f64> {
    Ok(-nll(r, p)?)
}

pub fn density(r: &Rotation, p: &FisherParams) -> Result<f64> {
    Ok(log_density(r, p)?.exp())
}

/// Negative log-likelihood `log c(Psi) - tr(Psi^T R)`.
pub fn nll(r: &Rotation, p: &FisherParams) -> Result<f64> {
    Ok(log_c(p)? - alignment(r, p))
}

/// How expectations under the distribution are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Expectation {
    /// Deterministic quadrature of the normalizer gradient.
    Quadrature,
    /// Self-normalized reweighting of stratified Haar samples; `samples` is
    /// rounded to the nearest cube.
    MonteCarlo { samples: u64, seed: u64 },
}

impl Default for Expectation {
    fn default() -> Self {
        Expectation::Quadrature
    }
}

/// `E_p[R]`, equal to the gradient of `log c` with respect to `Psi`. Not a
/// rotation in general: it shrinks towards zero with dispersion.
pub fn expected_rotation(p: &FisherParams, method: &Expectation) -> Result<Matrix3<f64>> {
    match *method {
        Expectation::Quadrature => {
            let svd = proper_svd(p);
            let n = normalizer(&svd.s)?;
            Ok(svd.u.matrix() * Matrix3::from_diagonal(&n.grad) * svd.v.matrix().transpose())
        }
        Expectation::MonteCarlo { samples, seed } => Ok(haar_monte_carlo(p, samples, seed)?.expected_rotation),
    }
}

/// Differential entropy `log c - tr(Psi^T E[R])` under the unit-mass Haar
/// measure. At most 0; equal to 0 only for `Psi = 0`.
pub fn entropy(p: &FisherParams, method: &Expectation) -> Result<f64> {
    match *method {
        Expectation::Quadrature => {
            let svd = proper_svd(p);
            let n = normalizer(&svd.s)?;
            Ok(n.log_c - svd.s.dot(&n.grad))
        }
        Expectation::MonteCarlo { samples, seed } => Ok(haar_monte_carlo(p, samples, seed)?.entropy),
    }
}

/// Maximizer of `tr(Psi^T R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEstimate {
    pub rotation: Rotation,
    /// False when `s2 + s3` vanishes and the maximizer is not unique.
    pub unique: bool,
}

pub fn mode(p: &FisherParams) -> ModeEstimate {
    let svd = proper_svd(p);
    let rotation = svd.u.compose(&svd.v.inverse());
    let scale = svd.s[0].abs().max(f64::MIN_POSITIVE);
    ModeEstimate { rotation, unique: svd.s[1] + svd.s[2] > 1e-12 * scale }
}

/// Haar-uniform rotation from four standard normal deviates normalized to a
/// unit quaternion.
pub fn sample_uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n2 = q.iter().map(|x| x * x).sum::<f64>();
        if n2 > 1e-12 {
            return Rotation::from_quaternion(q[0], q[1], q[2], q[3]);
        }
    }
}

/// Haar-uniform rotation from a point of the unit cube (Shoemake's map);
/// pushes the uniform measure on `[0,1)^3` forward to the Haar measure.
pub fn rotation_from_unit_cube(u: [f64; 3]) -> Rotation {
    let tau = 2.0 * std::f64::consts::PI;
    let (r1, r2) = ((1.0 - u[0]).sqrt(), u[0].sqrt());
    let (s2, c2) = (tau * u[1]).sin_cos();
    let (s3, c3) = (tau * u[2]).sin_cos();
    Rotation::from_quaternion(r2 * c3, r1 * s2, r1 * c2, r2 * s3)
}

/// Monte-Carlo summary of a matrix Fisher distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSummary {
    pub log_c: f64,
    pub expected_rotation: Matrix3<f64>,
    pub entropy: f64,
    /// Actual number of samples (the requested count rounded to a cube).
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Copy)]
struct Partial {
    max_log_w: f64,
    weight: f64,
    weighted_r: Matrix3<f64>,
}

impl Partial {
    fn empty() -> Self {
        Self { max_log_w: f64::NEG_INFINITY, weight: 0.0, weighted_r: Matrix3::zeros() }
    }

    fn merge(self, other: Partial) -> Partial {
        if other.weight == 0.0 {
            return self;
        }
        if self.weight == 0.0 {
            return other;
        }
        let m = self.max_log_w.max(other.max_log_w);
        let (a, b) = ((self.max_log_w - m).exp(), (other.max_log_w - m).exp());
        Partial {
            max_log_w: m,
            weight: self.weight * a + other.weight * b,
            weighted_r: self.weighted_r * a + other.weighted_r * b,
        }
    }
}

/// Reweights `samples` (rounded to a cube `k^3`) jittered-stratified Haar
/// rotations by `exp(tr(Psi^T R))`.
pub fn haar_monte_carlo(p: &FisherParams, samples: u64, seed: u64) -> Result<MonteCarloSummary> {
    if samples == 0 {
        return Err(crate::error::invalid("Monte-Carlo sample count must be positive"));
    }
    let k = ((samples as f64).cbrt().round() as u64).max(1);
    let total = k * k * k;
    let chunks = total.div_ceil(MC_CHUNK);
    let psi = p.0;
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let start = chunk * MC_CHUNK;
            let end = (start + MC_CHUNK).min(total);
            let mut rs = Vec::with_capacity((end - start) as usize);
            let mut log_w = Vec::with_capacity(rs.capacity());
            for cell in start..end {
                let (i, j, l) = (cell / (k * k), (cell / k) % k, cell % k);
                let jitter: [f64; 3] = rng.random();
                let u = [
                    (i as f64 + jitter[0]) / k as f64,
                    (j as f64 + jitter[1]) / k as f64,
                    (l as f64 + jitter[2]) / k as f64,
                ];
                let r = rotation_from_unit_cube(u);
                log_w.push(psi.component_mul(r.matrix()).sum());
                rs.push(r);
            }
            let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut part = Partial { max_log_w: m, weight: 0.0, weighted_r: Matrix3::zeros() };
            for (r, lw) in rs.iter().zip(&log_w) {
                let w = (lw - m).exp();
                part.weight += w;
                part.weighted_r += r.matrix() * w;
            }
            part
        })
        .collect();
    let acc = partials.into_iter().fold(Partial::empty(), Partial::merge);
    let expected_rotation = acc.weighted_r / acc.weight;
    let log_c = acc.max_log_w + (acc.weight / total as f64).ln();
    let entropy = log_c - psi.component_mul(&expected_rotation).sum();
    Ok(MonteCarloSummary { log_c, expected_rotation, entropy, samples: total, seed })
}
