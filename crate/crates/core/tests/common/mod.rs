//! Shared generators and a brute-force metric oracle for integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use vokit_core::metrics::EvalConfig;
use vokit_core::pose::{RelativePose, Rotation};

pub fn small_rotation(rng: &mut impl Rng, sigma: f64) -> Rotation {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = Normal::new(0.0, sigma).unwrap().sample(rng);
    Rotation::from_axis_angle(&Vector3::from(axis), angle).unwrap()
}

/// Vehicle-like motion: mostly forward, small turns, ~1.5 m per frame.
pub fn random_rels(rng: &mut impl Rng, n: usize) -> Vec<RelativePose> {
    (0..n)
        .map(|_| RelativePose {
            rotation: small_rotation(rng, 0.02),
            translation: Vector3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.05..0.05), rng.random_range(1.0..2.0)),
        })
        .collect()
}

/// Noisy copy of `rels`: rotation jitter, per-frame scale error, offsets.
pub fn perturb(rng: &mut impl Rng, rels: &[RelativePose]) -> Vec<RelativePose> {
    rels.iter()
        .map(|r| RelativePose {
            rotation: r.rotation.compose(&small_rotation(rng, 0.005)),
            translation: r.translation * rng.random_range(0.8..1.2)
                + Vector3::new(rng.random_range(-0.02..0.02), 0.0, rng.random_range(-0.02..0.02)),
        })
        .collect()
}

pub fn homogeneous(p: &RelativePose) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(p.rotation.matrix());
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&p.translation);
    m
}

/// First `j > start` whose cumulative distance from `start` reaches `length`,
/// by linear scan.
pub fn linear_end(arclen: &[f64], start: usize, length: f64) -> Option<usize> {
    (start + 1..arclen.len()).find(|&j| arclen[j] - arclen[start] >= length)
}

pub struct BruteForce {
    pub t_rel: Option<f64>,
    pub r_rel: Option<f64>,
    pub se: f64,
    pub count: usize,
}

/// Straightforward evaluation: 4x4 chained products, general matrix
/// inverses, linear subsequence search and an `acos` rotation angle.
pub fn brute_force(gt_rels: &[RelativePose], pred_rels: &[RelativePose], cfg: &EvalConfig) -> BruteForce {
    let chain = |rels: &[RelativePose]| {
        let mut acc: Vec<Matrix4<f64>> = vec![Matrix4::identity()];
        for r in rels {
            let next: Matrix4<f64> = acc.last().unwrap() * homogeneous(r);
            acc.push(next);
        }
        acc
    };
    let gt = chain(gt_rels);
    let pred = chain(pred_rels);
    let mut arclen = vec![0.0];
    for w in gt.windows(2) {
        let d = (w[1].fixed_view::<3, 1>(0, 3) - w[0].fixed_view::<3, 1>(0, 3)).norm();
        arclen.push(arclen.last().unwrap() + d);
    }
    let (mut t_sum, mut r_sum, mut count) = (0.0, 0.0, 0usize);
    for start in (0..gt.len()).step_by(cfg.start_stride) {
        for &len in &cfg.lengths {
            let Some(end) = linear_end(&arclen, start, len) else { continue };
            let g = gt[start].try_inverse().unwrap() * gt[end];
            let p = pred[start].try_inverse().unwrap() * pred[end];
            let e = p.try_inverse().unwrap() * g;
            let r: Matrix3<f64> = e.fixed_view::<3, 3>(0, 0).into();
            let t_err = e.fixed_view::<3, 1>(0, 3).norm();
            let r_err = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
            t_sum += t_err / len * 100.0;
            r_sum += r_err.to_degrees() / len * 100.0;
            count += 1;
        }
    }
    let mut se = 0.0;
    for (g, p) in gt_rels.iter().zip(pred_rels) {
        let (a, b) = (g.translation.norm(), p.translation.norm());
        let eps = cfg.epsilon;
        se += if a < eps && b < eps { 0.0 } else { 1.0 - f64::min(b / a.max(eps), a / b.max(eps)) };
    }
    BruteForce {
        t_rel: (count > 0).then(|| t_sum / count as f64),
        r_rel: (count > 0).then(|| r_sum / count as f64),
        se: se / gt_rels.len() as f64,
        count,
    }
}
