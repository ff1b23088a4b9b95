use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vokit_core::fisher::{mode, nll, sample_uniform_rotation, Expectation, FisherParams};
use vokit_core::losses::{
    audio_loss_terms, dice_gradient, grad_check, loss_dice, loss_field_mse, nll_gradient, AudioClip, AudioLossConfig,
    Field, FieldRole, Reduction, SpectralMode,
};

fn seg(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Field {
    let data = (0..w * h * 2).map(|_| rng.random_range(0.05..0.95)).collect();
    Field::new(FieldRole::Segmentation, w, h, 2, data).unwrap()
}

#[test]
fn dice_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let target = seg(&mut rng, 8, 6);
        let pred = seg(&mut rng, 8, 6);
        let analytic = dice_gradient(&target, &pred).unwrap();
        let f = |x: &[f64]| loss_dice(&target, &pred.with_data(x.to_vec()).unwrap()).unwrap();
        let rep = grad_check(f, pred.data(), 1e-6, 1e-5, Some(&analytic)).unwrap();
        assert!(rep.passed, "{:?}", rep.max_deviation);
    }
}

#[test]
fn nll_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..10 {
        let r = sample_uniform_rotation(&mut rng);
        let psi = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)) * (1.0 + k as f64);
        let p = FisherParams::new(psi).unwrap();
        let x0: Vec<f64> = p.to_row_major().to_vec();
        let f = |x: &[f64]| nll(&r, &FisherParams::new(Matrix3::from_row_slice(x)).unwrap()).unwrap();
        let g = nll_gradient(&r, &p, &Expectation::Quadrature).unwrap();
        let analytic: Vec<f64> = g.transpose().iter().copied().collect();
        let rep = grad_check(f, &x0, 1e-5, 1e-6, Some(&analytic)).unwrap();
        assert!(rep.passed, "{:?}", rep.max_deviation);
    }
}

#[test]
fn nll_is_smallest_at_the_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = FisherParams::new(Matrix3::from_fn(|_, _| rng.random_range(-3.0..3.0))).unwrap();
    let best = nll(&mode(&p).rotation, &p).unwrap();
    for _ in 0..10_000 {
        assert!(nll(&sample_uniform_rotation(&mut rng), &p).unwrap() >= best - 1e-12);
    }
}

#[test]
fn sign_flip_only_visible_to_complex_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a: Vec<f64> = (0..4096).map(|_| rng.random_range(-1.0..1.0)).collect();
    let clip = AudioClip::new(vec![a], 8000).unwrap();
    let cfg = AudioLossConfig { window: 256, hop: 64, spectral: SpectralMode::Complex, reduction: Reduction::Sum };
    let flipped = audio_loss_terms(&clip, &clip.map(|x| -x), &cfg).unwrap();
    assert!(flipped.spectral > 0.0);
    let mag = AudioLossConfig { spectral: SpectralMode::Magnitude, ..cfg };
    assert_eq!(audio_loss_terms(&clip, &clip.map(|x| -x), &mag).unwrap().spectral, 0.0);
}

proptest! {
    #[test]
    fn dice_in_unit_interval(values in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 8)) {
        let (t, p): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
        let t = Field::new(FieldRole::Segmentation, 2, 2, 2, t).unwrap();
        let p = Field::new(FieldRole::Segmentation, 2, 2, 2, p).unwrap();
        let d = loss_dice(&t, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(loss_dice(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn field_mse_non_negative(values in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 12)) {
        let (a, b): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
        let a = Field::new(FieldRole::Flow, 3, 2, 2, a).unwrap();
        let b = Field::new(FieldRole::Flow, 3, 2, 2, b).unwrap();
        let sum = loss_field_mse(&a, &b, Reduction::Sum).unwrap();
        prop_assert!(sum >= 0.0);
        prop_assert!((loss_field_mse(&a, &b, Reduction::Mean).unwrap() * 12.0 - sum).abs() < 1e-9);
        prop_assert_eq!(loss_field_mse(&a, &a, Reduction::Sum).unwrap(), 0.0);
    }
}
