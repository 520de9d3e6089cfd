mod common;

use common::*;
use mtssl::data::GrowthProfile;
use mtssl::theory::{evaluate, s_matrix, theta_matrices, theory_stats, FixedPoint, TheoryInputs};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

struct Draw {
    inputs: TheoryInputs,
    fp: FixedPoint,
}

fn draw(rng: &mut impl Rng) -> Draw {
    loop {
        let t_count = rng.random_range(1..=3);
        let profile = random_profile(rng, t_count);
        let lambda_tilde = realistic_lambda_tilde(rng, &profile);
        let cal_m = random_cal_m(rng, t_count);
        let inputs = TheoryInputs::certain(cal_m, profile, lambda_tilde);
        if let Ok((fp, _)) = evaluate(&inputs, 0) {
            return Draw { inputs, fp };
        }
    }
}

fn entrywise(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs() / (1.0 + y.abs())).fold(0.0, f64::max)
}

#[test]
fn general_statistics_reduce_to_the_certain_label_case() {
    let mut rng = rng(31);
    for _ in 0..100 {
        let d = draw(&mut rng);
        for t in 0..d.inputs.profile.task_count() {
            let stats = theory_stats(&d.fp, &d.inputs, t).unwrap();
            let (a1, a2, b) = certain_label_stats_oracle(&d.fp, &d.inputs.cal_m, &d.inputs.profile, t);
            let a1 = DMatrix::from_column_slice(a1.len(), 1, a1.as_slice());
            let a2 = DMatrix::from_column_slice(a2.len(), 1, a2.as_slice());
            let lib_a1 = DMatrix::from_column_slice(a1.len(), 1, stats.a[0].as_slice());
            let lib_a2 = DMatrix::from_column_slice(a2.len(), 1, stats.a[1].as_slice());
            assert!(entrywise(&lib_a1, &a1) <= 1e-12);
            assert!(entrywise(&lib_a2, &a2) <= 1e-12);
            assert!(entrywise(&stats.b, &b) <= 1e-12, "B gap {}", entrywise(&stats.b, &b));
        }
    }
}

#[test]
fn s_matches_its_neumann_series() {
    let mut rng = rng(32);
    for _ in 0..50 {
        let d = draw(&mut rng);
        let profile: &GrowthProfile = &d.inputs.profile;
        let t = profile.task_count();
        let tf = t as f64;
        let s_bar = DMatrix::from_fn(t, t, |a, b| {
            d.fp.cal_a[(a, b)].powi(2) / (tf * tf * profile.c * (1.0 - d.fp.delta[b]).powi(2))
        });
        let step = DMatrix::from_diagonal(&profile.rho_bar) * &s_bar;
        let mut term = s_bar.clone();
        let mut series = s_bar.clone();
        for _ in 0..200 {
            term = &term * &step;
            series += &term;
        }
        let s = s_matrix(&d.fp, profile).unwrap();
        assert!(entrywise(&s, &series) <= 1e-12);
    }
}

#[test]
fn theta_push_through_identity() {
    let mut rng = rng(33);
    for _ in 0..50 {
        let d = draw(&mut rng);
        let (theta0, theta) = theta_matrices(&d.fp, &d.inputs.cal_m).unwrap();
        let k = theta0.nrows();
        let dt = DMatrix::from_diagonal(&d.fp.delta_tilde);
        let right = &theta0 * (DMatrix::identity(k, k) - &dt * &theta0).try_inverse().unwrap();
        assert!(entrywise(&theta, &right) <= 1e-11);
        assert!(entrywise(&theta, &theta.transpose()) <= 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_scale_with_the_labels(seed in 0u64..100_000, s in 0.1f64..10.0) {
        let mut r = rng(seed);
        let d = draw(&mut r);
        let stats = theory_stats(&d.fp, &d.inputs, 0).unwrap();
        let y = DVector::from_fn(stats.b.nrows(), |_, _| r.random_range(-1.0..1.0));
        prop_assume!(y.dot(&(&stats.b * &y)) > 0.0);
        let base = stats.moments(&y).unwrap();
        let scaled = stats.moments(&(&y * s)).unwrap();
        for j in 0..2 {
            prop_assert!((scaled.m[j] - s * base.m[j]).abs() <= 1e-12 * (1.0 + s * base.m[j].abs()));
        }
        prop_assert!((scaled.sigma - s * base.sigma).abs() <= 1e-12 * (1.0 + s * base.sigma));
    }

    #[test]
    fn means_are_linear_in_the_labels(seed in 0u64..100_000) {
        let mut r = rng(seed);
        let d = draw(&mut r);
        let stats = theory_stats(&d.fp, &d.inputs, 0).unwrap();
        let k = stats.b.nrows();
        let y1 = DVector::from_fn(k, |_, _| r.random_range(-1.0..1.0));
        let y2 = DVector::from_fn(k, |_, _| r.random_range(-1.0..1.0));
        let mean = |y: &DVector<f64>, j: usize| stats.a[j].dot(y) / (1.0 - stats.delta);
        for j in 0..2 {
            let sum = mean(&(&y1 + &y2), j);
            prop_assert!((sum - mean(&y1, j) - mean(&y2, j)).abs() <= 1e-12 * (1.0 + sum.abs()));
        }
        let d = stats.a_diff();
        let along = stats.moments(&d).unwrap();
        prop_assert!(along.m[1] - along.m[0] > 0.0);
    }
}
