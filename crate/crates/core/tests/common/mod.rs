#![allow(dead_code)]

use mtssl::bench::bulk_norm_proxy;
use mtssl::data::{Class, Dataset, GrowthProfile, LabelAssignment, TaskCounts, TaskData};
use mtssl::theory::FixedPoint;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random PSD matrix with unit diagonal.
pub fn random_correlation(rng: &mut impl Rng, t: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, t, t + 1);
    let c = &g * g.transpose();
    DMatrix::from_fn(t, t, |i, j| c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt())
}

/// Random small dataset with certain labels; every task has both classes
/// labeled and at least one unlabeled sample.
pub fn random_dataset(rng: &mut impl Rng, t_count: usize, p: usize, max_per_task: usize) -> Dataset {
    let tasks = (0..t_count)
        .map(|_| {
            let n = rng.random_range(4..=max_per_task);
            let n_l = rng.random_range(2..n - 1);
            let mut classes: Vec<Class> = (0..n_l)
                .map(|_| if rng.random::<bool>() { Class::C1 } else { Class::C2 })
                .collect();
            classes[0] = Class::C1;
            classes[1] = Class::C2;
            let shift = rng.random_range(-1.0..1.0);
            let labeled = gaussian_matrix(rng, p, n_l).add_scalar(shift);
            let unlabeled = gaussian_matrix(rng, p, n - n_l).add_scalar(shift);
            TaskData::new(labeled, unlabeled, LabelAssignment::Certain(classes)).unwrap()
        })
        .collect();
    Dataset::new(tasks).unwrap()
}

/// `W̃` built entry by entry, samples ordered task by task, labeled first.
pub fn dense_wtilde(dataset: &Dataset, lambda: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut owner = Vec::new();
    for (t, task) in dataset.tasks().iter().enumerate() {
        for c in task.labeled().column_iter().chain(task.unlabeled().column_iter()) {
            cols.push(c.into_owned());
            owner.push(t);
        }
    }
    let tp = (dataset.task_count() * dataset.feature_dim()) as f64;
    let n = cols.len();
    let w = DMatrix::from_fn(n, n, |i, j| lambda[(owner[i], owner[j])] * cols[i].dot(&cols[j]) / tp);
    (w, owner)
}

pub fn symmetric_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.amax()
}

/// Unlabeled scores per task from an explicit inverse of `I − W̃/α`.
pub fn dense_scores(dataset: &Dataset, lambda: &DMatrix<f64>, alpha: f64, y_tilde: &DVector<f64>) -> Vec<Vec<f64>> {
    let (w, _) = dense_wtilde(dataset, lambda);
    let n = w.nrows();
    let inverse = (DMatrix::identity(n, n) - w / alpha).try_inverse().unwrap();
    let mut y = DVector::zeros(n);
    let mut k = 0;
    for (t, task) in dataset.tasks().iter().enumerate() {
        for d in task.labels().probabilities() {
            y[k] = d[0] * y_tilde[2 * t] + d[1] * y_tilde[2 * t + 1];
            k += 1;
        }
        k += task.n_unlabeled();
    }
    let f = inverse * y;
    let mut out = Vec::new();
    let mut k = 0;
    for task in dataset.tasks() {
        k += task.n_labeled();
        out.push(f.rows(k, task.n_unlabeled()).iter().copied().collect());
        k += task.n_unlabeled();
    }
    out
}

pub fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Random growth profile with `p ∈ [40, 400]` and class counts up to a few hundred.
pub fn random_profile(rng: &mut impl Rng, t_count: usize) -> GrowthProfile {
    let p = rng.random_range(40..=400);
    let counts: Vec<TaskCounts> = (0..t_count)
        .map(|_| TaskCounts {
            labeled: [rng.random_range(5..300) as f64, rng.random_range(5..300) as f64],
            unlabeled: [rng.random_range(5..400) as f64, rng.random_range(5..400) as f64],
        })
        .collect();
    GrowthProfile::from_counts(p, &counts).unwrap()
}

/// `Λ/α` with α a random multiple in `[1.5, 10]` of the bulk edge of `W̃`.
pub fn realistic_lambda_tilde(rng: &mut impl Rng, profile: &GrowthProfile) -> DMatrix<f64> {
    let lambda = random_correlation(rng, profile.task_count());
    let alpha = rng.random_range(1.5..10.0) * bulk_norm_proxy(profile.n, profile.p, &lambda);
    lambda / alpha
}

/// Gram matrix of `2T` random means of norm around 1 to 3.
pub fn random_cal_m(rng: &mut impl Rng, t_count: usize) -> DMatrix<f64> {
    let m = gaussian_matrix(rng, 2 * t_count + 3, 2 * t_count) * rng.random_range(0.3..1.0);
    m.transpose() * m
}

/// Fixed point of an uncoupled task: `δ = (λ/T)/(1 − λk/(1−δ))` with
/// `k = ρ̄/(Tc)`, solved as the root of `u² − (1 + λk − λ/T)u + λk = 0`,
/// `u = 1 − δ`, that tends to `u = 1` as `λ → 0`.
pub fn uncoupled_delta(lambda: f64, rho_bar: f64, c: f64, t_count: usize) -> f64 {
    let tf = t_count as f64;
    let k = rho_bar / (tf * c);
    let b = 1.0 + lambda * k - lambda / tf;
    let u = (b + (b * b - 4.0 * lambda * k).sqrt()) / 2.0;
    1.0 - u
}

/// `(a_1, a_2, B)` of task `t` for certain labels, written out from the
/// closed forms with explicit loops.
pub fn certain_label_stats_oracle(
    fp: &FixedPoint,
    cal_m: &DMatrix<f64>,
    profile: &GrowthProfile,
    t: usize,
) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
    let tc = profile.task_count();
    let k = 2 * tc;
    let tf = tc as f64;
    let a_mat = &fp.cal_a;
    let dt: Vec<f64> = (0..k).map(|i| profile.rho[i] / (tf * profile.c * (1.0 - fp.delta[i / 2]))).collect();
    let eta: Vec<f64> = profile.eta.iter().copied().collect();

    let theta0 = DMatrix::from_fn(k, k, |i, j| a_mat[(i / 2, j / 2)] * cal_m[(i, j)]);
    let left = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i == j)) - theta0[(i, j)] * dt[j]);
    let right = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i == j)) - dt[i] * theta0[(i, j)]);
    let left_inv = left.try_inverse().unwrap();
    let right_inv = right.try_inverse().unwrap();
    let theta = &left_inv * &theta0;

    let s_bar = DMatrix::from_fn(tc, tc, |a, b| {
        a_mat[(a, b)].powi(2) / (tf * tf * profile.c * (1.0 - fp.delta[b]).powi(2))
    });
    let i_minus = DMatrix::from_fn(tc, tc, |a, b| f64::from(u8::from(a == b)) - profile.rho_bar[a] * s_bar[(a, b)]);
    let s = &s_bar * i_minus.try_inverse().unwrap();
    let r: Vec<f64> = (0..k).map(|i| profile.rho[i] * s[(t, i / 2)]).collect();
    let r_bar: Vec<f64> = (0..tc).map(|b| profile.rho_bar[b] * s[(t, b)]).collect();

    let gamma = tf * profile.c * fp.delta[t] / profile.rho_bar[t];
    let big_gamma = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i / 2 == j / 2)));
    let gamma_t = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i / 2 == t && j / 2 == t)));

    let weights: Vec<f64> = (0..tc).map(|b| r_bar[b] + f64::from(u8::from(b == t))).collect();
    let awa = DMatrix::from_fn(tc, tc, |a, b| (0..tc).map(|m| a_mat[(a, m)] * weights[m] * a_mat[(m, b)]).sum::<f64>());
    let omega0 = DMatrix::from_fn(k, k, |i, j| awa[(i / 2, j / 2)] * cal_m[(i, j)]);
    let omega = &left_inv * omega0 * &right_inv;

    let shifted = &theta - &big_gamma * gamma;
    let a1 = DVector::from_fn(k, |m, _| shifted[(2 * t, m)] * dt[m] * eta[m]);
    let a2 = DVector::from_fn(k, |m, _| shifted[(2 * t + 1, m)] * dt[m] * eta[m]);

    let d_r = DMatrix::from_fn(k, k, |i, j| if i == j { r[i] } else { 0.0 });
    let d_dt = DMatrix::from_fn(k, k, |i, j| if i == j { dt[i] } else { 0.0 });
    let d_eta = DMatrix::from_fn(k, k, |i, j| if i == j { eta[i] } else { 0.0 });
    let d_tilde = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            profile.rho[i] * profile.eta[i] / (profile.rho_bar[i / 2] * profile.eta_bar[i / 2])
        } else {
            0.0
        }
    });
    let t_mat = DMatrix::from_fn(k, k, |i, j| {
        if i / 2 == j / 2 {
            r_bar[i / 2] * profile.eta_bar[i / 2]
        } else {
            0.0
        }
    });

    let first = &d_eta * ((&d_dt * &shifted) * 2.0 - &gamma_t) * &d_r * &d_eta;
    let second = &d_eta * &d_dt * (&theta * &d_r * &theta + omega - &gamma_t * (gamma * gamma)) * &d_dt * &d_eta;
    let third = t_mat.component_mul(&d_tilde);
    let b = first + second + third;
    let b = (&b + b.transpose()) * 0.5;
    (a1, a2, b)
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol * (1.0 + b.abs()),
        "{what}: {a} vs {b} (tolerance {tol})"
    );
}

/// A realistic theory instance: centered mean Gram, `α` above the bulk
/// edge, fixed point converged, and a positive definite `B` for task 0.
pub struct TheoryInstance {
    pub inputs: mtssl::theory::TheoryInputs,
    pub fp: FixedPoint,
    pub stats: mtssl::theory::TheoryStats,
}

pub fn random_theory_instance(rng: &mut impl Rng) -> TheoryInstance {
    loop {
        let t_count = rng.random_range(1..=3);
        let profile = random_profile(rng, t_count);
        let lambda_tilde = realistic_lambda_tilde(rng, &profile);
        let cal_m = mtssl::calibration::project_centered(&random_cal_m(rng, t_count), &profile);
        let inputs = mtssl::theory::TheoryInputs::certain(cal_m, profile, lambda_tilde);
        let Ok((fp, stats)) = mtssl::theory::evaluate(&inputs, 0) else { continue };
        if stats.b.clone().cholesky().is_some() {
            return TheoryInstance { inputs, fp, stats };
        }
    }
}
