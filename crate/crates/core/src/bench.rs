//! Synthetic Gaussian scenarios and seeded Monte Carlo trials.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    calibrate, calibrate_from, lambda_from_gram, project_centered, predicted_errors, CalibrationInputs,
    CalibrationOptions, UncertaintyStats,
};
use crate::classifier::{classify, empirical_errors, solve_scores, spectral_norm_wtilde, ScoreVector};
use crate::data::{growth_profile_of, Class, Dataset, GrowthProfile, LabelAssignment, ModelConfig, TaskCounts, TaskData};
use crate::error::{Error, Result};
use crate::theory::{evaluate, TheoryInputs};

/// Per-class labeled and unlabeled sample counts of one task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub labeled: [usize; 2],
    pub unlabeled: [usize; 2],
}

impl TaskSpec {
    pub fn counts(&self) -> TaskCounts {
        TaskCounts {
            labeled: self.labeled.map(|v| v as f64),
            unlabeled: self.unlabeled.map(|v| v as f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Two tasks. Task 1 (the target) has means `±(βμ + √(1−β²)μ⊥)`,
    /// task 2 has means `±μ`, with `‖μ‖ = ‖μ⊥‖ = mu_norm`.
    BetaCorrelated { beta: f64, mu_norm: f64 },
    /// One task with means `±μ` and the given labeled class counts.
    Imbalance { n_l1: usize, n_l2: usize, mu_norm: f64 },
    /// One task labeled by `n_r` reliable and `n_i` imprecise samples of
    /// reliability `r`; `‖μ₁ − μ₂‖ = 1/difficulty`.
    UncertainLabels {
        r: f64,
        n_r: usize,
        n_i: usize,
        difficulty: f64,
    },
    /// Explicit class means, one pair per task.
    Custom { means: Vec<[Vec<f64>; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub p: usize,
    pub tasks: Vec<TaskSpec>,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Two-task transfer setting: target with 50+50 labels, source with
    /// 500+500, 125+125 unlabeled samples each.
    pub fn beta(beta: f64, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::BetaCorrelated { beta, mu_norm: 2.0 },
            p: 200,
            tasks: vec![
                TaskSpec {
                    labeled: [50, 50],
                    unlabeled: [125, 125],
                },
                TaskSpec {
                    labeled: [500, 500],
                    unlabeled: [125, 125],
                },
            ],
            seed,
        }
    }

    /// Single task, 1000 labels split as given, 200+200 unlabeled.
    pub fn imbalance(n_l1: usize, seed: u64) -> Self {
        let n_l2 = 1000 - n_l1.min(1000);
        Self {
            kind: ScenarioKind::Imbalance { n_l1, n_l2, mu_norm: 1.0 },
            p: 200,
            tasks: vec![TaskSpec {
                labeled: [n_l1, n_l2],
                unlabeled: [200, 200],
            }],
            seed,
        }
    }

    /// Single task, 200+200 unlabeled samples.
    pub fn uncertain(r: f64, n_r: usize, n_i: usize, difficulty: f64, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::UncertainLabels { r, n_r, n_i, difficulty },
            p: 200,
            tasks: vec![TaskSpec {
                labeled: [(n_r + n_i) / 2, (n_r + n_i) - (n_r + n_i) / 2],
                unlabeled: [200, 200],
            }],
            seed,
        }
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDataset(msg));
        if self.p == 0 || self.tasks.is_empty() {
            return bad("scenario needs p > 0 and at least one task".into());
        }
        match &self.kind {
            ScenarioKind::BetaCorrelated { beta, mu_norm } => {
                if !(-1.0..=1.0).contains(beta) || !(*mu_norm >= 0.0) || self.tasks.len() != 2 {
                    return bad(format!("beta scenario needs β ∈ [−1,1], ‖μ‖ ≥ 0 and 2 tasks, got β={beta}"));
                }
            }
            ScenarioKind::Imbalance { n_l1, n_l2, .. } => {
                if self.tasks.len() != 1 || self.tasks[0].labeled != [*n_l1, *n_l2] {
                    return bad("imbalance scenario needs one task whose labeled counts match".into());
                }
            }
            ScenarioKind::UncertainLabels { r, n_r, n_i, difficulty } => {
                if !(0.5..=1.0).contains(r) || !(*difficulty > 0.0) || self.tasks.len() != 1 {
                    return bad(format!("uncertain scenario needs r ∈ [0.5,1], D > 0 and one task, got r={r}"));
                }
                let l = self.tasks[0].labeled;
                if l[0] + l[1] != n_r + n_i {
                    return bad("labeled counts must add up to n_r + n_i".into());
                }
            }
            ScenarioKind::Custom { means } => {
                if means.len() != self.tasks.len() || means.iter().flatten().any(|m| m.len() != self.p) {
                    return bad("custom means need one pair of p-vectors per task".into());
                }
            }
        }
        Ok(())
    }
}

/// A generated dataset with the ground truth behind it.
#[derive(Clone, Debug)]
pub struct Generated {
    pub dataset: Dataset,
    /// True class means per task.
    pub means: Vec<[DVector<f64>; 2]>,
    /// Gram matrix of the class means after subtracting each task's
    /// count-weighted mixture mean.
    pub cal_m: DMatrix<f64>,
}

fn gaussian_vector(rng: &mut impl Rng, p: usize) -> DVector<f64> {
    DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Two orthonormal random directions (the second is zero when `p = 1`).
fn orthonormal_pair(rng: &mut impl Rng, p: usize) -> (DVector<f64>, DVector<f64>) {
    let u = gaussian_vector(rng, p).normalize();
    if p == 1 {
        return (u, DVector::zeros(1));
    }
    let v = gaussian_vector(rng, p);
    let v = (&v - &u * u.dot(&v)).normalize();
    (u, v)
}

fn class_means(spec: &ScenarioSpec, rng: &mut impl Rng) -> Vec<[DVector<f64>; 2]> {
    let p = spec.p;
    match &spec.kind {
        ScenarioKind::BetaCorrelated { beta, mu_norm } => {
            let (mu, perp) = orthonormal_pair(rng, p);
            let target = (&mu * *beta + &perp * (1.0 - beta * beta).max(0.0).sqrt()) * *mu_norm;
            let source = mu * *mu_norm;
            vec![[-&target, target], [-&source, source]]
        }
        ScenarioKind::Imbalance { mu_norm, .. } => {
            let mu = gaussian_vector(rng, p).normalize() * *mu_norm;
            vec![[-&mu, mu]]
        }
        ScenarioKind::UncertainLabels { difficulty, .. } => {
            let half = gaussian_vector(rng, p).normalize() * (0.5 / difficulty);
            vec![[-&half, half]]
        }
        ScenarioKind::Custom { means } => means
            .iter()
            .map(|[a, b]| [DVector::from_column_slice(a), DVector::from_column_slice(b)])
            .collect(),
    }
}

fn sample_columns(rng: &mut impl Rng, means: &[DVector<f64>; 2], classes: &[Class]) -> DMatrix<f64> {
    let p = means[0].len();
    let mut x = DMatrix::zeros(p, classes.len());
    for (i, c) in classes.iter().enumerate() {
        let mean = &means[c.index()];
        for r in 0..p {
            x[(r, i)] = mean[r] + rng.sample::<f64, _>(StandardNormal);
        }
    }
    x
}

fn repeated(counts: [usize; 2]) -> Vec<Class> {
    let mut v = vec![Class::C1; counts[0]];
    v.extend(std::iter::repeat_n(Class::C2, counts[1]));
    v
}

/// Gram matrix of the class means, each recentered on its task's mixture mean.
pub fn centered_mean_gram(means: &[[DVector<f64>; 2]], counts: &[TaskCounts]) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = means
        .iter()
        .zip(counts)
        .flat_map(|([m1, m2], c)| {
            let (n1, n2) = (c.class_total(0), c.class_total(1));
            let mix = (m1 * n1 + m2 * n2) / (n1 + n2);
            [m1 - &mix, m2 - &mix]
        })
        .collect();
    DMatrix::from_fn(cols.len(), cols.len(), |a, b| cols[a].dot(&cols[b]))
}

/// Draws a dataset. Labeled columns are ordered by class; imprecise samples
/// of the uncertain scenario carry probabilities `(r, 1−r)` toward a claimed
/// class that is the genuine one with probability `r`.
pub fn generate(spec: &ScenarioSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let means = class_means(spec, &mut rng);
    let mut tasks = Vec::with_capacity(spec.tasks.len());
    let mut realized = Vec::with_capacity(spec.tasks.len());
    for (t, ts) in spec.tasks.iter().enumerate() {
        let (labels, genuine) = match &spec.kind {
            ScenarioKind::UncertainLabels { r, n_r, n_i, .. } => {
                let mut probs = Vec::with_capacity(n_r + n_i);
                let mut genuine = Vec::with_capacity(n_r + n_i);
                for c in repeated([n_r / 2, n_r - n_r / 2]) {
                    probs.push(if c == Class::C1 { [1.0, 0.0] } else { [0.0, 1.0] });
                    genuine.push(c);
                }
                for claimed in repeated([n_i / 2, n_i - n_i / 2]) {
                    let truth = if rng.random::<f64>() < *r { claimed } else { claimed.other() };
                    probs.push(if claimed == Class::C1 { [*r, 1.0 - r] } else { [1.0 - r, *r] });
                    genuine.push(truth);
                }
                (
                    LabelAssignment::Probabilistic {
                        probs,
                        genuine: Some(genuine.clone()),
                    },
                    genuine,
                )
            }
            _ => {
                let classes = repeated(ts.labeled);
                (LabelAssignment::Certain(classes.clone()), classes)
            }
        };
        let labeled = sample_columns(&mut rng, &means[t], &genuine);
        let truth = repeated(ts.unlabeled);
        let unlabeled = sample_columns(&mut rng, &means[t], &truth);
        let task = TaskData::new(labeled, unlabeled, labels)?.with_unlabeled_truth(truth)?;
        realized.push(task.counts());
        tasks.push(task);
    }
    let dataset = Dataset::new(tasks)?;
    let cal_m = centered_mean_gram(&means, &realized);
    Ok(Generated { dataset, means, cal_m })
}

/// Theory-side view of one score distribution for a fixed configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub m: [f64; 2],
    pub sigma: f64,
    pub zeta: f64,
    pub errors: [f64; 2],
    /// Errors weighted by the unlabeled class counts.
    pub error: f64,
}

/// Predicted score statistics of task `target` under `config`, for a given
/// mean Gram matrix.
pub fn predict_config(
    config: &ModelConfig,
    cal_m: &DMatrix<f64>,
    profile: &GrowthProfile,
    uncertainty: &UncertaintyStats,
    target: usize,
) -> Result<TheoryPrediction> {
    let inputs = TheoryInputs {
        cal_m: cal_m.clone(),
        profile: profile.clone(),
        lambda_tilde: config.lambda_tilde(),
        d_bar: uncertainty.d_bar.clone(),
        d_tilde: uncertainty.d_tilde.clone(),
    };
    let (_, stats) = evaluate(&inputs, target)?;
    let moments = stats.moments(&config.y_tilde)?;
    let zeta = config.thresholds[target];
    let errors = predicted_errors(&moments, zeta)?;
    let nu = profile.counts[target].unlabeled;
    let total = nu[0] + nu[1];
    let error = if total > 0.0 {
        (errors[0] * nu[0] + errors[1] * nu[1]) / total
    } else {
        0.5 * (errors[0] + errors[1])
    };
    Ok(TheoryPrediction {
        m: moments.m,
        sigma: moments.sigma,
        zeta,
        errors,
        error,
    })
}

/// Observed behavior of one pipeline on one trial, target task only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrial {
    pub config: ModelConfig,
    pub errors: [f64; 2],
    /// Fraction of misclassified unlabeled target samples.
    pub error: f64,
    pub score_mean: [f64; 2],
    pub score_std: [f64; 2],
    pub unlabeled_counts: [usize; 2],
    /// What the pipeline predicts from its own estimates.
    pub deployed: Option<TheoryPrediction>,
    /// Prediction for the same configuration under the true means.
    pub oracle: Option<TheoryPrediction>,
    /// Optimal error predicted when calibrating (calibrated pipeline only).
    pub epsilon_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub naive: Option<PipelineTrial>,
    pub calibrated: Option<PipelineTrial>,
    /// Labels and ε★ of a calibration run with the true means and `Λ`.
    pub oracle_labels: Option<DVector<f64>>,
    pub oracle_epsilon_star: Option<f64>,
    pub failures: Vec<String>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn observe(
    scores: &ScoreVector,
    config: &ModelConfig,
    truth: &[Class],
    target: usize,
) -> PipelineTrial {
    let prediction = classify(scores, &config.thresholds);
    let errors = empirical_errors(&prediction, scores, target, truth);
    let target_scores = scores.task_scores(target);
    let mut by_class: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (s, c) in target_scores.iter().zip(truth) {
        by_class[c.index()].push(*s);
    }
    let (m1, s1) = mean_std(&by_class[0]);
    let (m2, s2) = mean_std(&by_class[1]);
    let counts = [by_class[0].len(), by_class[1].len()];
    let total = (counts[0] + counts[1]).max(1) as f64;
    PipelineTrial {
        config: config.clone(),
        errors,
        error: (errors[0] * counts[0] as f64 + errors[1] * counts[1] as f64) / total,
        score_mean: [m1, m2],
        score_std: [s1, s2],
        unlabeled_counts: counts,
        deployed: None,
        oracle: None,
        epsilon_star: None,
    }
}

/// Runs one trial: calibrated pipeline, naive pipeline at the calibrated
/// `α` and `Λ̂`, and an oracle calibration with the true means.
pub fn run_trial(spec: &ScenarioSpec, target: usize, options: &CalibrationOptions, trial: usize) -> TrialResult {
    let mut failures = Vec::new();
    let mut result = TrialResult {
        trial,
        seed: spec.seed,
        naive: None,
        calibrated: None,
        oracle_labels: None,
        oracle_epsilon_star: None,
        failures: Vec::new(),
    };
    let generated = match generate(spec) {
        Ok(g) => g,
        Err(e) => {
            result.failures.push(format!("generate: {e}"));
            return result;
        }
    };
    let data = &generated.dataset;
    let truth = data.task(target).unlabeled_truth().unwrap_or(&[]).to_vec();
    let centered = data.center_taskwise();
    let profile = growth_profile_of(&centered);
    let uncertainty = crate::calibration::uncertainty_stats_lenient(&centered).map(|(u, _)| u);

    let mut opts = options.clone();
    opts.seed = spec.seed;
    match calibrate(data, target, &opts) {
        Ok((cal, mean_gram)) => {
            let naive_config = ModelConfig {
                solver: options.solver,
                ..ModelConfig::naive(cal.config.alpha, cal.config.lambda.clone())
            };
            for (name, config) in [("calibrated", &cal.config), ("naive", &naive_config)] {
                match solve_scores(&centered, config) {
                    Ok(scores) => {
                        let mut obs = observe(&scores, config, &truth, target);
                        if let (Ok(profile), Ok(unc)) = (&profile, &uncertainty) {
                            obs.oracle = predict_config(config, &generated.cal_m, profile, unc, target)
                                .map_err(|e| failures.push(format!("{name} oracle theory: {e}")))
                                .ok();
                            obs.deployed = predict_config(config, &project_centered(&mean_gram.cal_m_hat, profile), profile, unc, target)
                                .map_err(|e| failures.push(format!("{name} deployed theory: {e}")))
                                .ok();
                        }
                        if name == "calibrated" {
                            obs.epsilon_star = Some(cal.epsilon_star);
                            result.calibrated = Some(obs);
                        } else {
                            result.naive = Some(obs);
                        }
                    }
                    Err(e) => failures.push(format!("{name} solve: {e}")),
                }
            }
        }
        Err(e) => failures.push(format!("calibrate: {e}")),
    }

    match oracle_calibration(&generated, &centered, target, options) {
        Ok((labels, eps)) => {
            result.oracle_labels = Some(labels);
            result.oracle_epsilon_star = Some(eps);
        }
        Err(e) => failures.push(format!("oracle calibration: {e}")),
    }
    result.failures = failures;
    result
}

fn oracle_calibration(
    generated: &Generated,
    centered: &Dataset,
    target: usize,
    options: &CalibrationOptions,
) -> Result<(DVector<f64>, f64)> {
    let lambda = lambda_from_gram(&generated.cal_m)?;
    let (uncertainty, _) = crate::calibration::uncertainty_stats_lenient(centered)?;
    let inputs = CalibrationInputs {
        cal_m: generated.cal_m.clone(),
        wtilde_norm: spectral_norm_wtilde(centered, &lambda)?,
        lambda,
        uncertainty,
        profile: growth_profile_of(centered)?,
    };
    let cal = calibrate_from(&inputs, target, options)?;
    Ok((cal.labels.normalized, cal.epsilon_star))
}

/// Seed of trial `index`, drawn from the master seed's stream `index`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Mean and standard error of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        let se = if values.len() > 1 { std / (values.len() as f64).sqrt() } else { f64::NAN };
        Self {
            mean,
            se,
            count: values.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub empirical_error: Estimate,
    pub oracle_error: Estimate,
    pub deployed_error: Estimate,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: Vec<TrialResult>,
    pub naive: PipelineSummary,
    pub calibrated: PipelineSummary,
    /// Mean predicted ε★ of the calibrated pipeline.
    pub epsilon_star: Estimate,
    pub oracle_epsilon_star: Estimate,
    /// Mean oracle optimal labels.
    pub oracle_labels: Option<DVector<f64>>,
}

fn summarize(trials: &[TrialResult], pick: impl Fn(&TrialResult) -> Option<&PipelineTrial>) -> PipelineSummary {
    let runs: Vec<&PipelineTrial> = trials.iter().filter_map(&pick).collect();
    let collect = |f: &dyn Fn(&PipelineTrial) -> Option<f64>| -> Vec<f64> { runs.iter().filter_map(|r| f(r)).collect() };
    PipelineSummary {
        empirical_error: Estimate::of(&collect(&|r| Some(r.error))),
        oracle_error: Estimate::of(&collect(&|r| r.oracle.as_ref().map(|o| o.error))),
        deployed_error: Estimate::of(&collect(&|r| r.deployed.as_ref().map(|o| o.error))),
        failures: trials.len() - runs.len(),
    }
}

/// Runs `trials` independent trials in parallel. Trial `i` uses the seed
/// [`trial_seed`]`(spec.seed, i)`; failures are recorded, never fatal.
pub fn run_trials(spec: &ScenarioSpec, target: usize, options: &CalibrationOptions, trials: usize) -> TrialSummary {
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut s = spec.clone();
            s.seed = trial_seed(spec.seed, i);
            run_trial(&s, target, options, i)
        })
        .collect();
    let eps: Vec<f64> = results
        .iter()
        .filter_map(|r| r.calibrated.as_ref().and_then(|c| c.epsilon_star))
        .collect();
    let oracle_eps: Vec<f64> = results.iter().filter_map(|r| r.oracle_epsilon_star).collect();
    let labels: Vec<&DVector<f64>> = results.iter().filter_map(|r| r.oracle_labels.as_ref()).collect();
    let oracle_labels = (!labels.is_empty())
        .then(|| labels.iter().fold(DVector::zeros(labels[0].len()), |acc, l| acc + *l) / labels.len() as f64);
    TrialSummary {
        naive: summarize(&results, |r| r.naive.as_ref()),
        calibrated: summarize(&results, |r| r.calibrated.as_ref()),
        epsilon_star: Estimate::of(&eps),
        oracle_epsilon_star: Estimate::of(&oracle_eps),
        oracle_labels,
        trials: results,
    }
}

/// Expected `D̄`, `D̃` of one task labeled by `n_r` reliable samples and
/// `n_i` imprecise samples of reliability `r`, balanced classes.
pub fn expected_uncertainty(n_r: f64, n_i: f64, r: f64) -> UncertaintyStats {
    let q = r * r + (1.0 - r) * (1.0 - r);
    let n = n_r + n_i;
    let same = (n_r + n_i * q) / n;
    let d_bar = DMatrix::from_row_slice(2, 2, &[same, 1.0 - same, 1.0 - same, same]);
    let diag_t = (n_r + n_i * q) / (2.0 * n);
    let off_t = n_i * r * (1.0 - r) / n;
    let d_tilde = DMatrix::from_row_slice(2, 2, &[diag_t, off_t, off_t, diag_t]);
    UncertaintyStats { d_bar, d_tilde }
}

/// Bulk edge of `W̃` without signal, used as the α scale when no data exist.
pub fn bulk_norm_proxy(n: f64, p: usize, lambda: &DMatrix<f64>) -> f64 {
    let tp = (lambda.nrows() * p) as f64;
    let lambda_norm = lambda.clone().symmetric_eigen().eigenvalues.amax();
    (n.sqrt() + tp.sqrt()).powi(2) / tp * lambda_norm
}

/// Setting of the imprecise-label comparison: one balanced task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertainSetting {
    pub p: usize,
    pub n_unlabeled: [usize; 2],
    pub difficulty: f64,
    pub options: CalibrationOptions,
}

impl Default for UncertainSetting {
    fn default() -> Self {
        Self {
            p: 200,
            n_unlabeled: [200, 200],
            difficulty: 0.5,
            options: CalibrationOptions::default(),
        }
    }
}

impl UncertainSetting {
    /// Predicted optimal error with `n_r` reliable and `n_i` imprecise
    /// labels, from expected label statistics.
    pub fn predicted_error(&self, n_r: f64, n_i: f64, r: f64) -> Result<f64> {
        let n_l = n_r + n_i;
        let counts = TaskCounts {
            labeled: [n_l / 2.0, n_l / 2.0],
            unlabeled: self.n_unlabeled.map(|v| v as f64),
        };
        let profile = GrowthProfile::from_counts(self.p, &[counts])?;
        let half = 0.25 / (self.difficulty * self.difficulty);
        let cal_m = DMatrix::from_row_slice(2, 2, &[half, -half, -half, half]);
        let lambda = DMatrix::identity(1, 1);
        let inputs = CalibrationInputs {
            cal_m,
            wtilde_norm: bulk_norm_proxy(profile.n, self.p, &lambda),
            lambda,
            uncertainty: expected_uncertainty(n_r, n_i, r),
            profile,
        };
        Ok(calibrate_from(&inputs, 0, &self.options)?.epsilon_star)
    }
}

pub const MAX_IMPRECISE: usize = 1_000_000;

/// Smallest `n_i` whose imprecise-only predicted error reaches the error of
/// `n_r` reliable labels; returns `(n_i, n_r / n_i)`.
pub fn equivalent_reliable_count(setting: &UncertainSetting, r: f64, n_r: usize) -> Result<(usize, f64)> {
    if !(r > 0.5 && r <= 1.0) {
        return Err(Error::Unreachable(format!(
            "reliability {r} carries no label information"
        )));
    }
    let target = setting.predicted_error(n_r as f64, 0.0, r)?;
    let error_at = |n_i: usize| setting.predicted_error(0.0, n_i as f64, r).unwrap_or(0.5);
    if error_at(MAX_IMPRECISE) > target + 1e-4 {
        return Err(Error::Unreachable(format!(
            "{MAX_IMPRECISE} imprecise samples of reliability {r} do not reach error {target:.4e}"
        )));
    }
    let (mut lo, mut hi) = (1usize, MAX_IMPRECISE);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if error_at(mid) <= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok((lo, n_r as f64 / lo as f64))
}

/// C-style `%.6e` formatting.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

/// Writes a whitespace-separated table with a manifest reference and a header.
pub fn write_dat(path: &Path, manifest: &str, columns: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# manifest: {manifest}")?;
    writeln!(out, "{}", columns.join(" "))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_sci(*v)).collect();
        writeln!(out, "{}", cells.join(" "))?;
    }
    out.flush()
}

/// One point of a β sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPoint {
    pub beta: f64,
    pub summary: TrialSummary,
}

pub const BETA_COLUMNS: [&str; 11] = [
    "beta",
    "y11",
    "y12",
    "y21",
    "y22",
    "m_naive_emp",
    "se_naive_emp",
    "m_naive_th",
    "m_opt_emp",
    "se_opt_emp",
    "m_opt_th",
];

impl BetaPoint {
    pub fn row(&self) -> Vec<f64> {
        let s = &self.summary;
        let mut row = vec![self.beta];
        match &s.oracle_labels {
            Some(y) => row.extend(y.iter()),
            None => row.extend([f64::NAN; 4]),
        }
        row.extend([
            s.naive.empirical_error.mean,
            s.naive.empirical_error.se,
            s.naive.oracle_error.mean,
            s.calibrated.empirical_error.mean,
            s.calibrated.empirical_error.se,
            s.oracle_epsilon_star.mean,
        ]);
        row
    }
}

pub fn beta_sweep(betas: &[f64], master_seed: u64, trials: usize, options: &CalibrationOptions) -> Vec<BetaPoint> {
    betas
        .iter()
        .enumerate()
        .map(|(k, &beta)| BetaPoint {
            beta,
            summary: run_trials(&ScenarioSpec::beta(beta, trial_seed(master_seed, 1_000_000 + k)), 0, options, trials),
        })
        .collect()
}

/// `count` evenly spaced values from `a` to `b`.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImbalancePoint {
    pub n_l1: usize,
    pub summary: TrialSummary,
    /// Oracle optimal labels and equal-error threshold, normalized by the label norm.
    pub labels: Option<DVector<f64>>,
    pub zeta: Option<f64>,
}

pub const IMBALANCE_COLUMNS: [&str; 10] = [
    "n_l1",
    "y1",
    "y2",
    "zeta",
    "m_naive_emp",
    "se_naive_emp",
    "m_naive_th",
    "m_opt_emp",
    "se_opt_emp",
    "m_opt_th",
];

impl ImbalancePoint {
    pub fn row(&self) -> Vec<f64> {
        let s = &self.summary;
        let (y1, y2) = self.labels.as_ref().map_or((f64::NAN, f64::NAN), |y| (y[0], y[1]));
        vec![
            self.n_l1 as f64,
            y1,
            y2,
            self.zeta.unwrap_or(f64::NAN),
            s.naive.empirical_error.mean,
            s.naive.empirical_error.se,
            s.naive.oracle_error.mean,
            s.calibrated.empirical_error.mean,
            s.calibrated.empirical_error.se,
            s.calibrated.oracle_error.mean,
        ]
    }
}

pub fn imbalance_sweep(n_l1s: &[usize], master_seed: u64, trials: usize, options: &CalibrationOptions) -> Vec<ImbalancePoint> {
    n_l1s
        .iter()
        .enumerate()
        .map(|(k, &n_l1)| {
            let summary = run_trials(&ScenarioSpec::imbalance(n_l1, trial_seed(master_seed, 2_000_000 + k)), 0, options, trials);
            let zetas: Vec<f64> = summary
                .trials
                .iter()
                .filter_map(|t| t.calibrated.as_ref().and_then(|c| c.oracle.as_ref()).map(|o| o.zeta))
                .collect();
            let labels = summary.oracle_labels.clone();
            let zeta = (!zetas.is_empty()).then(|| Estimate::of(&zetas).mean);
            ImbalancePoint {
                n_l1,
                summary,
                labels,
                zeta,
            }
        })
        .collect()
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Pooled within-class standard deviation of the target scores.
pub fn pooled_std(trial: &PipelineTrial) -> f64 {
    let [n1, n2] = trial.unlabeled_counts.map(|n| n as f64);
    let [s1, s2] = trial.score_std;
    (((n1 - 1.0) * s1 * s1 + (n2 - 1.0) * s2 * s2) / (n1 + n2 - 2.0)).sqrt()
}

/// Whether each empirical class mean lies within `4σ/√n_uj` of its
/// prediction under the true means, and whether the pooled empirical
/// standard deviation lies within 10% of `σ`.
pub fn moment_agreement(trial: &PipelineTrial) -> Option<([bool; 2], bool)> {
    let oracle = trial.oracle.as_ref()?;
    let means = [0, 1].map(|j| {
        let n = trial.unlabeled_counts[j] as f64;
        (trial.score_mean[j] - oracle.m[j]).abs() <= 4.0 * oracle.sigma / n.sqrt()
    });
    let std_ok = (pooled_std(trial) - oracle.sigma).abs() <= 0.1 * oracle.sigma;
    Some((means, std_ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format_matches_c() {
        assert_eq!(format_sci(1.0), "1.000000e+00");
        assert_eq!(format_sci(-0.00123), "-1.230000e-03");
        assert_eq!(format_sci(12345.678), "1.234568e+04");
        assert_eq!(format_sci(0.0), "0.000000e+00");
        assert_eq!(format_sci(1e-120), "1.000000e-120");
    }

    #[test]
    fn beta_zero_is_orthogonal() {
        let g = generate(&ScenarioSpec::beta(0.0, 3)).unwrap();
        let d0 = &g.means[0][1] - &g.means[0][0];
        let d1 = &g.means[1][1] - &g.means[1][0];
        assert!(d0.dot(&d1).abs() < 1e-12);
        assert!((d0.norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn beta_one_tasks_share_directions() {
        let g = generate(&ScenarioSpec::beta(1.0, 5)).unwrap();
        assert!((&g.means[0][1] - &g.means[1][1]).norm() < 1e-12);
        assert!((lambda_from_gram(&g.cal_m).unwrap()[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&ScenarioSpec::imbalance(300, 9)).unwrap();
        let b = generate(&ScenarioSpec::imbalance(300, 9)).unwrap();
        assert_eq!(a.dataset, b.dataset);
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_eq!(trial_seed(1, 4), trial_seed(1, 4));
    }

    #[test]
    fn expected_uncertainty_limits() {
        let reliable = expected_uncertainty(100.0, 0.0, 0.7);
        assert_eq!(reliable.d_bar, DMatrix::identity(2, 2));
        assert_eq!(reliable.d_tilde, DMatrix::identity(2, 2) * 0.5);
        let coin = expected_uncertainty(0.0, 100.0, 0.5);
        assert!(coin.d_bar.iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(coin.d_tilde.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn r2_of_exact_line() {
        assert!((linear_fit_r2(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
    }
}
