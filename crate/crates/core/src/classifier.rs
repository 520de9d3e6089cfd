//! Score computation and the thresholded decision rule.
//!
//! The weight matrix `W̃` has blocks `Λ^{tt'} X^{tᵀ}X^{t'} / (Tp)`; the scores
//! solve `(I_n − W̃/α) f = y` with `y_u = 0`. Neither `W̃` nor the block
//! data matrix `Z` is formed unless the `n × n` path is selected.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{slot, Class, Dataset, ModelConfig, SolverPath, TaskData};
use crate::error::{Error, Result};
use crate::linalg::sym_sqrt_psd;

const POWER_MAX_ITER: usize = 10_000;
const POWER_STOP: f64 = 1e-15;
const POWER_ACCEPT: f64 = 1e-9;

/// Scores of the unlabeled samples, task by task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: DVector<f64>,
    /// `(task, index within the task's unlabeled block)` per entry.
    pub provenance: Vec<(usize, usize)>,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores belonging to task `t`.
    pub fn task_scores(&self, t: usize) -> Vec<f64> {
        self.provenance
            .iter()
            .zip(self.scores.iter())
            .filter(|((task, _), _)| *task == t)
            .map(|(_, s)| *s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub classes: Vec<Class>,
    pub thresholds: DVector<f64>,
}

/// Labels of the labeled samples of every task, `y_ℓ = D ỹ`.
pub fn labeled_targets(dataset: &Dataset, y_tilde: &DVector<f64>) -> Vec<DVector<f64>> {
    dataset
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let y1 = y_tilde[slot(t, Class::C1)];
            let y2 = y_tilde[slot(t, Class::C2)];
            let probs = task.labels().probabilities();
            DVector::from_iterator(probs.len(), probs.iter().map(|[d1, d2]| d1 * y1 + d2 * y2))
        })
        .collect()
}

fn task_matrix(task: &TaskData) -> DMatrix<f64> {
    let p = task.feature_dim();
    let (nl, nu) = (task.n_labeled(), task.n_unlabeled());
    let mut x = DMatrix::zeros(p, nl + nu);
    x.columns_mut(0, nl).copy_from(task.labeled());
    x.columns_mut(nl, nu).copy_from(task.unlabeled());
    x
}

fn offsets(dataset: &Dataset) -> Vec<usize> {
    let mut off = Vec::with_capacity(dataset.task_count() + 1);
    off.push(0);
    for task in dataset.tasks() {
        off.push(off.last().unwrap() + task.n());
    }
    off
}

/// `W̃ v` through the per-task factorization.
fn apply_wtilde(dataset: &Dataset, lambda: &DMatrix<f64>, off: &[usize], v: &DVector<f64>) -> DVector<f64> {
    let t_count = dataset.task_count();
    let scale = 1.0 / (t_count * dataset.feature_dim()) as f64;
    let projected: Vec<DVector<f64>> = dataset
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let nl = task.n_labeled();
            task.labeled() * v.rows(off[t], nl) + task.unlabeled() * v.rows(off[t] + nl, task.n_unlabeled())
        })
        .collect();
    let mut out = DVector::zeros(v.len());
    for (s, task) in dataset.tasks().iter().enumerate() {
        let mut mixed = DVector::zeros(dataset.feature_dim());
        for (t, u) in projected.iter().enumerate() {
            if lambda[(s, t)] != 0.0 {
                mixed.axpy(lambda[(s, t)], u, 1.0);
            }
        }
        let nl = task.n_labeled();
        out.rows_mut(off[s], nl).copy_from(&(task.labeled().tr_mul(&mixed) * scale));
        out.rows_mut(off[s] + nl, task.n_unlabeled())
            .copy_from(&(task.unlabeled().tr_mul(&mixed) * scale));
    }
    out
}

/// Spectral norm of `W̃` by power iteration on the implicit operator.
pub fn spectral_norm_wtilde(dataset: &Dataset, lambda: &DMatrix<f64>) -> Result<f64> {
    let t_count = dataset.task_count();
    if lambda.nrows() != t_count || lambda.ncols() != t_count {
        return Err(Error::DimensionMismatch(format!(
            "lambda is {}x{} for {t_count} tasks",
            lambda.nrows(),
            lambda.ncols()
        )));
    }
    let off = offsets(dataset);
    let n = *off.last().unwrap();
    // The constant vector spans the null space of every centered block, so
    // start from a fixed pseudo-random direction instead.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_c0ffee);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    v /= v.norm();
    let mut estimate = 0.0;
    let mut change = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let w = apply_wtilde(dataset, lambda, &off, &v);
        let next = w.norm();
        if next == 0.0 {
            return Ok(0.0);
        }
        change = (next - estimate).abs() / next;
        estimate = next;
        v = w / next;
        if change < POWER_STOP {
            return Ok(estimate);
        }
    }
    if change > POWER_ACCEPT {
        return Err(Error::NoConvergence {
            what: "power iteration for the spectral norm",
            residual: change,
            iterations: POWER_MAX_ITER,
        });
    }
    Ok(estimate)
}

/// Explicitly assembled `W̃` (`n × n`), task blocks in dataset order.
pub fn assemble_wtilde(dataset: &Dataset, lambda: &DMatrix<f64>) -> DMatrix<f64> {
    let xs: Vec<DMatrix<f64>> = dataset.tasks().iter().map(task_matrix).collect();
    let off = offsets(dataset);
    let n = *off.last().unwrap();
    let scale = 1.0 / (dataset.task_count() * dataset.feature_dim()) as f64;
    let mut w = DMatrix::zeros(n, n);
    for (s, xs_) in xs.iter().enumerate() {
        for (t, xt) in xs.iter().enumerate() {
            let block = xs_.tr_mul(xt) * (lambda[(s, t)] * scale);
            w.view_mut((off[s], off[t]), (xs_.ncols(), xt.ncols())).copy_from(&block);
        }
    }
    w
}

/// Solves for the unlabeled scores, checking convexity first.
pub fn solve_scores(dataset: &Dataset, config: &ModelConfig) -> Result<ScoreVector> {
    config.validate(dataset.task_count())?;
    let norm = spectral_norm_wtilde(dataset, &config.lambda)?;
    solve_scores_with_norm(dataset, config, norm)
}

/// As [`solve_scores`], with a spectral norm of `W̃` computed by the caller.
pub fn solve_scores_with_norm(dataset: &Dataset, config: &ModelConfig, wtilde_norm: f64) -> Result<ScoreVector> {
    config.validate(dataset.task_count())?;
    if config.alpha <= wtilde_norm {
        return Err(Error::AlphaTooSmall {
            alpha: config.alpha,
            norm: wtilde_norm,
        });
    }
    let y = labeled_targets(dataset, &config.y_tilde);
    let tp = dataset.task_count() * dataset.feature_dim();
    let scores = match config.solver {
        SolverPath::DirectN => solve_direct(dataset, config, &y)?,
        SolverPath::WoodburyTp => solve_woodbury(dataset, config, &y)?,
        SolverPath::Auto if dataset.n_total() <= tp => solve_direct(dataset, config, &y)?,
        SolverPath::Auto => match solve_woodbury(dataset, config, &y) {
            Err(Error::IndefiniteLambda { .. }) => solve_direct(dataset, config, &y)?,
            other => other?,
        },
    };
    let provenance = dataset
        .tasks()
        .iter()
        .enumerate()
        .flat_map(|(t, task)| (0..task.n_unlabeled()).map(move |i| (t, i)))
        .collect();
    Ok(ScoreVector { scores, provenance })
}

fn solve_direct(dataset: &Dataset, config: &ModelConfig, y: &[DVector<f64>]) -> Result<DVector<f64>> {
    let off = offsets(dataset);
    let n = *off.last().unwrap();
    let mut system = assemble_wtilde(dataset, &config.lambda) * (-1.0 / config.alpha);
    for i in 0..n {
        system[(i, i)] += 1.0;
    }
    let mut rhs = DVector::zeros(n);
    for (t, yt) in y.iter().enumerate() {
        rhs.rows_mut(off[t], yt.len()).copy_from(yt);
    }
    let f = system
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("n×n system is not positive definite".into()))?
        .solve(&rhs);
    let mut out = DVector::zeros(dataset.n_unlabeled_total());
    let mut k = 0;
    for (t, task) in dataset.tasks().iter().enumerate() {
        let nu = task.n_unlabeled();
        out.rows_mut(k, nu).copy_from(&f.rows(off[t] + task.n_labeled(), nu));
        k += nu;
    }
    Ok(out)
}

fn solve_woodbury(dataset: &Dataset, config: &ModelConfig, y: &[DVector<f64>]) -> Result<DVector<f64>> {
    let t_count = dataset.task_count();
    let p = dataset.feature_dim();
    let scale = 1.0 / (t_count * p) as f64;
    let root = sym_sqrt_psd(&config.lambda_tilde())?;

    let grams: Vec<DMatrix<f64>> = dataset
        .tasks()
        .iter()
        .map(|task| {
            let mut g = task.labeled() * task.labeled().transpose();
            g.gemm(1.0, task.unlabeled(), &task.unlabeled().transpose(), 1.0);
            g
        })
        .collect();

    let mut system = DMatrix::<f64>::identity(t_count * p, t_count * p);
    for s in 0..t_count {
        for s2 in 0..t_count {
            let mut block = system.view_mut((s * p, s2 * p), (p, p));
            for (t, g) in grams.iter().enumerate() {
                let w = root[(s, t)] * root[(t, s2)] * scale;
                if w != 0.0 {
                    block -= g * w;
                }
            }
        }
    }

    let projected: Vec<DVector<f64>> = dataset
        .tasks()
        .iter()
        .zip(y)
        .map(|(task, yt)| task.labeled() * yt)
        .collect();
    let mut rhs = DVector::zeros(t_count * p);
    for s in 0..t_count {
        let mut b = rhs.rows_mut(s * p, p);
        for (t, h) in projected.iter().enumerate() {
            b.axpy(root[(s, t)], h, 1.0);
        }
    }

    let q = system
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("Tp×Tp system is not positive definite".into()))?
        .solve(&rhs);

    let mut out = DVector::zeros(dataset.n_unlabeled_total());
    let mut k = 0;
    for (t, task) in dataset.tasks().iter().enumerate() {
        let mut g = DVector::zeros(p);
        for s in 0..t_count {
            g.axpy(root[(t, s)], &q.rows(s * p, p), 1.0);
        }
        let nu = task.n_unlabeled();
        out.rows_mut(k, nu).copy_from(&(task.unlabeled().tr_mul(&g) * scale));
        k += nu;
    }
    Ok(out)
}

/// Class 1 when the score is below the task threshold, class 2 otherwise.
pub fn classify(scores: &ScoreVector, thresholds: &DVector<f64>) -> Prediction {
    let classes = scores
        .scores
        .iter()
        .zip(&scores.provenance)
        .map(|(s, (t, _))| if *s < thresholds[*t] { Class::C1 } else { Class::C2 })
        .collect();
    Prediction {
        classes,
        thresholds: thresholds.clone(),
    }
}

/// Per-class error rates `(ε₁, ε₂)` of the predictions for task `t`.
pub fn empirical_errors(prediction: &Prediction, scores: &ScoreVector, t: usize, truth: &[Class]) -> [f64; 2] {
    let mut wrong = [0usize; 2];
    let mut total = [0usize; 2];
    for (pred, (task, idx)) in prediction.classes.iter().zip(&scores.provenance) {
        if *task != t {
            continue;
        }
        let j = truth[*idx].index();
        total[j] += 1;
        if *pred != truth[*idx] {
            wrong[j] += 1;
        }
    }
    [0, 1].map(|j| if total[j] == 0 { 0.0 } else { wrong[j] as f64 / total[j] as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelAssignment;

    fn sv(scores: &[f64]) -> ScoreVector {
        ScoreVector {
            scores: DVector::from_column_slice(scores),
            provenance: (0..scores.len()).map(|i| (0, i)).collect(),
        }
    }

    #[test]
    fn classify_rule() {
        let z = DVector::from_element(1, 0.0);
        assert_eq!(classify(&sv(&[-1.0, 1.0]), &z).classes, vec![Class::C1, Class::C2]);
        assert_eq!(classify(&sv(&[0.0]), &z).classes, vec![Class::C2]);
        let half = DVector::from_element(1, 0.5);
        assert_eq!(classify(&sv(&[0.4, 0.6]), &half).classes, vec![Class::C1, Class::C2]);
    }

    fn single_column_dataset(x: &[f64]) -> Dataset {
        let task = TaskData::new(
            DMatrix::from_column_slice(x.len(), 1, x),
            DMatrix::zeros(x.len(), 0),
            LabelAssignment::Certain(vec![Class::C1]),
        )
        .unwrap();
        Dataset::new(vec![task]).unwrap()
    }

    #[test]
    fn norm_of_zero_data_is_zero() {
        let ds = single_column_dataset(&[0.0, 0.0, 0.0]);
        assert_eq!(spectral_norm_wtilde(&ds, &DMatrix::identity(1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn norm_of_rank_one() {
        let x = [1.0, 2.0, -2.0, 0.5];
        let ds = single_column_dataset(&x);
        let expected = x.iter().map(|v| v * v).sum::<f64>() / 4.0;
        let got = spectral_norm_wtilde(&ds, &DMatrix::identity(1, 1)).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn no_labels_give_zero_scores() {
        let task = TaskData::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, -0.5, 0.2, 0.1]),
            LabelAssignment::Certain(vec![Class::C1]),
        )
        .unwrap();
        let ds = Dataset::new(vec![task]).unwrap().center_taskwise();
        let mut cfg = ModelConfig::naive(10.0, DMatrix::identity(1, 1));
        cfg.y_tilde = DVector::zeros(2);
        let f = solve_scores(&ds, &cfg).unwrap();
        assert!(f.scores.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn small_alpha_is_rejected() {
        let ds = single_column_dataset(&[3.0, 4.0]);
        let cfg = ModelConfig::naive(1.0, DMatrix::identity(1, 1));
        assert!(matches!(solve_scores(&ds, &cfg), Err(Error::AlphaTooSmall { .. })));
    }
}
