//! Problem data and dimension bookkeeping.
//!
//! Samples are stored column-wise: every task owns a `p × n_ℓ` block of
//! labeled columns and a `p × n_u` block of unlabeled columns. All 2T-vectors
//! follow the ordering `(t=1,j=1), (t=1,j=2), (t=2,j=1), ...`, i.e. the entry
//! for task `t` (0-based) and class `j` (0-based) lives at `2t + j`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `d_1 + d_2 = 1` for probabilistic labels.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// One of the two classes of a binary task. Displayed and serialized as 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Class {
    C1,
    C2,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::C1, Class::C2];

    /// Zero-based index, used to address 2T-vectors.
    pub fn index(self) -> usize {
        match self {
            Class::C1 => 0,
            Class::C2 => 1,
        }
    }

    /// One-based class number.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Class::C1),
            1 => Some(Class::C2),
            _ => None,
        }
    }

    pub fn from_number(number: u8) -> Option<Self> {
        match number {
            1 => Some(Class::C1),
            2 => Some(Class::C2),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Class::C1 => Class::C2,
            Class::C2 => Class::C1,
        }
    }
}

impl From<Class> for u8 {
    fn from(class: Class) -> u8 {
        class.number()
    }
}

impl TryFrom<u8> for Class {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        Class::from_number(value).ok_or_else(|| format!("class must be 1 or 2, got {value}"))
    }
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Position of `(task, class)` in a 2T-vector.
#[inline]
pub fn slot(task: usize, class: Class) -> usize {
    2 * task + class.index()
}

/// Labels attached to the labeled columns of one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LabelAssignment {
    Certain(Vec<Class>),
    /// Rows `(d_1, d_2)` of class probabilities. `genuine` carries the true
    /// classes when they are known (synthetic benchmarks).
    Probabilistic {
        probs: Vec<[f64; 2]>,
        genuine: Option<Vec<Class>>,
    },
}

impl LabelAssignment {
    pub fn len(&self) -> usize {
        match self {
            LabelAssignment::Certain(classes) => classes.len(),
            LabelAssignment::Probabilistic { probs, .. } => probs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_certain(&self) -> bool {
        matches!(self, LabelAssignment::Certain(_))
    }

    fn validate(&self) -> Result<()> {
        if let LabelAssignment::Probabilistic { probs, genuine } = self {
            for (i, [d1, d2]) in probs.iter().enumerate() {
                if !(*d1 >= 0.0 && *d2 >= 0.0) || (d1 + d2 - 1.0).abs() > PROBABILITY_TOLERANCE {
                    return Err(Error::InvalidDataset(format!(
                        "label probabilities ({d1}, {d2}) of sample {i} are not a distribution"
                    )));
                }
            }
            if let Some(genuine) = genuine {
                if genuine.len() != probs.len() {
                    return Err(Error::InvalidDataset(format!(
                        "{} genuine classes for {} probabilistic labels",
                        genuine.len(),
                        probs.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Per-sample rows `(d_1, d_2)`; certain labels map to `(1,0)` or `(0,1)`.
    pub fn probabilities(&self) -> Vec<[f64; 2]> {
        match self {
            LabelAssignment::Certain(classes) => classes
                .iter()
                .map(|c| match c {
                    Class::C1 => [1.0, 0.0],
                    Class::C2 => [0.0, 1.0],
                })
                .collect(),
            LabelAssignment::Probabilistic { probs, .. } => probs.clone(),
        }
    }

    /// Ground-truth classes when available.
    pub fn genuine(&self) -> Option<&[Class]> {
        match self {
            LabelAssignment::Certain(classes) => Some(classes),
            LabelAssignment::Probabilistic { genuine, .. } => genuine.as_deref(),
        }
    }

    /// Genuine classes if known, otherwise the most probable class (ties go to class 2).
    pub fn hard_classes(&self) -> Vec<Class> {
        if let Some(genuine) = self.genuine() {
            return genuine.to_vec();
        }
        self.probabilities()
            .iter()
            .map(|[d1, d2]| if d1 > d2 { Class::C1 } else { Class::C2 })
            .collect()
    }

    /// Per-class labeled counts: exact when classes are known, expected
    /// (sum of probabilities) otherwise.
    pub fn class_counts(&self) -> [f64; 2] {
        match self.genuine() {
            Some(classes) => {
                let mut counts = [0.0; 2];
                for c in classes {
                    counts[c.index()] += 1.0;
                }
                counts
            }
            None => self
                .probabilities()
                .iter()
                .fold([0.0; 2], |acc, d| [acc[0] + d[0], acc[1] + d[1]]),
        }
    }
}

/// Labeled and unlabeled samples of one task.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskData {
    labeled: DMatrix<f64>,
    unlabeled: DMatrix<f64>,
    labels: LabelAssignment,
    unlabeled_truth: Option<Vec<Class>>,
}

impl TaskData {
    pub fn new(
        labeled: DMatrix<f64>,
        unlabeled: DMatrix<f64>,
        labels: LabelAssignment,
    ) -> Result<Self> {
        if labeled.ncols() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} labeled columns but {} labels",
                labeled.ncols(),
                labels.len()
            )));
        }
        if labeled.nrows() != unlabeled.nrows() {
            return Err(Error::InvalidDataset(format!(
                "labeled block has {} rows, unlabeled block has {}",
                labeled.nrows(),
                unlabeled.nrows()
            )));
        }
        if labeled.ncols() + unlabeled.ncols() == 0 {
            return Err(Error::InvalidDataset("task has no samples".into()));
        }
        labels.validate()?;
        Ok(Self {
            labeled,
            unlabeled,
            labels,
            unlabeled_truth: None,
        })
    }

    /// Attaches the true classes of the unlabeled samples (benchmark mode).
    pub fn with_unlabeled_truth(mut self, truth: Vec<Class>) -> Result<Self> {
        if truth.len() != self.unlabeled.ncols() {
            return Err(Error::InvalidDataset(format!(
                "{} unlabeled truth entries for {} unlabeled columns",
                truth.len(),
                self.unlabeled.ncols()
            )));
        }
        self.unlabeled_truth = Some(truth);
        Ok(self)
    }

    pub fn labeled(&self) -> &DMatrix<f64> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &DMatrix<f64> {
        &self.unlabeled
    }

    pub fn labels(&self) -> &LabelAssignment {
        &self.labels
    }

    pub fn unlabeled_truth(&self) -> Option<&[Class]> {
        self.unlabeled_truth.as_deref()
    }

    pub fn feature_dim(&self) -> usize {
        self.labeled.nrows()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.ncols()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.ncols()
    }

    pub fn n(&self) -> usize {
        self.n_labeled() + self.n_unlabeled()
    }

    /// Class counts of the labeled and unlabeled parts. Unlabeled counts come
    /// from the attached truth, or else split `n_u` along the labeled class
    /// proportions.
    pub fn counts(&self) -> TaskCounts {
        let labeled = self.labels.class_counts();
        let n_u = self.n_unlabeled() as f64;
        let unlabeled = match &self.unlabeled_truth {
            Some(truth) => {
                let mut counts = [0.0; 2];
                for c in truth {
                    counts[c.index()] += 1.0;
                }
                counts
            }
            None => {
                let n_l = labeled[0] + labeled[1];
                if n_l > 0.0 {
                    [n_u * labeled[0] / n_l, n_u * labeled[1] / n_l]
                } else {
                    [n_u / 2.0, n_u / 2.0]
                }
            }
        };
        TaskCounts { labeled, unlabeled }
    }

    fn map_blocks(&self, f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>)) -> Self {
        let (labeled, unlabeled) = f(&self.labeled, &self.unlabeled);
        Self {
            labeled,
            unlabeled,
            labels: self.labels.clone(),
            unlabeled_truth: self.unlabeled_truth.clone(),
        }
    }
}

/// Per-class sample counts of one task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub labeled: [f64; 2],
    pub unlabeled: [f64; 2],
}

impl TaskCounts {
    pub fn balanced(n_labeled_per_class: usize, n_unlabeled_per_class: usize) -> Self {
        Self {
            labeled: [n_labeled_per_class as f64; 2],
            unlabeled: [n_unlabeled_per_class as f64; 2],
        }
    }

    pub fn class_total(&self, class: usize) -> f64 {
        self.labeled[class] + self.unlabeled[class]
    }

    pub fn total(&self) -> f64 {
        self.class_total(0) + self.class_total(1)
    }

    pub fn labeled_total(&self) -> f64 {
        self.labeled[0] + self.labeled[1]
    }
}

/// A multi-task dataset: every task shares the feature dimension `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    tasks: Vec<TaskData>,
    p: usize,
}

impl Dataset {
    pub fn new(tasks: Vec<TaskData>) -> Result<Self> {
        let p = tasks
            .first()
            .ok_or_else(|| Error::InvalidDataset("a dataset needs at least one task".into()))?
            .feature_dim();
        if p == 0 {
            return Err(Error::InvalidDataset("feature dimension must be positive".into()));
        }
        if let Some((t, task)) = tasks.iter().enumerate().find(|(_, task)| task.feature_dim() != p) {
            return Err(Error::DimensionMismatch(format!(
                "task {} has feature dimension {}, task 1 has {p}",
                t + 1,
                task.feature_dim()
            )));
        }
        Ok(Self { tasks, p })
    }

    pub fn tasks(&self) -> &[TaskData] {
        &self.tasks
    }

    pub fn task(&self, t: usize) -> &TaskData {
        &self.tasks[t]
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.p
    }

    pub fn n_total(&self) -> usize {
        self.tasks.iter().map(TaskData::n).sum()
    }

    pub fn n_unlabeled_total(&self) -> usize {
        self.tasks.iter().map(TaskData::n_unlabeled).sum()
    }

    /// Replaces every task block `X^t` by `X^t P^t`, subtracting from each row
    /// its mean over the labeled and unlabeled columns of the task jointly.
    pub fn center_taskwise(&self) -> Dataset {
        let tasks = self
            .tasks
            .iter()
            .map(|task| {
                task.map_blocks(|labeled, unlabeled| {
                    let n = (labeled.ncols() + unlabeled.ncols()) as f64;
                    let mean = (labeled.column_sum() + unlabeled.column_sum()) / n;
                    let mut labeled = labeled.clone();
                    let mut unlabeled = unlabeled.clone();
                    for mut col in labeled.column_iter_mut() {
                        col -= &mean;
                    }
                    for mut col in unlabeled.column_iter_mut() {
                        col -= &mean;
                    }
                    (labeled, unlabeled)
                })
            })
            .collect();
        Dataset { tasks, p: self.p }
    }

    /// Multiplies every feature by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        let tasks = self
            .tasks
            .iter()
            .map(|task| task.map_blocks(|l, u| (l * factor, u * factor)))
            .collect();
        Dataset { tasks, p: self.p }
    }
}

/// Free-function form of [`Dataset::center_taskwise`].
pub fn center_taskwise(dataset: &Dataset) -> Dataset {
    dataset.center_taskwise()
}

/// Finite-sample proxies of the proportional growth regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub p: usize,
    /// Total sample count, possibly fractional when class counts are expected values.
    pub n: f64,
    /// `p / n`
    pub c: f64,
    /// `n_j^t / n`, length 2T.
    pub rho: DVector<f64>,
    /// `n^t / n`, length T.
    pub rho_bar: DVector<f64>,
    /// `n_{ℓj}^t / n_j^t`, length 2T.
    pub eta: DVector<f64>,
    /// `n_ℓ^t / n^t`, length T.
    pub eta_bar: DVector<f64>,
    pub counts: Vec<TaskCounts>,
}

impl GrowthProfile {
    /// Builds the profile from per-task class counts. Every class of every
    /// task needs at least one labeled sample.
    pub fn from_counts(p: usize, counts: &[TaskCounts]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDataset("no tasks".into()));
        }
        for (t, tc) in counts.iter().enumerate() {
            for j in 0..2 {
                if tc.class_total(j) <= 0.0 {
                    return Err(Error::DegenerateClass {
                        task: t + 1,
                        class: j + 1,
                        what: "no samples",
                    });
                }
                if tc.labeled[j] <= 0.0 {
                    return Err(Error::DegenerateClass {
                        task: t + 1,
                        class: j + 1,
                        what: "no labeled samples",
                    });
                }
            }
        }
        let task_count = counts.len();
        let n: f64 = counts.iter().map(TaskCounts::total).sum();
        let mut rho = DVector::zeros(2 * task_count);
        let mut eta = DVector::zeros(2 * task_count);
        let mut rho_bar = DVector::zeros(task_count);
        let mut eta_bar = DVector::zeros(task_count);
        for (t, tc) in counts.iter().enumerate() {
            for j in 0..2 {
                rho[2 * t + j] = tc.class_total(j) / n;
                eta[2 * t + j] = tc.labeled[j] / tc.class_total(j);
            }
            rho_bar[t] = tc.total() / n;
            eta_bar[t] = tc.labeled_total() / tc.total();
        }
        Ok(Self {
            p,
            n,
            c: p as f64 / n,
            rho,
            rho_bar,
            eta,
            eta_bar,
            counts: counts.to_vec(),
        })
    }

    pub fn task_count(&self) -> usize {
        self.rho_bar.len()
    }
}

/// Growth profile of a dataset, see [`TaskData::counts`] for how unlabeled
/// class counts are obtained.
pub fn growth_profile_of(dataset: &Dataset) -> Result<GrowthProfile> {
    let counts: Vec<TaskCounts> = dataset.tasks().iter().map(TaskData::counts).collect();
    GrowthProfile::from_counts(dataset.feature_dim(), &counts)
}

/// Which linear system is solved for the score vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverPath {
    /// `n × n` system on the sample side.
    DirectN,
    /// `Tp × Tp` system on the feature side, through the Woodbury identity.
    WoodburyTp,
    /// `DirectN` when `n ≤ Tp`, `WoodburyTp` otherwise.
    #[default]
    Auto,
}

impl std::str::FromStr for SolverPath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "direct-n" | "direct" => Ok(SolverPath::DirectN),
            "woodbury-tp" | "woodbury" => Ok(SolverPath::WoodburyTp),
            "auto" => Ok(SolverPath::Auto),
            other => Err(format!(
                "unknown solver '{other}' (expected direct-n, woodbury-tp or auto)"
            )),
        }
    }
}

/// Hyperparameters and decision parameters of the classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha: f64,
    /// `T × T` task-relatedness matrix with unit diagonal.
    pub lambda: DMatrix<f64>,
    /// Label value per (task, class), length 2T.
    pub y_tilde: DVector<f64>,
    /// Decision threshold per task, length T.
    pub thresholds: DVector<f64>,
    pub solver: SolverPath,
}

impl ModelConfig {
    /// `±1` labels, zero thresholds.
    pub fn naive(alpha: f64, lambda: DMatrix<f64>) -> Self {
        let task_count = lambda.nrows();
        let y_tilde = DVector::from_fn(2 * task_count, |k, _| if k % 2 == 0 { -1.0 } else { 1.0 });
        Self {
            alpha,
            lambda,
            y_tilde,
            thresholds: DVector::zeros(task_count),
            solver: SolverPath::Auto,
        }
    }

    pub fn task_count(&self) -> usize {
        self.lambda.nrows()
    }

    /// `Λ / α`
    pub fn lambda_tilde(&self) -> DMatrix<f64> {
        &self.lambda / self.alpha
    }

    pub fn validate(&self, task_count: usize) -> Result<()> {
        let t = task_count;
        if self.lambda.nrows() != t || self.lambda.ncols() != t {
            return Err(Error::DimensionMismatch(format!(
                "lambda is {}x{}, expected {t}x{t}",
                self.lambda.nrows(),
                self.lambda.ncols()
            )));
        }
        if self.y_tilde.len() != 2 * t {
            return Err(Error::DimensionMismatch(format!(
                "label vector has length {}, expected {}",
                self.y_tilde.len(),
                2 * t
            )));
        }
        if self.thresholds.len() != t {
            return Err(Error::DimensionMismatch(format!(
                "{} thresholds for {t} tasks",
                self.thresholds.len()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidDataset(format!("alpha must be positive, got {}", self.alpha)));
        }
        validate_lambda(&self.lambda)
    }
}

/// Λ must be symmetric with unit diagonal and entries bounded by 1 in magnitude.
pub fn validate_lambda(lambda: &DMatrix<f64>) -> Result<()> {
    let t = lambda.nrows();
    for a in 0..t {
        if (lambda[(a, a)] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDataset(format!(
                "lambda diagonal entry {} is {}, expected 1",
                a + 1,
                lambda[(a, a)]
            )));
        }
        for b in 0..t {
            let v = lambda[(a, b)];
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 || (v - lambda[(b, a)]).abs() > 1e-12 {
                return Err(Error::InvalidDataset(format!(
                    "lambda entry ({}, {}) = {v} breaks symmetry or |Λ| ≤ 1",
                    a + 1,
                    b + 1
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(labeled: DMatrix<f64>, unlabeled: DMatrix<f64>, classes: Vec<Class>) -> TaskData {
        TaskData::new(labeled, unlabeled, LabelAssignment::Certain(classes)).unwrap()
    }

    fn counts_task(p: usize, nl: [usize; 2], nu: [usize; 2]) -> TaskData {
        let mut classes = vec![Class::C1; nl[0]];
        classes.extend(vec![Class::C2; nl[1]]);
        let mut truth = vec![Class::C1; nu[0]];
        truth.extend(vec![Class::C2; nu[1]]);
        task(
            DMatrix::zeros(p, nl[0] + nl[1]),
            DMatrix::zeros(p, nu[0] + nu[1]),
            classes,
        )
        .with_unlabeled_truth(truth)
        .unwrap()
    }

    #[test]
    fn single_task_profile() {
        let ds = Dataset::new(vec![counts_task(200, [500, 500], [200, 200])]).unwrap();
        let g = growth_profile_of(&ds).unwrap();
        assert_eq!(g.c, 200.0 / 1400.0);
        assert_eq!(g.rho.as_slice(), &[0.5, 0.5]);
        assert_eq!(g.eta.as_slice(), &[500.0 / 700.0, 500.0 / 700.0]);
        assert_eq!(g.rho_bar[0], 1.0);
    }

    #[test]
    fn two_task_profile_of_the_transfer_setting() {
        let ds = Dataset::new(vec![
            counts_task(200, [50, 50], [125, 125]),
            counts_task(200, [500, 500], [125, 125]),
        ])
        .unwrap();
        let g = growth_profile_of(&ds).unwrap();
        assert_eq!(g.n, 1600.0);
        assert_eq!(g.c, 0.125);
        assert!((g.rho_bar.sum() - 1.0).abs() < 1e-15);
        for t in 0..2 {
            assert!((g.rho[2 * t] + g.rho[2 * t + 1] - g.rho_bar[t]).abs() < 1e-15);
        }
    }

    #[test]
    fn task_without_unlabeled_data_has_full_eta() {
        let ds = Dataset::new(vec![
            counts_task(3, [2, 2], [0, 0]),
            counts_task(3, [1, 1], [4, 4]),
        ])
        .unwrap();
        let g = growth_profile_of(&ds).unwrap();
        assert_eq!(g.eta_bar[0], 1.0);
        assert_eq!(g.eta[0], 1.0);
        assert_eq!(g.eta[1], 1.0);
    }

    #[test]
    fn missing_labeled_class_is_degenerate() {
        let ds = Dataset::new(vec![counts_task(3, [2, 0], [1, 1])]).unwrap();
        let err = growth_profile_of(&ds).unwrap_err();
        assert_eq!(err.kind(), "DegenerateClass");
    }

    #[test]
    fn centering_small_block() {
        let labeled = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let unlabeled = DMatrix::from_row_slice(2, 1, &[3.0, 2.0]);
        let ds = Dataset::new(vec![task(labeled, unlabeled, vec![Class::C1])]).unwrap();
        let centered = ds.center_taskwise();
        assert_eq!(centered.task(0).labeled().as_slice(), &[-1.0, 0.0]);
        assert_eq!(centered.task(0).unlabeled().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn centering_annihilates_identical_columns() {
        let col = [0.3, -1.2, 4.0];
        let labeled = DMatrix::from_fn(3, 2, |i, _| col[i]);
        let unlabeled = DMatrix::from_fn(3, 3, |i, _| col[i]);
        let ds = Dataset::new(vec![task(labeled, unlabeled, vec![Class::C1, Class::C2])]).unwrap();
        let centered = ds.center_taskwise();
        assert!(centered.task(0).labeled().iter().all(|v| v.abs() < 1e-15));
        assert!(centered.task(0).unlabeled().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn probabilistic_labels_must_sum_to_one() {
        let labels = LabelAssignment::Probabilistic {
            probs: vec![[0.6, 0.5]],
            genuine: None,
        };
        assert!(TaskData::new(DMatrix::zeros(2, 1), DMatrix::zeros(2, 0), labels).is_err());
    }

    #[test]
    fn mismatched_feature_dims_are_rejected() {
        let a = counts_task(3, [1, 1], [0, 0]);
        let b = counts_task(4, [1, 1], [0, 0]);
        assert_eq!(Dataset::new(vec![a, b]).unwrap_err().kind(), "DimensionMismatch");
    }

    #[test]
    fn lambda_validation() {
        let mut lambda = DMatrix::identity(2, 2);
        assert!(validate_lambda(&lambda).is_ok());
        lambda[(0, 1)] = 0.5;
        assert!(validate_lambda(&lambda).is_err());
        lambda[(1, 0)] = 0.5;
        assert!(validate_lambda(&lambda).is_ok());
        lambda[(0, 0)] = 0.9;
        assert!(validate_lambda(&lambda).is_err());
    }
}
