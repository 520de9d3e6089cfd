//! Estimation of the data statistics, optimal labels, thresholds and the
//! regularization grid search.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::classifier::spectral_norm_wtilde;
use crate::data::{growth_profile_of, slot, Class, Dataset, GrowthProfile, ModelConfig, SolverPath};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, symmetrize};
use crate::theory::{solve_fixed_point, theory_stats, FixedPoint, Moments, TheoryInputs, TheoryStats};

pub const LABELS_CONDITION_LIMIT: f64 = 1e10;
const DEGENERATE_NORM: f64 = 1e-10;
const ACTIVE_ROW_TOL: f64 = 1e-14;

/// Standard Gaussian upper tail `𝒬(x)`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `𝒬⁻¹(q)` by Newton steps kept inside a shrinking bracket.
pub fn inverse_gaussian_tail(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError(format!("inverse tail needs q in (0, 1), got {q}")));
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut x = 0.0;
    for _ in 0..200 {
        let f = gaussian_tail(x) - q;
        if f == 0.0 {
            return Ok(x);
        }
        // 𝒬 is decreasing
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let newton = x + f / density;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Estimate of the Gram matrix `MᵀM` of the class means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanGramEstimate {
    pub cal_m_hat: DMatrix<f64>,
    /// Labeled samples used per (task, class) slot.
    pub sample_sizes: Vec<usize>,
    pub split_seed: u64,
}

/// Unbiased estimate of `MᵀM` from the labeled columns of a centered dataset.
///
/// Cross entries use the two class sums; a diagonal entry splits its class
/// into two random halves and pairs them.
pub fn estimate_mean_gram(dataset: &Dataset, seed: u64) -> Result<MeanGramEstimate> {
    let p = dataset.feature_dim();
    let k = 2 * dataset.task_count();
    let mut sums = Vec::with_capacity(k);
    let mut halves = Vec::with_capacity(k);
    let mut sizes = Vec::with_capacity(k);
    for (t, task) in dataset.tasks().iter().enumerate() {
        let classes = task.labels().hard_classes();
        for class in Class::BOTH {
            let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == class).collect();
            if members.len() < 2 {
                return Err(Error::InsufficientData {
                    task: t + 1,
                    class: class.number() as usize,
                    count: members.len(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(slot(t, class) as u64);
            members.shuffle(&mut rng);
            let split = members.len() / 2;
            let sum_of = |idx: &[usize]| {
                idx.iter()
                    .fold(DVector::zeros(p), |acc: DVector<f64>, &i| acc + task.labeled().column(i))
            };
            let first = sum_of(&members[..split]);
            let second = sum_of(&members[split..]);
            sums.push(&first + &second);
            halves.push((first, split, second, members.len() - split));
            sizes.push(members.len());
        }
    }
    let mut cal_m = DMatrix::zeros(k, k);
    for a in 0..k {
        let (h1, n1, h2, n2) = &halves[a];
        cal_m[(a, a)] = h1.dot(h2) / (*n1 as f64 * *n2 as f64);
        for b in a + 1..k {
            let v = sums[a].dot(&sums[b]) / (sizes[a] as f64 * sizes[b] as f64);
            cal_m[(a, b)] = v;
            cal_m[(b, a)] = v;
        }
    }
    Ok(MeanGramEstimate {
        cal_m_hat: cal_m,
        sample_sizes: sizes,
        split_seed: seed,
    })
}

/// `⟨μ₁^t − μ₂^t, μ₁^s − μ₂^s⟩` read off a mean Gram matrix.
pub fn difference_inner(cal_m: &DMatrix<f64>, t: usize, s: usize) -> f64 {
    let (t1, t2) = (slot(t, Class::C1), slot(t, Class::C2));
    let (s1, s2) = (slot(s, Class::C1), slot(s, Class::C2));
    cal_m[(t1, s1)] - cal_m[(t1, s2)] - cal_m[(t2, s1)] + cal_m[(t2, s2)]
}

/// Task relatedness: absolute cosine between class-mean differences.
pub fn lambda_from_gram(cal_m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let t_count = cal_m.nrows() / 2;
    let mut norms = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let sq = difference_inner(cal_m, t, t);
        if !(sq > DEGENERATE_NORM * DEGENERATE_NORM) {
            return Err(Error::DegenerateTask {
                task: t + 1,
                norm: sq.max(0.0).sqrt(),
            });
        }
        norms.push(sq.sqrt());
    }
    Ok(DMatrix::from_fn(t_count, t_count, |a, b| {
        if a == b {
            1.0
        } else {
            (difference_inner(cal_m, a, b).abs() / (norms[a] * norms[b])).min(1.0)
        }
    }))
}

pub fn estimate_lambda(estimate: &MeanGramEstimate) -> Result<DMatrix<f64>> {
    lambda_from_gram(&estimate.cal_m_hat)
}

/// Projects a mean Gram matrix onto the constraint met by centered means:
/// `n_1^t(μ_1^t − μ̄^t) + n_2^t(μ_2^t − μ̄^t) = 0` for every task.
pub fn project_centered(cal_m: &DMatrix<f64>, profile: &GrowthProfile) -> DMatrix<f64> {
    let k = cal_m.nrows();
    let mut proj = DMatrix::<f64>::identity(k, k);
    for t in 0..profile.task_count() {
        let (a, b) = (profile.rho[2 * t], profile.rho[2 * t + 1]);
        let norm = a * a + b * b;
        let idx = [2 * t, 2 * t + 1];
        let w = [a, b];
        for i in 0..2 {
            for j in 0..2 {
                proj[(idx[i], idx[j])] -= w[i] * w[j] / norm;
            }
        }
    }
    symmetrize(&(&proj * cal_m * &proj))
}

/// First and second moment statistics of the label probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyStats {
    pub d_bar: DMatrix<f64>,
    pub d_tilde: DMatrix<f64>,
}

fn task_uncertainty(
    probs: &[[f64; 2]],
    genuine: Option<&[Class]>,
    t: usize,
) -> Result<([[f64; 2]; 2], [[f64; 2]; 2])> {
    let n = probs.len() as f64;
    let mut tilde = [[0.0; 2]; 2];
    for d in probs {
        for j1 in 0..2 {
            for j2 in 0..2 {
                tilde[j1][j2] += d[j1] * d[j2] / n;
            }
        }
    }
    let genuine = genuine.ok_or(Error::GenuineClassUnknown { task: t + 1 })?;
    let mut bar = [[0.0; 2]; 2];
    let mut counts = [0usize; 2];
    for (d, c) in probs.iter().zip(genuine) {
        let j1 = c.index();
        counts[j1] += 1;
        bar[j1][0] += d[0];
        bar[j1][1] += d[1];
    }
    for j1 in 0..2 {
        if counts[j1] == 0 {
            return Err(Error::DegenerateClass {
                task: t + 1,
                class: j1 + 1,
                what: "no labeled samples",
            });
        }
        bar[j1][0] /= counts[j1] as f64;
        bar[j1][1] /= counts[j1] as f64;
    }
    Ok((bar, tilde))
}

fn place_blocks(blocks: &[[[f64; 2]; 2]]) -> DMatrix<f64> {
    let k = 2 * blocks.len();
    let mut m = DMatrix::zeros(k, k);
    for (t, block) in blocks.iter().enumerate() {
        for j1 in 0..2 {
            for j2 in 0..2 {
                m[(2 * t + j1, 2 * t + j2)] = block[j1][j2];
            }
        }
    }
    m
}

/// Exact `D̄` and `D̃`; fails when a task's genuine classes are unknown.
pub fn uncertainty_stats(dataset: &Dataset) -> Result<UncertaintyStats> {
    let mut bars = Vec::new();
    let mut tildes = Vec::new();
    for (t, task) in dataset.tasks().iter().enumerate() {
        let (bar, tilde) = task_uncertainty(&task.labels().probabilities(), task.labels().genuine(), t)?;
        bars.push(bar);
        tildes.push(tilde);
    }
    Ok(UncertaintyStats {
        d_bar: place_blocks(&bars),
        d_tilde: place_blocks(&tildes),
    })
}

/// As [`uncertainty_stats`], substituting an identity `D̄` block for tasks
/// whose genuine classes are unknown. Returns one warning per substitution.
pub fn uncertainty_stats_lenient(dataset: &Dataset) -> Result<(UncertaintyStats, Vec<String>)> {
    let mut bars = Vec::new();
    let mut tildes = Vec::new();
    let mut warnings = Vec::new();
    for (t, task) in dataset.tasks().iter().enumerate() {
        let probs = task.labels().probabilities();
        match task_uncertainty(&probs, task.labels().genuine(), t) {
            Ok((bar, tilde)) => {
                bars.push(bar);
                tildes.push(tilde);
            }
            Err(Error::GenuineClassUnknown { .. }) => {
                let proxy: Vec<Class> = task.labels().hard_classes();
                let (_, tilde) = task_uncertainty(&probs, Some(&proxy), t)?;
                bars.push([[1.0, 0.0], [0.0, 1.0]]);
                tildes.push(tilde);
                warnings.push(format!(
                    "task {}: genuine classes unknown, using an identity D̄ block",
                    t + 1
                ));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((
        UncertaintyStats {
            d_bar: place_blocks(&bars),
            d_tilde: place_blocks(&tildes),
        },
        warnings,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalLabels {
    /// `B⁻¹(a₂ − a₁)`
    pub raw: DVector<f64>,
    /// Unit norm, entry `(t, 2)` nonnegative.
    pub normalized: DVector<f64>,
}

/// Coordinates whose row of `B` is not numerically zero. Tasks decoupled
/// from the target contribute zero rows and get zero labels.
fn active_coordinates(b: &DMatrix<f64>) -> Vec<usize> {
    let scale = b.amax();
    (0..b.nrows())
        .filter(|&i| b.row(i).amax() > ACTIVE_ROW_TOL * scale)
        .collect()
}

/// `B⁻¹(a₂ − a₁)` restricted to the active coordinates.
fn solve_active(stats: &TheoryStats, limit: Option<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let diff = stats.a_diff();
    let active = active_coordinates(&stats.b);
    let b = stats.b.select_rows(&active).select_columns(&active);
    let d = diff.select_rows(&active);
    if let Some(limit) = limit {
        let condition = condition_number(&b);
        if !(condition <= limit) {
            return Err(Error::IllConditioned { condition, limit });
        }
    }
    let solved = b
        .lu()
        .solve(&d)
        .ok_or_else(|| Error::Singular("B is not invertible".into()))?;
    let mut full = DVector::zeros(diff.len());
    for (k, &i) in active.iter().enumerate() {
        full[i] = solved[k];
    }
    Ok((full, diff))
}

/// Labels maximizing the standardized separation of the target task.
pub fn optimal_labels(stats: &TheoryStats) -> Result<OptimalLabels> {
    let (raw, _) = solve_active(stats, Some(LABELS_CONDITION_LIMIT))?;
    let norm = raw.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateSeparation { m1: 0.0, m2: 0.0 });
    }
    let sign = if stats.a_diff().dot(&raw) < 0.0 { -1.0 } else { 1.0 };
    let normalized = &raw * (sign / norm);
    Ok(OptimalLabels { raw, normalized })
}

/// `𝒬(½√((a₂−a₁)ᵀB⁻¹(a₂−a₁)))`, the error reached by the optimal labels.
pub fn optimal_error(stats: &TheoryStats) -> Result<f64> {
    let (solved, diff) = solve_active(stats, None)?;
    let quad = diff.dot(&solved).max(0.0);
    Ok(gaussian_tail(0.5 * quad.sqrt()))
}

/// How the per-task decision threshold trades off the two error types.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdPolicy {
    #[default]
    EqualError,
    /// Minimizes the total error under the given unlabeled class counts.
    WeightedPrior { n_u1: f64, n_u2: f64 },
    /// Keeps the class-2 error at `p`.
    FalseNegativeCap { p: f64 },
}

impl std::str::FromStr for ThresholdPolicy {
    type Err = String;

    /// `equal-error`, `weighted-prior:N1:N2` or `false-negative-cap:P`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| v.parse::<f64>().map_err(|e| format!("bad number '{v}': {e}"));
        match parts.as_slice() {
            ["equal-error"] => Ok(ThresholdPolicy::EqualError),
            ["weighted-prior", a, b] => Ok(ThresholdPolicy::WeightedPrior {
                n_u1: num(a)?,
                n_u2: num(b)?,
            }),
            ["false-negative-cap", p] => Ok(ThresholdPolicy::FalseNegativeCap { p: num(p)? }),
            _ => Err(format!(
                "unknown threshold policy '{s}' (expected equal-error, weighted-prior:N1:N2 or false-negative-cap:P)"
            )),
        }
    }
}

pub fn threshold(policy: ThresholdPolicy, m1: f64, m2: f64, sigma: f64) -> Result<f64> {
    let mid = 0.5 * (m1 + m2);
    match policy {
        ThresholdPolicy::EqualError => Ok(mid),
        ThresholdPolicy::WeightedPrior { n_u1, n_u2 } => {
            if !(n_u1 > 0.0 && n_u2 > 0.0) {
                return Err(Error::DomainError(format!(
                    "unlabeled class counts must be positive, got {n_u1} and {n_u2}"
                )));
            }
            if n_u1 == n_u2 {
                return Ok(mid);
            }
            if !(m2 > m1) {
                return Err(Error::DegenerateSeparation { m1, m2 });
            }
            Ok(mid + sigma * sigma / (m2 - m1) * (n_u1 / n_u2).ln())
        }
        ThresholdPolicy::FalseNegativeCap { p } => Ok(m2 - sigma * inverse_gaussian_tail(p)?),
    }
}

/// `(ε₁, ε₂) = (𝒬((ζ−m₁)/σ), 𝒬((m₂−ζ)/σ))`
pub fn predicted_errors(moments: &Moments, zeta: f64) -> Result<[f64; 2]> {
    if !(moments.sigma > 0.0) {
        return Err(Error::DomainError(format!(
            "score standard deviation must be positive, got {}",
            moments.sigma
        )));
    }
    Ok([
        gaussian_tail((zeta - moments.m[0]) / moments.sigma),
        gaussian_tail((moments.m[1] - zeta) / moments.sigma),
    ])
}

/// Log-spaced multipliers of the measured `‖W̃‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub low: f64,
    pub high: f64,
    pub points: usize,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self {
            low: 2.0,
            high: 100.0,
            points: 16,
        }
    }
}

impl AlphaGrid {
    pub fn multipliers(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.low];
        }
        let (a, b) = (self.low.ln(), self.high.ln());
        (0..self.points)
            .map(|i| (a + (b - a) * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low > 1.0 && self.high >= self.low && self.points >= 1) {
            return Err(Error::DomainError(format!(
                "alpha grid needs 1 < low ≤ high and at least one point, got {self:?}"
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for AlphaGrid {
    type Err = String;

    /// `LOW:HIGH:POINTS`
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("alpha grid must be LOW:HIGH:POINTS, got '{s}'"));
        }
        let grid = AlphaGrid {
            low: parts[0].parse().map_err(|e| format!("bad low '{}': {e}", parts[0]))?,
            high: parts[1].parse().map_err(|e| format!("bad high '{}': {e}", parts[1]))?,
            points: parts[2].parse().map_err(|e| format!("bad points '{}': {e}", parts[2]))?,
        };
        grid.validate().map_err(|e| e.to_string())?;
        Ok(grid)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub policy: ThresholdPolicy,
    pub alpha_grid: AlphaGrid,
    pub solver: SolverPath,
    /// Seed of the half split used by the mean Gram estimator.
    pub seed: u64,
}

/// Everything the grid search needs, estimated or known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInputs {
    pub cal_m: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub uncertainty: UncertaintyStats,
    pub profile: GrowthProfile,
    /// Reference scale of the α grid.
    pub wtilde_norm: f64,
}

impl CalibrationInputs {
    /// Estimates every input from a centered dataset.
    pub fn estimate(centered: &Dataset, seed: u64) -> Result<(Self, MeanGramEstimate, Vec<String>)> {
        let profile = growth_profile_of(centered)?;
        let mean_gram = estimate_mean_gram(centered, seed)?;
        let lambda = estimate_lambda(&mean_gram)?;
        let (uncertainty, warnings) = uncertainty_stats_lenient(centered)?;
        let wtilde_norm = spectral_norm_wtilde(centered, &lambda)?;
        Ok((
            Self {
                cal_m: project_centered(&mean_gram.cal_m_hat, &profile),
                lambda,
                uncertainty,
                profile,
                wtilde_norm,
            },
            mean_gram,
            warnings,
        ))
    }

    pub fn theory_inputs(&self, alpha: f64) -> TheoryInputs {
        TheoryInputs {
            cal_m: self.cal_m.clone(),
            profile: self.profile.clone(),
            lambda_tilde: &self.lambda / alpha,
            d_bar: self.uncertainty.d_bar.clone(),
            d_tilde: self.uncertainty.d_tilde.clone(),
        }
    }
}

/// Outcome of one α grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub multiplier: f64,
    pub alpha: f64,
    pub epsilon_star: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target: usize,
    pub config: ModelConfig,
    pub wtilde_norm: f64,
    pub fixed_point: FixedPoint,
    pub stats: TheoryStats,
    pub moments: Moments,
    pub labels: OptimalLabels,
    pub epsilon_star: f64,
    pub predicted: [f64; 2],
    pub grid: Vec<GridPoint>,
    pub warnings: Vec<String>,
}

struct Candidate {
    alpha: f64,
    fixed_point: FixedPoint,
    stats: TheoryStats,
    labels: OptimalLabels,
    epsilon_star: f64,
}

fn evaluate_alpha(inputs: &CalibrationInputs, target: usize, alpha: f64) -> Result<Candidate> {
    let theory = inputs.theory_inputs(alpha);
    let fixed_point = solve_fixed_point(&theory.lambda_tilde, &theory.profile)?;
    let stats = theory_stats(&fixed_point, &theory, target)?;
    let labels = optimal_labels(&stats)?;
    let epsilon_star = optimal_error(&stats)?;
    Ok(Candidate {
        alpha,
        fixed_point,
        stats,
        labels,
        epsilon_star,
    })
}

/// Grid search over α for task `target`, from prepared inputs.
pub fn calibrate_from(inputs: &CalibrationInputs, target: usize, options: &CalibrationOptions) -> Result<Calibration> {
    let t_count = inputs.profile.task_count();
    if target >= t_count {
        return Err(Error::DimensionMismatch(format!("target task {} out of {t_count}", target + 1)));
    }
    options.alpha_grid.validate()?;
    let scale = if inputs.wtilde_norm > 0.0 { inputs.wtilde_norm } else { 1.0 };
    let multipliers = options.alpha_grid.multipliers();
    let outcomes: Vec<Result<Candidate>> = multipliers
        .par_iter()
        .map(|m| evaluate_alpha(inputs, target, m * scale))
        .collect();

    let mut grid = Vec::with_capacity(outcomes.len());
    let mut best: Option<Candidate> = None;
    for (m, outcome) in multipliers.iter().zip(outcomes) {
        match outcome {
            Ok(c) => {
                grid.push(GridPoint {
                    multiplier: *m,
                    alpha: c.alpha,
                    epsilon_star: Some(c.epsilon_star),
                    failure: None,
                });
                let better = match &best {
                    None => true,
                    Some(b) => c.epsilon_star < b.epsilon_star || (c.epsilon_star == b.epsilon_star && c.alpha < b.alpha),
                };
                if better {
                    best = Some(c);
                }
            }
            Err(e) => grid.push(GridPoint {
                multiplier: *m,
                alpha: m * scale,
                epsilon_star: None,
                failure: Some(e.to_string()),
            }),
        }
    }
    let best = best.ok_or_else(|| {
        let reasons: Vec<String> = grid
            .iter()
            .filter_map(|g| g.failure.as_ref().map(|f| format!("α={:.4e}: {f}", g.alpha)))
            .collect();
        Error::NoValidAlpha(reasons.join("; "))
    })?;

    let y = best.labels.normalized.clone();
    let moments = best.stats.moments(&y)?;
    let mut warnings = Vec::new();
    let theory = inputs.theory_inputs(best.alpha);
    let mut thresholds = DVector::zeros(t_count);
    for t in 0..t_count {
        let policy = if t == target { options.policy } else { ThresholdPolicy::EqualError };
        let zeta = if t == target {
            threshold(policy, moments.m[0], moments.m[1], moments.sigma)
        } else {
            theory_stats(&best.fixed_point, &theory, t)
                .and_then(|s| s.moments(&y))
                .and_then(|m| threshold(policy, m.m[0], m.m[1], m.sigma))
        };
        thresholds[t] = match zeta {
            Ok(z) => z,
            Err(e) if t != target => {
                warnings.push(format!("task {}: threshold left at 0 ({e})", t + 1));
                0.0
            }
            Err(e) => return Err(e),
        };
    }
    let predicted = predicted_errors(&moments, thresholds[target])?;

    Ok(Calibration {
        target,
        config: ModelConfig {
            alpha: best.alpha,
            lambda: symmetrize(&inputs.lambda),
            y_tilde: y,
            thresholds,
            solver: options.solver,
        },
        wtilde_norm: inputs.wtilde_norm,
        fixed_point: best.fixed_point,
        stats: best.stats,
        moments,
        labels: best.labels,
        epsilon_star: best.epsilon_star,
        predicted,
        grid,
        warnings,
    })
}

/// The full pipeline on raw data: center, estimate, search α.
pub fn calibrate(dataset: &Dataset, target: usize, options: &CalibrationOptions) -> Result<(Calibration, MeanGramEstimate)> {
    let centered = dataset.center_taskwise();
    let (inputs, mean_gram, warnings) = CalibrationInputs::estimate(&centered, options.seed)?;
    let mut calibration = calibrate_from(&inputs, target, options)?;
    calibration.warnings.splice(0..0, warnings);
    Ok((calibration, mean_gram))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_values() {
        assert_eq!(gaussian_tail(0.0), 0.5);
        for x in [0.5, 1.0, 2.0] {
            assert!((gaussian_tail(-x) - (1.0 - gaussian_tail(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_tail_round_trip() {
        for q in [1e-12, 1e-6, 0.01, 0.1, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let x = inverse_gaussian_tail(q).unwrap();
            assert!((gaussian_tail(x) - q).abs() <= 1e-12, "q={q}");
        }
        assert_eq!(inverse_gaussian_tail(0.5).unwrap(), 0.0);
        assert!(inverse_gaussian_tail(0.0).is_err());
        assert!(inverse_gaussian_tail(1.0).is_err());
    }

    #[test]
    fn threshold_policies() {
        assert_eq!(threshold(ThresholdPolicy::EqualError, -1.0, 1.0, 1.0).unwrap(), 0.0);
        let cap = ThresholdPolicy::FalseNegativeCap { p: 0.5 };
        assert_eq!(threshold(cap, -1.0, 1.3, 0.7).unwrap(), 1.3);
        let even = ThresholdPolicy::WeightedPrior { n_u1: 40.0, n_u2: 40.0 };
        assert_eq!(
            threshold(even, -0.3, 1.1, 0.9).unwrap(),
            threshold(ThresholdPolicy::EqualError, -0.3, 1.1, 0.9).unwrap()
        );
        let skewed = ThresholdPolicy::WeightedPrior {
            n_u1: 2.0_f64.exp() * 10.0,
            n_u2: 10.0,
        };
        assert!((threshold(skewed, -1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(threshold(skewed, 1.0, -1.0, 1.0).unwrap_err().kind(), "DegenerateSeparation");
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("equal-error".parse::<ThresholdPolicy>().unwrap(), ThresholdPolicy::EqualError);
        assert_eq!(
            "false-negative-cap:0.1".parse::<ThresholdPolicy>().unwrap(),
            ThresholdPolicy::FalseNegativeCap { p: 0.1 }
        );
        assert!("median".parse::<ThresholdPolicy>().is_err());
    }

    #[test]
    fn errors_at_extremes() {
        let m = Moments {
            m: [-1.0, 1.0],
            sigma: 1.0,
        };
        assert_eq!(predicted_errors(&m, -1.0).unwrap()[0], 0.5);
        let [e1, e2] = predicted_errors(&m, 0.0).unwrap();
        assert!((e1 - 0.158_655_253_931_457_05).abs() < 1e-12);
        assert_eq!(e1, e2);
    }

    #[test]
    fn grid_is_log_spaced() {
        let m = AlphaGrid::default().multipliers();
        assert_eq!(m.len(), 16);
        assert!((m[0] - 2.0).abs() < 1e-12 && (m[15] - 100.0).abs() < 1e-10);
        let r = m[1] / m[0];
        assert!(m.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    }
}
