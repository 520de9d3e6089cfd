//! Deterministic equivalents of the score statistics.
//!
//! Everything here lives in the 2T-dimensional "class space" (ordering as in
//! [`crate::data`]) or the T-dimensional task space; no sample-sized object is
//! ever formed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{slot, Class, GrowthProfile};
use crate::error::{Error, Result};
use crate::linalg::{diag, inverse_checked, kron_ones2, repeat2, spectral_radius, symmetrize};

pub const FIXED_POINT_TOL: f64 = 1e-13;
pub const FIXED_POINT_MAX_ITER: usize = 10_000;
const THETA_CONDITION_LIMIT: f64 = 1e12;
const VARIANCE_CLAMP: f64 = 1e-10;

/// Solution `(δ, 𝓐)` of the coupled trace equations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub delta: DVector<f64>,
    pub cal_a: DMatrix<f64>,
    /// `ρ_j^t / (Tc(1−δ^t))`, length 2T.
    pub delta_tilde: DVector<f64>,
    /// `δ̃_1^t + δ̃_2^t`, length T.
    pub delta_bar: DVector<f64>,
    /// `max_t |δ^t − 𝓐_tt/T|`
    pub residual: f64,
    pub iterations: usize,
}

fn delta_tilde_of(delta: &DVector<f64>, profile: &GrowthProfile) -> DVector<f64> {
    let t_count = profile.task_count() as f64;
    DVector::from_fn(profile.rho.len(), |k, _| {
        profile.rho[k] / (t_count * profile.c * (1.0 - delta[k / 2]))
    })
}

fn pair_sums(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len() / 2, |t, _| v[2 * t] + v[2 * t + 1])
}

/// `𝓐 = Λ̃ + Λ̃(𝒟_δ̄⁻¹ − Λ̃)⁻¹Λ̃`
fn cal_a_of(lambda_tilde: &DMatrix<f64>, delta_bar: &DVector<f64>) -> Result<DMatrix<f64>> {
    let inv_bar = delta_bar.map(|d| 1.0 / d);
    let kernel = diag(&inv_bar) - lambda_tilde;
    let chol = kernel.cholesky().ok_or_else(|| {
        Error::InvalidRegion("diag(1/δ̄) − Λ̃ is not positive definite; α is too small".into())
    })?;
    Ok(symmetrize(&(lambda_tilde + lambda_tilde * chol.solve(lambda_tilde))))
}

/// Iterates `δ → δ̄ → 𝓐 → diag(𝓐)/T` from `δ = 0`, halving the damping
/// factor whenever the step size grows.
pub fn solve_fixed_point(lambda_tilde: &DMatrix<f64>, profile: &GrowthProfile) -> Result<FixedPoint> {
    let t_count = profile.task_count();
    if lambda_tilde.nrows() != t_count || lambda_tilde.ncols() != t_count {
        return Err(Error::DimensionMismatch(format!(
            "Λ̃ is {}x{} for {t_count} tasks",
            lambda_tilde.nrows(),
            lambda_tilde.ncols()
        )));
    }
    if lambda_tilde.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidRegion("Λ̃ has non-finite entries".into()));
    }
    let lambda_tilde = symmetrize(lambda_tilde);
    let mut delta = DVector::zeros(t_count);
    let mut damping = 1.0;
    let mut previous_step = f64::INFINITY;
    for iteration in 0..FIXED_POINT_MAX_ITER {
        let delta_tilde = delta_tilde_of(&delta, profile);
        let delta_bar = pair_sums(&delta_tilde);
        let cal_a = cal_a_of(&lambda_tilde, &delta_bar)?;
        let update = cal_a.diagonal() / t_count as f64;
        if let Some(bad) = update.iter().find(|d| !(**d < 1.0)) {
            return Err(Error::InvalidRegion(format!("δ reached {bad}, must stay below 1")));
        }
        let step = (&update - &delta).amax();
        if step <= FIXED_POINT_TOL {
            return Ok(FixedPoint {
                delta,
                cal_a,
                delta_tilde,
                delta_bar,
                residual: step,
                iterations: iteration,
            });
        }
        if step > previous_step {
            damping *= 0.5;
        }
        previous_step = step;
        delta = &update * damping + &delta * (1.0 - damping);
    }
    Err(Error::NoConvergence {
        what: "deterministic-equivalent fixed point",
        residual: previous_step,
        iterations: FIXED_POINT_MAX_ITER,
    })
}

/// Inputs of the theory engine besides `Λ̃`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    /// `MᵀM`, the Gram matrix of the (centered) class means.
    pub cal_m: DMatrix<f64>,
    pub profile: GrowthProfile,
    pub lambda_tilde: DMatrix<f64>,
    pub d_bar: DMatrix<f64>,
    pub d_tilde: DMatrix<f64>,
}

impl TheoryInputs {
    /// Certain labels: `D̄ = I` and `D̃ = diag(n_{ℓj}^t / n_ℓ^t)`.
    pub fn certain(cal_m: DMatrix<f64>, profile: GrowthProfile, lambda_tilde: DMatrix<f64>) -> Self {
        let (d_bar, d_tilde) = certain_label_stats(&profile);
        Self {
            cal_m,
            profile,
            lambda_tilde,
            d_bar,
            d_tilde,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = 2 * self.profile.task_count();
        for (name, m) in [("𝓜", &self.cal_m), ("D̄", &self.d_bar), ("D̃", &self.d_tilde)] {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {k}x{k}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(())
    }
}

/// `(D̄, D̃)` for certain labels.
pub fn certain_label_stats(profile: &GrowthProfile) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = profile.rho.len();
    let labeled_share = DVector::from_fn(k, |i, _| {
        let t = i / 2;
        profile.rho[i] * profile.eta[i] / (profile.rho_bar[t] * profile.eta_bar[t])
    });
    (DMatrix::identity(k, k), diag(&labeled_share))
}

/// `Θ₀ = (𝓐 ⊗ 𝟙𝟙ᵀ) ⊙ 𝓜` and `Θ = (I − Θ₀𝒟_δ̃)⁻¹Θ₀`.
pub fn theta_matrices(fp: &FixedPoint, cal_m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let theta0 = kron_ones2(&fp.cal_a).component_mul(cal_m);
    let k = theta0.nrows();
    let left = DMatrix::identity(k, k) - &theta0 * diag(&fp.delta_tilde);
    let inv = inverse_checked(&left, THETA_CONDITION_LIMIT, "I − Θ₀𝒟_δ̃")?;
    let theta = &inv * &theta0;
    Ok((theta0, theta))
}

/// `S = S̄(I − 𝒟_ρ̄S̄)⁻¹` with `S̄_{tt'} = 𝓐_{tt'}² / (T²c(1−δ^{t'})²)`.
pub fn s_matrix(fp: &FixedPoint, profile: &GrowthProfile) -> Result<DMatrix<f64>> {
    let t_count = profile.task_count();
    let tf = t_count as f64;
    let s_bar = DMatrix::from_fn(t_count, t_count, |a, b| {
        fp.cal_a[(a, b)].powi(2) / (tf * tf * profile.c * (1.0 - fp.delta[b]).powi(2))
    });
    let weighted = diag(&profile.rho_bar) * &s_bar;
    let radius = spectral_radius(&weighted);
    if radius >= 1.0 {
        return Err(Error::DivergentSeries { radius });
    }
    let inv = (DMatrix::identity(t_count, t_count) - weighted)
        .try_inverse()
        .ok_or(Error::DivergentSeries { radius })?;
    Ok(s_bar * inv)
}

/// `r^t = ρ ⊙ (S_{t·} ⊗ 𝟙₂)`
pub fn r_vector(s: &DMatrix<f64>, profile: &GrowthProfile, t: usize) -> DVector<f64> {
    repeat2(&s.row(t).transpose()).component_mul(&profile.rho)
}

/// `r̄^t = ρ̄ ⊙ S_{t·}`
pub fn r_bar_vector(s: &DMatrix<f64>, profile: &GrowthProfile, t: usize) -> DVector<f64> {
    s.row(t).transpose().component_mul(&profile.rho_bar)
}

/// Class means and common standard deviation of the scores of one task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m: [f64; 2],
    pub sigma: f64,
}

/// Limiting statistics of the unlabeled scores of one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryStats {
    pub task: usize,
    pub delta: f64,
    /// `a_1^t`, `a_2^t`
    pub a: [DVector<f64>; 2],
    pub b: DMatrix<f64>,
    pub theta0: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub r: DVector<f64>,
    pub r_bar: DVector<f64>,
    pub omega_bar: DMatrix<f64>,
    pub t_mat: DMatrix<f64>,
    pub gamma: f64,
}

impl TheoryStats {
    /// `a_2 − a_1`
    pub fn a_diff(&self) -> DVector<f64> {
        &self.a[1] - &self.a[0]
    }

    /// Score means `a_jᵀỹ/(1−δ^t)` and standard deviation `√(ỹᵀBỹ)/(1−δ^t)`.
    pub fn moments(&self, y_tilde: &DVector<f64>) -> Result<Moments> {
        if y_tilde.len() != self.b.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "label vector has length {}, expected {}",
                y_tilde.len(),
                self.b.nrows()
            )));
        }
        let scale = 1.0 / (1.0 - self.delta);
        let quad = y_tilde.dot(&(&self.b * y_tilde));
        if quad < -VARIANCE_CLAMP {
            return Err(Error::NegativeVariance { value: quad });
        }
        Ok(Moments {
            m: [scale * self.a[0].dot(y_tilde), scale * self.a[1].dot(y_tilde)],
            sigma: scale * quad.max(0.0).sqrt(),
        })
    }
}

/// Assembles `a_1^t`, `a_2^t` and `B^t` for task `t`.
pub fn theory_stats(fp: &FixedPoint, inputs: &TheoryInputs, t: usize) -> Result<TheoryStats> {
    inputs.validate()?;
    let profile = &inputs.profile;
    let t_count = profile.task_count();
    if t >= t_count {
        return Err(Error::DimensionMismatch(format!("task {t} out of {t_count}")));
    }
    let k = 2 * t_count;
    let ident = DMatrix::<f64>::identity(k, k);
    let (theta0, theta) = theta_matrices(fp, &inputs.cal_m)?;
    let s = s_matrix(fp, profile)?;
    let r = r_vector(&s, profile, t);
    let r_bar = r_bar_vector(&s, profile, t);

    let gamma = t_count as f64 * profile.c * fp.delta[t] / profile.rho_bar[t];
    let big_gamma = kron_ones2(&DMatrix::identity(t_count, t_count));
    let mut e_tt = DMatrix::zeros(t_count, t_count);
    e_tt[(t, t)] = 1.0;
    let gamma_t = kron_ones2(&e_tt);

    let d_dt = diag(&fp.delta_tilde);
    let d_eta = diag(&profile.eta);
    let d_r = diag(&r);

    let mut weights = r_bar.clone();
    weights[t] += 1.0;
    let omega0 = kron_ones2(&(&fp.cal_a * diag(&weights) * &fp.cal_a)).component_mul(&inputs.cal_m);
    let left = inverse_checked(&(&ident - &theta0 * &d_dt), THETA_CONDITION_LIMIT, "I − Θ₀𝒟_δ̃")?;
    let right = inverse_checked(&(&ident - &d_dt * &theta0), THETA_CONDITION_LIMIT, "I − 𝒟_δ̃Θ₀")?;
    let omega_bar = &left * omega0 * &right;

    let t_mat = kron_ones2(&diag(&r_bar.component_mul(&profile.eta_bar)));

    let shifted = &theta - &big_gamma * gamma;
    let a_full = &shifted * &d_dt * &d_eta * &inputs.d_bar;
    let a = Class::BOTH.map(|c| a_full.row(slot(t, c)).transpose());

    let outer = inputs.d_bar.transpose() * &d_eta;
    let inner = &d_eta * &inputs.d_bar;
    let term1 = &outer * ((&d_dt * &shifted) * 2.0 - &gamma_t) * &d_r * &inner;
    let middle = &theta * &d_r * &theta + &omega_bar - &gamma_t * (gamma * gamma);
    let term2 = &outer * &d_dt * middle * &d_dt * &inner;
    let term3 = t_mat.component_mul(&inputs.d_tilde);
    let b = symmetrize(&(term1 + term2 + term3));

    Ok(TheoryStats {
        task: t,
        delta: fp.delta[t],
        a,
        b,
        theta0,
        theta,
        s,
        r,
        r_bar,
        omega_bar,
        t_mat,
        gamma,
    })
}

/// Fixed point and statistics of task `t` in one call.
pub fn evaluate(inputs: &TheoryInputs, t: usize) -> Result<(FixedPoint, TheoryStats)> {
    let fp = solve_fixed_point(&inputs.lambda_tilde, &inputs.profile)?;
    let stats = theory_stats(&fp, inputs, t)?;
    Ok((fp, stats))
}
