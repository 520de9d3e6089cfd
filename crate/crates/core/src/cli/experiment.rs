//! Figure-ready sweeps written as `.dat` tables.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::bench::{
    beta_sweep, equivalent_reliable_count, imbalance_sweep, linspace, write_dat, UncertainSetting, BETA_COLUMNS,
    IMBALANCE_COLUMNS,
};
use crate::calibration::CalibrationOptions;

use super::model::{write_json, ManifestBuilder};
use super::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    /// Two tasks, error and optimal labels against the task correlation β.
    BetaSweep,
    /// One task, error and labels against the labeled class split.
    Imbalance,
    /// Imprecise samples needed to match reliable ones, against n_r.
    Uncertain,
    /// Usefulness ratio n_r/n_i against reliability and difficulty.
    Ratio,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentPlan {
    pub name: ExperimentName,
    pub out_dir: PathBuf,
    pub trials: usize,
    pub points: Option<usize>,
    pub seed: u64,
    pub options: CalibrationOptions,
}

impl ExperimentPlan {
    fn points_or(&self, default: usize) -> usize {
        self.points.unwrap_or(default).max(1)
    }
}

fn dat_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::io(path, e)
}

pub const UNCERTAIN_COLUMNS: [&str; 4] = ["r", "n_r", "n_i", "ratio"];
pub const RATIO_COLUMNS: [&str; 5] = ["r", "difficulty", "n_r", "n_i", "ratio"];
pub const UNCERTAIN_RELIABILITIES: [f64; 4] = [0.6, 0.75, 0.9, 1.0];
pub const RATIO_DIFFICULTIES: [f64; 4] = [0.5, 0.75, 1.0, 1.25];
pub const RATIO_RELIABLE: usize = 100;

/// Runs the sweep and writes its tables next to a manifest.
pub fn run(plan: &ExperimentPlan) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(&plan.out_dir).map_err(|e| CliError::io(&plan.out_dir, e))?;
    let config = serde_json::to_value(plan).map_err(|e| CliError::io(&plan.out_dir, e))?;
    let mut manifest = ManifestBuilder::new("experiment", plan.seed, config);
    let mut written = Vec::new();

    match plan.name {
        ExperimentName::BetaSweep => {
            let betas = linspace(-1.0, 1.0, plan.points_or(21));
            let points = beta_sweep(&betas, plan.seed, plan.trials, &plan.options);
            let rows: Vec<Vec<f64>> = points.iter().map(|p| p.row()).collect();
            let path = plan.out_dir.join("beta_sweep.dat");
            write_dat(&path, MANIFEST_FILE, &BETA_COLUMNS, &rows).map_err(|e| dat_error(&path, e))?;
            for p in &points {
                let failed = p.summary.naive.failures + p.summary.calibrated.failures;
                if failed > 0 {
                    manifest.warn(format!("beta {:.3}: {failed} failed pipeline runs", p.beta));
                }
            }
            written.push(path);
        }
        ExperimentName::Imbalance => {
            let n_l1s: Vec<usize> = linspace(50.0, 950.0, plan.points_or(19))
                .into_iter()
                .map(|v| v.round() as usize)
                .collect();
            let points = imbalance_sweep(&n_l1s, plan.seed, plan.trials, &plan.options);
            let rows: Vec<Vec<f64>> = points.iter().map(|p| p.row()).collect();
            let path = plan.out_dir.join("imbalance.dat");
            write_dat(&path, MANIFEST_FILE, &IMBALANCE_COLUMNS, &rows).map_err(|e| dat_error(&path, e))?;
            for p in &points {
                let failed = p.summary.naive.failures + p.summary.calibrated.failures;
                if failed > 0 {
                    manifest.warn(format!("n_l1 {}: {failed} failed pipeline runs", p.n_l1));
                }
            }
            written.push(path);
        }
        ExperimentName::Uncertain => {
            let setting = UncertainSetting {
                options: plan.options.clone(),
                ..UncertainSetting::default()
            };
            let n_rs: Vec<usize> = linspace(50.0, 400.0, plan.points_or(8))
                .into_iter()
                .map(|v| v.round() as usize)
                .collect();
            let mut rows = Vec::new();
            for r in UNCERTAIN_RELIABILITIES {
                for &n_r in &n_rs {
                    match equivalent_reliable_count(&setting, r, n_r) {
                        Ok((n_i, ratio)) => rows.push(vec![r, n_r as f64, n_i as f64, ratio]),
                        Err(e) => {
                            manifest.warn(format!("r {r}, n_r {n_r}: {e}"));
                            rows.push(vec![r, n_r as f64, f64::NAN, f64::NAN]);
                        }
                    }
                }
            }
            let path = plan.out_dir.join("uncertain.dat");
            write_dat(&path, MANIFEST_FILE, &UNCERTAIN_COLUMNS, &rows).map_err(|e| dat_error(&path, e))?;
            written.push(path);
        }
        ExperimentName::Ratio => {
            let reliabilities = linspace(0.55, 1.0, plan.points_or(10));
            let mut rows = Vec::new();
            for difficulty in RATIO_DIFFICULTIES {
                let setting = UncertainSetting {
                    difficulty,
                    options: plan.options.clone(),
                    ..UncertainSetting::default()
                };
                for &r in &reliabilities {
                    match equivalent_reliable_count(&setting, r, RATIO_RELIABLE) {
                        Ok((n_i, ratio)) => rows.push(vec![r, difficulty, RATIO_RELIABLE as f64, n_i as f64, ratio]),
                        Err(e) => {
                            manifest.warn(format!("r {r}, difficulty {difficulty}: {e}"));
                            rows.push(vec![r, difficulty, RATIO_RELIABLE as f64, f64::NAN, 0.0]);
                        }
                    }
                }
            }
            let path = plan.out_dir.join("ratio.dat");
            write_dat(&path, MANIFEST_FILE, &RATIO_COLUMNS, &rows).map_err(|e| dat_error(&path, e))?;
            written.push(path);
        }
    }

    for path in &written {
        manifest.artifact(path);
    }
    let manifest_path = plan.out_dir.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest.finish())?;
    written.push(manifest_path);
    Ok(written)
}
