//! Model files, run manifests and the fit report.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bench::format_sci;
use crate::calibration::{Calibration, CalibrationOptions, UncertaintyStats};
use crate::data::{ModelConfig, TaskCounts};

use super::CliError;

pub const MODEL_FORMAT: &str = "mtssl-model";

/// Provenance of one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub elapsed_seconds: f64,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    clock: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config,
                started_unix,
                elapsed_seconds: 0.0,
                warnings: Vec::new(),
                artifacts: Vec::new(),
            },
            clock: Instant::now(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        eprintln!("warning: {message}");
        self.manifest.warnings.push(message);
    }

    pub fn artifact(&mut self, path: &Path) {
        self.manifest.artifacts.push(path.display().to_string());
    }

    pub fn finish(mut self) -> RunManifest {
        self.manifest.elapsed_seconds = self.clock.elapsed().as_secs_f64();
        self.manifest
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Calibration outcome for one target task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    /// 1-based task index.
    pub task: usize,
    pub config: ModelConfig,
    pub delta: DVector<f64>,
    pub m: [f64; 2],
    pub sigma: f64,
    pub zeta: f64,
    pub predicted: [f64; 2],
    pub epsilon_star: f64,
    pub alpha_over_norm: f64,
    pub warnings: Vec<String>,
}

impl TargetModel {
    pub fn from_calibration(c: &Calibration) -> Self {
        Self {
            task: c.target + 1,
            config: c.config.clone(),
            delta: c.fixed_point.delta.clone(),
            m: c.moments.m,
            sigma: c.moments.sigma,
            zeta: c.config.thresholds[c.target],
            predicted: c.predicted,
            epsilon_star: c.epsilon_star,
            alpha_over_norm: c.config.alpha / c.wtilde_norm,
            warnings: c.warnings.clone(),
        }
    }
}

/// Everything `predict` and `predict-error` need; no raw data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub feature_dim: usize,
    pub task_count: usize,
    pub task_files: Vec<String>,
    pub counts: Vec<TaskCounts>,
    /// Estimated mean Gram matrix, before and after removing the per-task constant direction.
    pub mean_gram: DMatrix<f64>,
    pub mean_gram_centered: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub uncertainty: UncertaintyStats,
    pub wtilde_norm: f64,
    pub options: CalibrationOptions,
    pub targets: Vec<TargetModel>,
    pub manifest: RunManifest,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let model: ModelFile = serde_json::from_str(&text)
            .map_err(|e| CliError::schema(format!("{}: not a model file ({e})", path.display())))?;
        if model.format != MODEL_FORMAT {
            return Err(CliError::schema(format!(
                "{}: format '{}' is not {MODEL_FORMAT}",
                path.display(),
                model.format
            )));
        }
        for t in &model.targets {
            t.config
                .validate(model.task_count)
                .map_err(|e| CliError::from_lib("model", e))?;
        }
        Ok(model)
    }

    pub fn target(&self, task: usize) -> Option<&TargetModel> {
        self.targets.iter().find(|t| t.task == task)
    }
}

fn vector(v: &DVector<f64>) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:+.4}")).collect();
    format!("[{}]", cells.join(", "))
}

/// Human-readable summary of a fitted model.
pub fn report(model: &ModelFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mtssl {} fit report", model.manifest.version);
    let _ = writeln!(s, "tasks: {}  features: {}", model.task_count, model.feature_dim);
    for (t, (file, c)) in model.task_files.iter().zip(&model.counts).enumerate() {
        let _ = writeln!(
            s,
            "  task {}: {file}  labeled {}/{}  unlabeled {}/{}",
            t + 1,
            c.labeled[0],
            c.labeled[1],
            c.unlabeled[0],
            c.unlabeled[1]
        );
    }
    let _ = writeln!(s, "weight matrix norm: {}", format_sci(model.wtilde_norm));
    let _ = writeln!(s, "task relatedness:");
    for row in model.lambda.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.4}")).collect();
        let _ = writeln!(s, "  {}", cells.join(" "));
    }
    for t in &model.targets {
        let _ = writeln!(s, "target task {}:", t.task);
        let _ = writeln!(s, "  alpha {} ({:.3} x norm)", format_sci(t.config.alpha), t.alpha_over_norm);
        let _ = writeln!(s, "  delta {}", vector(&t.delta));
        let _ = writeln!(s, "  labels {}", vector(&t.config.y_tilde));
        let _ = writeln!(s, "  thresholds {}", vector(&t.config.thresholds));
        let _ = writeln!(s, "  score means {:+.6} {:+.6}  std {:.6}", t.m[0], t.m[1], t.sigma);
        let _ = writeln!(
            s,
            "  predicted error: class 1 {:.4}  class 2 {:.4}  optimal {:.4}",
            t.predicted[0], t.predicted[1], t.epsilon_star
        );
        for w in &t.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
    }
    for w in &model.manifest.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}
