//! Command-line front end: fit, predict, self-predicted errors, experiments,
//! synthetic data and evaluation. All file I/O of the crate lives here.

pub mod experiment;
pub mod io;
pub mod model;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bench::{format_sci, generate, ScenarioSpec};
use crate::calibration::{calibrate_from, AlphaGrid, CalibrationInputs, CalibrationOptions, ThresholdPolicy};
use crate::classifier::{classify, solve_scores};
use crate::data::{Class, SolverPath};
use crate::error::Error;

use experiment::{ExperimentName, ExperimentPlan};
use io::PredictionRow;
use model::{write_json, ManifestBuilder, ModelFile, TargetModel, MODEL_FORMAT};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// A failed command: exit code, the stage that failed, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub stage: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            stage: "usage".into(),
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            stage: "schema".into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            stage: "io".into(),
            message: format!("{}: {e}", path.display()),
        }
    }

    /// Schema problems exit with 2, numerical and calibration failures with 3.
    pub fn from_lib(stage: &str, e: Error) -> Self {
        let code = match e {
            Error::InvalidDataset(_) | Error::DimensionMismatch(_) => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            stage: stage.into(),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Parser, Debug)]
#[command(name = "mtssl", version, about = "Multi-task semi-supervised classification with self-predicted performance")]
pub struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Calibrate on task CSV files and write a model file.
    Fit(FitArgs),
    /// Score and classify the unlabeled samples of task CSV files.
    Predict(PredictArgs),
    /// Print the predicted score moments and errors stored in a model.
    PredictError(PredictErrorArgs),
    /// Run a synthetic sweep and write .dat tables.
    Experiment(ExperimentArgs),
    /// Write a synthetic scenario as task CSV files plus ground truth.
    Generate(GenerateArgs),
    /// Compare a predictions file against ground truth.
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct TuningArgs {
    /// equal-error, weighted-prior:N1:N2 or false-negative-cap:P
    #[arg(long)]
    pub threshold_policy: Option<String>,
    /// Multipliers of the weight-matrix norm, LOW:HIGH:POINTS.
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// direct-n, woodbury-tp or auto
    #[arg(long)]
    pub solver: Option<String>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// One CSV file per task; the first is task 1.
    #[arg(required = true)]
    pub data: Vec<PathBuf>,
    /// TOML file with threshold-policy, alpha-grid, solver and targets keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Calibrate only for this task (1-based); repeatable.
    #[arg(long = "target")]
    pub targets: Vec<usize>,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long, default_value = "predictions.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictErrorArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    pub name: ExperimentName,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Monte Carlo trials per point.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Number of sweep points.
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Beta,
    Imbalance,
    Uncertain,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "beta")]
    pub scenario: ScenarioName,
    /// Full scenario description in JSON; overrides the scenario flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 300)]
    pub n_l1: usize,
    #[arg(long, default_value_t = 0.75)]
    pub r: f64,
    #[arg(long, default_value_t = 100)]
    pub n_r: usize,
    #[arg(long, default_value_t = 100)]
    pub n_i: usize,
    #[arg(long, default_value_t = 0.5)]
    pub difficulty: f64,
    #[arg(long, default_value = "data")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Also print the model's predicted errors next to the empirical ones.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Deserialize, Serialize, Debug, Default, Clone, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub threshold_policy: Option<String>,
    pub alpha_grid: Option<String>,
    pub solver: Option<String>,
    pub targets: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
    }
}

/// Merges flags over a config file into calibration options. A bare
/// `weighted-prior` has no counts to weigh by and falls back to equal error.
pub fn resolve_options(
    tuning: &TuningArgs,
    file: &FileConfig,
    seed: u64,
    warnings: &mut Vec<String>,
) -> Result<CalibrationOptions, CliError> {
    let mut options = CalibrationOptions {
        seed,
        ..CalibrationOptions::default()
    };
    if let Some(policy) = tuning.threshold_policy.as_ref().or(file.threshold_policy.as_ref()) {
        options.policy = if policy == "weighted-prior" {
            warnings.push("weighted-prior without class counts, using equal-error".into());
            ThresholdPolicy::EqualError
        } else {
            policy.parse().map_err(CliError::usage)?
        };
    }
    if let Some(grid) = tuning.alpha_grid.as_ref().or(file.alpha_grid.as_ref()) {
        options.alpha_grid = grid.parse::<AlphaGrid>().map_err(CliError::usage)?;
    }
    if let Some(solver) = tuning.solver.as_ref().or(file.solver.as_ref()) {
        options.solver = solver.parse::<SolverPath>().map_err(CliError::usage)?;
    }
    Ok(options)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => cmd_fit(&args, cli.seed),
        Command::Predict(args) => cmd_predict(&args, cli.seed),
        Command::PredictError(args) => cmd_predict_error(&args),
        Command::Experiment(args) => cmd_experiment(&args, cli.seed),
        Command::Generate(args) => cmd_generate(&args, cli.seed),
        Command::Eval(args) => cmd_eval(&args),
    }
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

/// Calibrates every requested target and assembles the model file.
pub fn fit_model(args: &FitArgs, seed: u64) -> Result<ModelFile, CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut warnings = Vec::new();
    let options = resolve_options(&args.tuning, &file, seed, &mut warnings)?;
    let config_echo = json!({
        "data": file_names(&args.data),
        "config_file": file,
        "options": options,
        "targets": args.targets,
    });
    let mut manifest = ManifestBuilder::new("fit", seed, config_echo);
    for w in warnings {
        manifest.warn(w);
    }

    let (dataset, _) = io::read_dataset(&args.data)?;
    let task_count = dataset.task_count();
    let mut targets: Vec<usize> = if !args.targets.is_empty() {
        args.targets.clone()
    } else {
        file.targets.clone().unwrap_or_else(|| (1..=task_count).collect())
    };
    targets.sort_unstable();
    targets.dedup();
    if let Some(bad) = targets.iter().find(|&&t| t == 0 || t > task_count) {
        return Err(CliError::usage(format!("target {bad} is not a task in 1..={task_count}")));
    }

    let centered = dataset.center_taskwise();
    let (inputs, mean_gram, estimate_warnings) =
        CalibrationInputs::estimate(&centered, options.seed).map_err(|e| CliError::from_lib("estimate", e))?;
    for w in estimate_warnings {
        manifest.warn(w);
    }
    let mut fitted = Vec::with_capacity(targets.len());
    for t in targets {
        let c = calibrate_from(&inputs, t - 1, &options)
            .map_err(|e| CliError::from_lib(&format!("calibrate (target task {t})"), e))?;
        fitted.push(TargetModel::from_calibration(&c));
    }
    manifest.artifact(&args.out);

    Ok(ModelFile {
        format: MODEL_FORMAT.into(),
        feature_dim: dataset.feature_dim(),
        task_count,
        task_files: file_names(&args.data),
        counts: inputs.profile.counts.clone(),
        mean_gram: mean_gram.cal_m_hat,
        mean_gram_centered: inputs.cal_m,
        lambda: inputs.lambda,
        uncertainty: inputs.uncertainty,
        wtilde_norm: inputs.wtilde_norm,
        options,
        targets: fitted,
        manifest: manifest.finish(),
    })
}

fn cmd_fit(args: &FitArgs, seed: u64) -> Result<(), CliError> {
    let model = fit_model(args, seed)?;
    write_json(&args.out, &model)?;
    let text = model::report(&model);
    match &args.report {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Scores the unlabeled samples of every task that has a calibrated target.
pub fn predict_rows(model: &ModelFile, data: &[PathBuf]) -> Result<Vec<PredictionRow>, CliError> {
    let (dataset, files) = io::read_dataset(data)?;
    if dataset.task_count() != model.task_count || dataset.feature_dim() != model.feature_dim {
        return Err(CliError::from_lib(
            "predict",
            Error::DimensionMismatch(format!(
                "model expects {} tasks of dimension {}, data has {} tasks of dimension {}",
                model.task_count,
                model.feature_dim,
                dataset.task_count(),
                dataset.feature_dim()
            )),
        ));
    }
    let centered = dataset.center_taskwise();
    let mut rows = Vec::new();
    for target in &model.targets {
        let t = target.task - 1;
        let scores = solve_scores(&centered, &target.config)
            .map_err(|e| CliError::from_lib(&format!("predict (target task {})", target.task), e))?;
        let prediction = classify(&scores, &target.config.thresholds);
        for ((task, idx), (score, class)) in scores
            .provenance
            .iter()
            .zip(scores.scores.iter().zip(&prediction.classes))
        {
            if *task == t {
                rows.push(PredictionRow {
                    sample_id: files[t].unlabeled_ids[*idx].clone(),
                    task: target.task,
                    score: *score,
                    class: *class,
                });
            }
        }
    }
    Ok(rows)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn cmd_predict(args: &PredictArgs, seed: u64) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::new(
        "predict",
        seed,
        json!({ "model": args.model.display().to_string(), "data": file_names(&args.data) }),
    );
    let model = ModelFile::load(&args.model)?;
    if model.targets.len() < model.task_count {
        manifest.warn(format!(
            "model has {} of {} tasks calibrated; the others are not predicted",
            model.targets.len(),
            model.task_count
        ));
    }
    let rows = predict_rows(&model, &args.data)?;
    io::write_predictions(&args.out, &rows)?;
    manifest.artifact(&args.out);
    write_json(&sidecar(&args.out), &manifest.finish())
}

pub const PREDICT_ERROR_COLUMNS: [&str; 9] = ["task", "alpha", "m1", "m2", "sigma", "zeta", "eps1", "eps2", "eps_star"];

pub fn predict_error_table(model: &ModelFile) -> String {
    let mut out = PREDICT_ERROR_COLUMNS.join(" ") + "\n";
    for t in &model.targets {
        let cells: Vec<String> = [
            t.config.alpha,
            t.m[0],
            t.m[1],
            t.sigma,
            t.zeta,
            t.predicted[0],
            t.predicted[1],
            t.epsilon_star,
        ]
        .iter()
        .map(|v| format_sci(*v))
        .collect();
        out += &format!("{} {}\n", t.task, cells.join(" "));
    }
    out
}

fn cmd_predict_error(args: &PredictErrorArgs) -> Result<(), CliError> {
    let model = ModelFile::load(&args.model)?;
    print!("{}", predict_error_table(&model));
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs, seed: u64) -> Result<(), CliError> {
    let mut warnings = Vec::new();
    let options = resolve_options(&args.tuning, &FileConfig::default(), seed, &mut warnings)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let plan = ExperimentPlan {
        name: args.name,
        out_dir: args.out_dir.clone(),
        trials: args.trials,
        points: args.points,
        seed,
        options,
    };
    for path in experiment::run(&plan)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn scenario_from_args(args: &GenerateArgs, seed: u64) -> Result<ScenarioSpec, CliError> {
    if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut spec: ScenarioSpec =
            serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        spec.seed = seed;
        return Ok(spec);
    }
    Ok(match args.scenario {
        ScenarioName::Beta => ScenarioSpec::beta(args.beta, seed),
        ScenarioName::Imbalance => ScenarioSpec::imbalance(args.n_l1, seed),
        ScenarioName::Uncertain => ScenarioSpec::uncertain(args.r, args.n_r, args.n_i, args.difficulty, seed),
    })
}

fn cmd_generate(args: &GenerateArgs, seed: u64) -> Result<(), CliError> {
    let spec = scenario_from_args(args, seed)?;
    let generated = generate(&spec).map_err(|e| CliError::from_lib("generate", e))?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let config = serde_json::to_value(&spec).map_err(|e| CliError::io(&args.out_dir, e))?;
    let mut manifest = ManifestBuilder::new("generate", seed, config);

    let mut truth_rows = Vec::new();
    for (t, task) in generated.dataset.tasks().iter().enumerate() {
        let mut ids: Vec<String> = (0..task.n_labeled()).map(|i| format!("t{}-l{i}", t + 1)).collect();
        let unlabeled: Vec<String> = (0..task.n_unlabeled()).map(|i| format!("t{}-u{i}", t + 1)).collect();
        if let Some(truth) = task.unlabeled_truth() {
            truth_rows.extend(unlabeled.iter().zip(truth).map(|(id, c)| (id.clone(), t + 1, *c)));
        }
        ids.extend(unlabeled);
        let path = args.out_dir.join(format!("task{}.csv", t + 1));
        io::write_task_csv(&path, task, &ids)?;
        manifest.artifact(&path);
        println!("{}", path.display());
    }
    let truth_path = args.out_dir.join("truth.csv");
    io::write_truth_csv(&truth_path, &truth_rows)?;
    manifest.artifact(&truth_path);
    println!("{}", truth_path.display());
    write_json(&args.out_dir.join("manifest.json"), &manifest.finish())
}

/// Per-task empirical errors `(ε₁, ε₂, overall, samples)` of a predictions file.
pub fn evaluate_predictions(
    rows: &[PredictionRow],
    truth: &std::collections::HashMap<(usize, String), Class>,
) -> Result<BTreeMap<usize, ([f64; 2], f64, usize)>, CliError> {
    let mut tallies: BTreeMap<usize, ([usize; 2], [usize; 2])> = BTreeMap::new();
    for r in rows {
        let c = truth
            .get(&(r.task, r.sample_id.clone()))
            .ok_or_else(|| CliError::schema(format!("no truth for sample '{}' of task {}", r.sample_id, r.task)))?;
        let entry = tallies.entry(r.task).or_default();
        entry.1[c.index()] += 1;
        if *c != r.class {
            entry.0[c.index()] += 1;
        }
    }
    Ok(tallies
        .into_iter()
        .map(|(t, (wrong, total))| {
            let rate = |j: usize| if total[j] == 0 { 0.0 } else { wrong[j] as f64 / total[j] as f64 };
            let n = total[0] + total[1];
            let overall = (wrong[0] + wrong[1]) as f64 / n as f64;
            (t, ([rate(0), rate(1)], overall, n))
        })
        .collect())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let rows = io::read_predictions(&args.predictions)?;
    let truth = io::read_truth_csv(&args.truth)?;
    let model = args.model.as_ref().map(|p| ModelFile::load(p)).transpose()?;
    let results = evaluate_predictions(&rows, &truth)?;
    let mut header = "task samples eps1 eps2 error".to_string();
    if model.is_some() {
        header += " predicted_eps1 predicted_eps2 predicted_eps_star";
    }
    println!("{header}");
    for (t, (eps, overall, n)) in results {
        let mut line = format!("{t} {n} {} {} {}", format_sci(eps[0]), format_sci(eps[1]), format_sci(overall));
        if let Some(target) = model.as_ref().and_then(|m| m.target(t)) {
            line += &format!(
                " {} {} {}",
                format_sci(target.predicted[0]),
                format_sci(target.predicted[1]),
                format_sci(target.epsilon_star)
            );
        }
        println!("{line}");
    }
    Ok(())
}
