use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mtssl::bench::ScenarioSpec;
use mtssl::cli::model::ModelFile;

fn mtssl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtssl")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mtssl(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate_beta(dir: &Path, beta: &str, seed: &str) -> (PathBuf, PathBuf, PathBuf) {
    ok(&["generate", "--scenario", "beta", "--beta", beta, "--seed", seed, "--out-dir", s(dir)]);
    (dir.join("task1.csv"), dir.join("task2.csv"), dir.join("truth.csv"))
}

#[test]
fn fit_predict_round_trip_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (t1, t2, _) = generate_beta(d, "0.5", "3");
    let model = d.join("model.json");
    let report = d.join("report.txt");
    ok(&["fit", s(&t1), s(&t2), "--target", "1", "--out", s(&model), "--report", s(&report)]);
    assert!(std::fs::read_to_string(&report).unwrap().contains("target task 1"));

    let first = d.join("a.csv");
    let second = d.join("b.csv");
    ok(&["predict", "--model", s(&model), s(&t1), s(&t2), "--out", s(&first)]);
    ok(&["predict", "--model", s(&model), s(&t1), s(&t2), "--out", s(&second)]);
    let a = std::fs::read(&first).unwrap();
    assert_eq!(a, std::fs::read(&second).unwrap());
    assert!(d.join("a.csv.manifest.json").exists());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "sampleId,task,score,class");
    assert_eq!(text.lines().count(), 251);

    let loaded = ModelFile::load(&model).unwrap();
    let reparsed: ModelFile = serde_json::from_str(&serde_json::to_string(&loaded).unwrap()).unwrap();
    assert_eq!(loaded, reparsed);
    assert_eq!(loaded.targets.len(), 1);
    assert_eq!(loaded.uncertainty.d_bar, nalgebra::DMatrix::identity(4, 4));
}

#[test]
fn refitting_with_the_same_seed_gives_the_same_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (t1, t2, _) = generate_beta(d, "-0.5", "8");
    let m1 = d.join("m1.json");
    let m2 = d.join("m2.json");
    for m in [&m1, &m2] {
        ok(&["fit", s(&t1), s(&t2), "--target", "2", "--out", s(m), "--report", s(&d.join("r.txt"))]);
    }
    let (a, b) = (ModelFile::load(&m1).unwrap(), ModelFile::load(&m2).unwrap());
    assert_eq!(a.targets, b.targets);
    assert_eq!(a.mean_gram, b.mean_gram);
}

#[test]
fn predicted_error_tracks_the_evaluated_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut spec = ScenarioSpec::beta(1.0, 0);
    spec.tasks[0].unlabeled = [1000, 1000];
    let spec_path = d.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    ok(&["generate", "--spec", s(&spec_path), "--seed", "21", "--out-dir", s(d)]);
    let model = d.join("model.json");
    ok(&["fit", s(&d.join("task1.csv")), s(&d.join("task2.csv")), "--target", "1", "--out", s(&model), "--report", s(&d.join("r.txt"))]);
    let preds = d.join("p.csv");
    ok(&["predict", "--model", s(&model), s(&d.join("task1.csv")), s(&d.join("task2.csv")), "--out", s(&preds)]);
    let table = ok(&["eval", "--predictions", s(&preds), "--truth", s(&d.join("truth.csv")), "--model", s(&model)]);
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "task samples eps1 eps2 error predicted_eps1 predicted_eps2 predicted_eps_star"
    );
    let row: Vec<f64> = lines.next().unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[1], 2000.0);
    let (empirical, predicted) = (row[4], row[7]);
    assert!((empirical - predicted).abs() <= 0.02, "empirical {empirical} predicted {predicted}");
}

#[test]
fn predict_error_prints_the_model_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (t1, t2, _) = generate_beta(d, "1", "5");
    let model = d.join("model.json");
    ok(&["fit", s(&t1), s(&t2), "--out", s(&model), "--report", s(&d.join("r.txt")), "--threshold-policy", "false-negative-cap:0.05"]);
    let table = ok(&["predict-error", "--model", s(&model)]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "task alpha m1 m2 sigma zeta eps1 eps2 eps_star");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cells: Vec<f64> = line.split_whitespace().map(|v| v.parse().unwrap()).collect();
        assert_eq!(cells.len(), 9);
        assert!((cells[7] - 0.05).abs() < 1e-9);
    }
}

#[test]
fn config_file_sets_options_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (t1, t2, _) = generate_beta(d, "0", "2");
    let cfg = d.join("fit.toml");
    std::fs::write(&cfg, "alpha-grid = \"3:30:4\"\nsolver = \"direct-n\"\ntargets = [2]\n").unwrap();
    let model = d.join("model.json");
    ok(&["fit", s(&t1), s(&t2), "--config", s(&cfg), "--out", s(&model), "--report", s(&d.join("r.txt"))]);
    let m = ModelFile::load(&model).unwrap();
    assert_eq!(m.targets.len(), 1);
    assert_eq!(m.targets[0].task, 2);
    assert_eq!(m.options.alpha_grid.points, 4);
    let ratio = m.targets[0].alpha_over_norm;
    assert!(ratio >= 3.0 - 1e-9 && ratio <= 30.0 + 1e-9);

    std::fs::write(&cfg, "alpha = 3\n").unwrap();
    let out = mtssl(&["fit", s(&t1), s(&t2), "--config", s(&cfg), "--out", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_class_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, "sampleId,label,f1,f2\na,1,0.1,0.2\nb,1,0.3,-0.1\nc,,0.5,0.5\nd,,0.2,0.1\n").unwrap();
    let out = mtssl(&["fit", s(&path), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DegenerateClass"));
}

#[test]
fn feature_mismatch_is_a_usage_failure() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "x,1,0.1,0.2\ny,2,0.3,0.1\nz,,0.0,0.0\n").unwrap();
    std::fs::write(&b, "x,1,0.1\ny,2,0.3\nz,,0.0\n").unwrap();
    let out = mtssl(&["fit", s(&a), s(&b), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DimensionMismatch"));
}

#[test]
fn unknown_experiment_lists_the_choices() {
    let out = mtssl(&["experiment", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beta-sweep") && err.contains("uncertain"));
}

#[test]
fn probabilistic_and_headerless_files_parse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut text = String::new();
    let mut r = 1.0f64;
    for i in 0..40 {
        r = (r * 7919.0 + 0.37).fract();
        let label = match i % 4 {
            0 => "1".to_string(),
            1 => "2".to_string(),
            2 => "0.8:0.2".to_string(),
            _ => String::new(),
        };
        let shift = if i % 4 == 1 { 1.0 } else { -1.0 };
        text += &format!("s{i},{label},{},{},{}\n", shift + r, r - 0.5, 0.3 * r);
    }
    std::fs::write(&path, text).unwrap();
    let (dataset, files) = mtssl::cli::io::read_dataset(&[path.clone()]).unwrap();
    assert_eq!(files[0].labeled_ids.len(), 30);
    assert_eq!(files[0].unlabeled_ids.len(), 10);
    assert_eq!(dataset.feature_dim(), 3);
    let probs = dataset.task(0).labels().probabilities();
    assert_eq!(probs[2], [0.8, 0.2]);
    assert_eq!(probs[1], [0.0, 1.0]);
}

#[test]
fn uncertain_experiment_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&["experiment", "uncertain", "--points", "2", "--out-dir", s(&out)]);
    let text = std::fs::read_to_string(out.join("uncertain.dat")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# manifest: manifest.json");
    assert_eq!(lines.next().unwrap(), "r n_r n_i ratio");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    for row in rows.iter().filter(|r| r[0] == 1.0) {
        assert_eq!(row[3], 1.0);
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn beta_sweep_experiment_runs_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&["experiment", "beta-sweep", "--points", "3", "--trials", "2", "--out-dir", s(&out)]);
    let text = std::fs::read_to_string(out.join("beta_sweep.dat")).unwrap();
    assert_eq!(text.lines().count(), 2 + 3);
    assert!(text.lines().nth(1).unwrap().starts_with("beta "));
}

#[test]
fn generated_truth_covers_every_unlabeled_sample() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--scenario", "uncertain", "--seed", "4", "--out-dir", s(d)]);
    let truth = mtssl::cli::io::read_truth_csv(&d.join("truth.csv")).unwrap();
    assert_eq!(truth.len(), 400);
    let (dataset, _) = mtssl::cli::io::read_dataset(&[d.join("task1.csv")]).unwrap();
    assert!(!dataset.task(0).labels().is_certain());
}
