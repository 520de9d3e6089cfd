//! Task CSV files and truth tables.
//!
//! One file per task. Columns: `sampleId, label, x_1 .. x_p`, where the label
//! is `1`, `2`, a probability pair `p1:p2`, or empty for unlabeled samples.
//! A header row is recognized when its third field is not numeric.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{Class, Dataset, LabelAssignment, TaskData};

use super::CliError;

#[derive(Clone, Debug, PartialEq)]
enum RawLabel {
    Certain(Class),
    Probabilistic([f64; 2]),
}

/// One parsed task file.
#[derive(Clone, Debug)]
pub struct TaskFile {
    pub labeled_ids: Vec<String>,
    pub unlabeled_ids: Vec<String>,
    pub task: TaskData,
}

fn parse_label(field: &str, line: usize, path: &Path) -> Result<Option<RawLabel>, CliError> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let bad = |why: String| CliError::schema(format!("{}:{line}: {why}", path.display()));
    if let Some((a, b)) = field.split_once(':') {
        let p1: f64 = a.trim().parse().map_err(|_| bad(format!("bad probability '{a}'")))?;
        let p2: f64 = b.trim().parse().map_err(|_| bad(format!("bad probability '{b}'")))?;
        return Ok(Some(RawLabel::Probabilistic([p1, p2])));
    }
    match field {
        "1" => Ok(Some(RawLabel::Certain(Class::C1))),
        "2" => Ok(Some(RawLabel::Certain(Class::C2))),
        other => Err(bad(format!("label '{other}' is not 1, 2, p1:p2 or empty"))),
    }
}

pub fn read_task_csv(path: &Path) -> Result<TaskFile, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;

    let mut labeled_ids = Vec::new();
    let mut unlabeled_ids = Vec::new();
    let mut labeled_cols: Vec<f64> = Vec::new();
    let mut unlabeled_cols: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut p: Option<usize> = None;

    for (k, record) in reader.records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        if record.len() < 3 {
            return Err(CliError::schema(format!(
                "{}:{line}: expected sampleId, label and at least one feature",
                path.display()
            )));
        }
        if k == 0 && record[2].parse::<f64>().is_err() {
            continue;
        }
        let width = record.len() - 2;
        match p {
            None => p = Some(width),
            Some(p) if p != width => {
                return Err(CliError::schema(format!(
                    "{}:{line}: {width} features, earlier rows have {p}",
                    path.display()
                )))
            }
            _ => {}
        }
        let label = parse_label(&record[1], line, path)?;
        let target = if label.is_some() { &mut labeled_cols } else { &mut unlabeled_cols };
        for field in record.iter().skip(2) {
            let v: f64 = field.parse().map_err(|_| {
                CliError::schema(format!("{}:{line}: feature '{field}' is not a number", path.display()))
            })?;
            if !v.is_finite() {
                return Err(CliError::schema(format!("{}:{line}: non-finite feature", path.display())));
            }
            target.push(v);
        }
        match label {
            Some(l) => {
                labeled_ids.push(record[0].to_string());
                labels.push(l);
            }
            None => unlabeled_ids.push(record[0].to_string()),
        }
    }
    let p = p.ok_or_else(|| CliError::schema(format!("{}: no samples", path.display())))?;

    let assignment = if labels.iter().all(|l| matches!(l, RawLabel::Certain(_))) {
        LabelAssignment::Certain(
            labels
                .iter()
                .map(|l| match l {
                    RawLabel::Certain(c) => *c,
                    RawLabel::Probabilistic(_) => unreachable!(),
                })
                .collect(),
        )
    } else {
        LabelAssignment::Probabilistic {
            probs: labels
                .iter()
                .map(|l| match l {
                    RawLabel::Certain(Class::C1) => [1.0, 0.0],
                    RawLabel::Certain(Class::C2) => [0.0, 1.0],
                    RawLabel::Probabilistic(d) => *d,
                })
                .collect(),
            genuine: None,
        }
    };
    let labeled = DMatrix::from_column_slice(p, labeled_ids.len(), &labeled_cols);
    let unlabeled = DMatrix::from_column_slice(p, unlabeled_ids.len(), &unlabeled_cols);
    let task = TaskData::new(labeled, unlabeled, assignment).map_err(|e| CliError::from_lib("load", e))?;
    Ok(TaskFile {
        labeled_ids,
        unlabeled_ids,
        task,
    })
}

/// Reads one file per task and checks that they share a feature dimension.
pub fn read_dataset(paths: &[impl AsRef<Path>]) -> Result<(Dataset, Vec<TaskFile>), CliError> {
    if paths.is_empty() {
        return Err(CliError::usage("at least one task file is required"));
    }
    let files = paths
        .iter()
        .map(|p| read_task_csv(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = Dataset::new(files.iter().map(|f| f.task.clone()).collect())
        .map_err(|e| CliError::from_lib("load", e))?;
    Ok((dataset, files))
}

fn label_field(labels: &LabelAssignment, i: usize) -> String {
    match labels {
        LabelAssignment::Certain(classes) => classes[i].number().to_string(),
        LabelAssignment::Probabilistic { probs, .. } => format!("{}:{}", probs[i][0], probs[i][1]),
    }
}

/// Writes a task in the CSV layout read by [`read_task_csv`].
pub fn write_task_csv(path: &Path, task: &TaskData, ids: &[String]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    let p = task.feature_dim();
    let mut header = vec!["sampleId".to_string(), "label".to_string()];
    header.extend((1..=p).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    let n_l = task.n_labeled();
    for (i, id) in ids.iter().enumerate() {
        let (label, col) = if i < n_l {
            (label_field(task.labels(), i), task.labeled().column(i))
        } else {
            (String::new(), task.unlabeled().column(i - n_l))
        };
        let mut row = vec![id.clone(), label];
        row.extend(col.iter().map(|v| format!("{v:?}")));
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `sampleId, task, class` rows of the known unlabeled classes.
pub fn write_truth_csv(path: &Path, rows: &[(String, usize, Class)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(["sampleId", "task", "class"]).map_err(|e| CliError::io(path, e))?;
    for (id, task, class) in rows {
        w.write_record([id.as_str(), &task.to_string(), &class.number().to_string()])
            .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_truth_csv(path: &Path) -> Result<HashMap<(usize, String), Class>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        if record.len() != 3 {
            return Err(CliError::schema(format!("{}: truth rows need sampleId,task,class", path.display())));
        }
        let task: usize = record[1]
            .parse()
            .map_err(|_| CliError::schema(format!("{}: bad task '{}'", path.display(), &record[1])))?;
        let class = record[2]
            .parse::<u8>()
            .ok()
            .and_then(Class::from_number)
            .ok_or_else(|| CliError::schema(format!("{}: bad class '{}'", path.display(), &record[2])))?;
        out.insert((task, record[0].to_string()), class);
    }
    Ok(out)
}

/// One row of a predictions file.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub sample_id: String,
    pub task: usize,
    pub score: f64,
    pub class: Class,
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(["sampleId", "task", "score", "class"]).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record([
            r.sample_id.as_str(),
            &r.task.to_string(),
            &format!("{:?}", r.score),
            &r.class.number().to_string(),
        ])
        .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        let bad = || CliError::schema(format!("{}: malformed prediction row {:?}", path.display(), record));
        if record.len() != 4 {
            return Err(bad());
        }
        rows.push(PredictionRow {
            sample_id: record[0].to_string(),
            task: record[1].parse().map_err(|_| bad())?,
            score: record[2].parse().map_err(|_| bad())?,
            class: record[3].parse::<u8>().ok().and_then(Class::from_number).ok_or_else(bad)?,
        });
    }
    Ok(rows)
}
