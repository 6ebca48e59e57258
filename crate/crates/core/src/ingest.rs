//! Score files and the preprocessing pipeline: duplicate averaging,
//! complete-case filtering and namespace handling.
//!
//! Supported inputs:
//!
//! * long CSV with header `model,task,score`, one triple per row;
//! * wide CSV whose first header is `task` and whose other headers are
//!   model ids, with blank cells for missing scores;
//! * JSON mapping model id to a mapping of task id to score.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregation::row_sum;
use crate::error::{Error, Result};
use crate::matrix::ScoreMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guess from the file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::input(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub model: String,
    pub task: String,
    pub score: f64,
}

/// Parsed score triples. Models and tasks that appear only with missing
/// cells are still listed so the preprocessing report can name them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawRecords {
    pub records: Vec<Record>,
    pub models: Vec<String>,
    pub tasks: Vec<String>,
}

impl RawRecords {
    pub fn from_triples<M, T>(triples: impl IntoIterator<Item = (M, T, f64)>) -> Result<Self>
    where
        M: Into<String>,
        T: Into<String>,
    {
        let mut out = RawRecords::default();
        for (m, t, s) in triples {
            out.push(m.into(), t.into(), s, "record")?;
        }
        Ok(out)
    }

    fn push(&mut self, model: String, task: String, score: f64, at: &str) -> Result<()> {
        if model.is_empty() || task.is_empty() {
            return Err(Error::input(format!("{at}: empty model or task id")));
        }
        check_score(score, at)?;
        self.records.push(Record { model, task, score });
        Ok(())
    }

    fn declared(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut models: BTreeSet<String> = self.models.iter().cloned().collect();
        let mut tasks: BTreeSet<String> = self.tasks.iter().cloned().collect();
        for r in &self.records {
            models.insert(r.model.clone());
            tasks.insert(r.task.clone());
        }
        (models, tasks)
    }
}

fn check_score(score: f64, at: &str) -> Result<()> {
    if score.is_finite() && (0.0..=1.0).contains(&score) {
        Ok(())
    } else {
        Err(Error::input(format!("{at}: score {score} outside [0, 1]")))
    }
}

fn parse_number(field: &str, at: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("{at}: {field:?} is not a number")))?;
    check_score(v, at)?;
    Ok(v)
}

pub fn parse_scores(path: &Path, format: Format) -> Result<RawRecords> {
    let mut text = String::new();
    fs::File::open(path)
        .map_err(|e| Error::input(format!("cannot open {}: {e}", path.display())))?
        .read_to_string(&mut text)
        .map_err(|e| Error::input(format!("cannot read {} as UTF-8: {e}", path.display())))?;
    parse_str(&text, format)
}

pub fn parse_str(text: &str, format: Format) -> Result<RawRecords> {
    match format {
        Format::Csv => parse_csv(text),
        Format::Json => parse_json(text),
    }
}

fn parse_csv(text: &str) -> Result<RawRecords> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::input(format!("CSV header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::input(format!("CSV header: duplicate column {h:?}")));
        }
    }
    let mut out = RawRecords::default();
    let lower: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if lower == ["model", "task", "score"] {
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::input(format!("line {line}: {e}")))?;
            let at = format!("line {line}");
            let score = parse_number(&row[2], &format!("{at}, field score"))?;
            out.push(row[0].trim().to_string(), row[1].trim().to_string(), score, &at)?;
        }
    } else if lower.first().map(String::as_str) == Some("task") {
        let models = &headers[1..];
        if models.iter().any(String::is_empty) {
            return Err(Error::input("CSV header: empty model id"));
        }
        out.models = models.to_vec();
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::input(format!("line {line}: {e}")))?;
            let task = row[0].trim().to_string();
            if task.is_empty() {
                return Err(Error::input(format!("line {line}: empty task id")));
            }
            out.tasks.push(task.clone());
            for (model, cell) in models.iter().zip(row.iter().skip(1)) {
                if cell.trim().is_empty() {
                    continue;
                }
                let at = format!("line {line}, field {model:?}");
                let score = parse_number(cell, &at)?;
                out.push(model.clone(), task.clone(), score, &at)?;
            }
        }
    } else {
        return Err(Error::input(
            "CSV header: expected `model,task,score` (long form) or `task,<model ids>` (wide form)",
        ));
    }
    Ok(out)
}

fn parse_json(text: &str) -> Result<RawRecords> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::input(format!("JSON: {e}")))?;
    let models = value
        .as_object()
        .ok_or_else(|| Error::input("JSON: top level must map model ids to task mappings"))?;
    let mut out = RawRecords::default();
    for (model, tasks) in models {
        out.models.push(model.clone());
        let tasks = tasks
            .as_object()
            .ok_or_else(|| Error::input(format!("JSON: scores of {model:?} must be a mapping")))?;
        for (task, score) in tasks {
            let at = format!("JSON {model:?}/{task:?}");
            if score.is_null() {
                out.tasks.push(task.clone());
                continue;
            }
            let score = score
                .as_f64()
                .ok_or_else(|| Error::input(format!("{at}: not a number")))?;
            out.push(model.clone(), task.clone(), score, &at)?;
        }
    }
    Ok(out)
}

/// What preprocessing removed or merged.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub dropped_models: Vec<String>,
    pub dropped_tasks: Vec<String>,
    /// `model`, `task` and the number of entries averaged, for every cell
    /// that had more than one entry.
    pub duplicate_counts: Vec<DuplicateCount>,
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuplicateCount {
    pub model: String,
    pub task: String,
    pub count: usize,
}

/// Average duplicates, then drop tasks no model has, then models missing
/// any remaining task, then tasks still incomplete. Ids come out sorted.
pub fn build_matrix(records: &RawRecords) -> Result<(ScoreMatrix, PreprocessReport)> {
    if records.records.is_empty() {
        return Err(Error::input("no scores to build a matrix from"));
    }
    let (models, tasks) = records.declared();

    let mut cells: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in &records.records {
        cells.entry((r.model.as_str(), r.task.as_str())).or_default().push(r.score);
    }
    let mut report = PreprocessReport::default();
    let mut values: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for ((m, t), mut v) in cells {
        if v.len() > 1 {
            report.duplicate_counts.push(DuplicateCount { model: m.into(), task: t.into(), count: v.len() });
        }
        // sorted summation makes the mean independent of input order
        v.sort_by(f64::total_cmp);
        let mean = (v.iter().sum::<f64>() / v.len() as f64).clamp(0.0, 1.0);
        values.insert((m, t), mean);
    }

    let has = |m: &str, t: &str| values.contains_key(&(m, t));
    let mut keep_tasks: Vec<&str> = Vec::new();
    for t in &tasks {
        if models.iter().any(|m| has(m, t)) {
            keep_tasks.push(t);
        } else {
            report.dropped_tasks.push(t.clone());
        }
    }
    let mut keep_models: Vec<&str> = Vec::new();
    for m in &models {
        if keep_tasks.iter().all(|t| has(m, t)) {
            keep_models.push(m);
        } else {
            report.dropped_models.push(m.clone());
        }
    }
    if !keep_models.is_empty() {
        keep_tasks.retain(|t| {
            let complete = keep_models.iter().all(|m| has(m, t));
            if !complete {
                report.dropped_tasks.push(t.to_string());
            }
            complete
        });
    }
    report.dropped_tasks.sort();
    if keep_models.is_empty() || keep_tasks.is_empty() {
        return Err(Error::input(format!(
            "no complete model-by-task matrix remains after filtering (dropped {} models, {} tasks)",
            report.dropped_models.len(),
            report.dropped_tasks.len()
        )));
    }
    let rows = keep_models
        .iter()
        .map(|m| keep_tasks.iter().map(|t| values[&(*m, *t)]).collect())
        .collect();
    let matrix = ScoreMatrix::new(
        keep_models.iter().map(|s| s.to_string()).collect(),
        keep_tasks.iter().map(|s| s.to_string()).collect(),
        rows,
    )?;
    report.n = matrix.n();
    report.m = matrix.m();
    Ok((matrix, report))
}

/// Lowercased part of the id before the first `/`, or the whole id.
pub fn extract_namespace(model_id: &str) -> String {
    model_id.split('/').next().unwrap_or(model_id).to_lowercase()
}

/// Keep the best-mean model of every namespace; ties go to the smaller id.
pub fn best_per_namespace(matrix: &ScoreMatrix) -> ScoreMatrix {
    let mut best: BTreeMap<&str, usize> = BTreeMap::new();
    for i in 0..matrix.n() {
        let ns = matrix.namespaces()[i].as_str();
        let sum = row_sum(matrix.row(i));
        match best.get(ns) {
            Some(&j) => {
                let other = row_sum(matrix.row(j));
                let ids = matrix.model_ids();
                if sum > other || (sum == other && ids[i] < ids[j]) {
                    best.insert(ns, i);
                }
            }
            None => {
                best.insert(ns, i);
            }
        }
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    matrix.select_models(&keep)
}

/// Write a matrix as a long-form CSV string, readable by [`parse_str`].
pub fn to_long_csv(matrix: &ScoreMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "task", "score"]).expect("in-memory write");
    for (i, model) in matrix.model_ids().iter().enumerate() {
        for (j, task) in matrix.task_ids().iter().enumerate() {
            w.write_record([model.as_str(), task.as_str(), &format!("{:?}", matrix.score(i, j))])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ASCII numbers and UTF-8 ids")
}

/// The JSON input form of a matrix, readable by [`parse_str`].
pub fn to_json_value(matrix: &ScoreMatrix) -> serde_json::Value {
    let mut top = serde_json::Map::new();
    for (i, model) in matrix.model_ids().iter().enumerate() {
        let row = matrix
            .task_ids()
            .iter()
            .zip(matrix.row(i))
            .map(|(t, &s)| (t.clone(), serde_json::Value::from(s)))
            .collect();
        top.insert(model.clone(), serde_json::Value::Object(row));
    }
    serde_json::Value::Object(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_csv() {
        let r = parse_str("model,task,score\nm1,t1,0.5\nm1,t2,0.25\nm2,t1,1\n", Format::Csv).unwrap();
        assert_eq!(r.records.len(), 3);
        assert_eq!(r.records[1], Record { model: "m1".into(), task: "t2".into(), score: 0.25 });
    }

    #[test]
    fn wide_csv_skips_blanks() {
        let r = parse_str("task,m1,m2\nt1,0.5,\nt2,0.1,0.2\n", Format::Csv).unwrap();
        assert_eq!(r.records.len(), 3);
        assert_eq!(r.models, vec!["m1", "m2"]);
        assert_eq!(r.tasks, vec!["t1", "t2"]);
    }

    #[test]
    fn json_single() {
        let r = parse_str(r#"{"m1":{"t1":0.5}}"#, Format::Json).unwrap();
        assert_eq!(r.records, vec![Record { model: "m1".into(), task: "t1".into(), score: 0.5 }]);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let e = parse_str("model,task,score\nm1,t1,0.5\nm1,t2,1.5\n", Format::Csv).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = parse_str("model,task,score\nm1,t1,abc\n", Format::Csv).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(parse_str("task,m1,m1\nt1,0.1,0.2\n", Format::Csv).is_err());
        assert!(parse_str("foo,bar\n1,2\n", Format::Csv).is_err());
        assert!(parse_str("model,task,score\nm1,t1\n", Format::Csv).is_err());
    }

    #[test]
    fn duplicates_are_averaged() {
        let r = RawRecords::from_triples([("m1", "t1", 0.4), ("m1", "t1", 0.6)]).unwrap();
        let (mx, rep) = build_matrix(&r).unwrap();
        assert_eq!(mx.score(0, 0), 0.5);
        assert_eq!(rep.duplicate_counts, vec![DuplicateCount { model: "m1".into(), task: "t1".into(), count: 2 }]);
    }

    #[test]
    fn incomplete_model_dropped() {
        let r = RawRecords::from_triples([("a", "t1", 0.1), ("a", "t2", 0.2), ("b", "t1", 0.3)]).unwrap();
        let (mx, rep) = build_matrix(&r).unwrap();
        assert_eq!(mx.model_ids(), ["a"]);
        assert_eq!(mx.m(), 2);
        assert_eq!(rep.dropped_models, vec!["b"]);
        assert!(rep.dropped_tasks.is_empty());
    }

    #[test]
    fn all_missing_task_dropped_first() {
        let r = parse_str("task,a,b\nt1,0.1,0.2\nt2,,\n", Format::Csv).unwrap();
        let (mx, rep) = build_matrix(&r).unwrap();
        assert_eq!(mx.n(), 2);
        assert_eq!(rep.dropped_tasks, vec!["t2"]);
        assert!(rep.dropped_models.is_empty());
    }

    #[test]
    fn complete_records_unchanged() {
        let r = RawRecords::from_triples([("b", "t2", 0.1), ("a", "t1", 0.2), ("a", "t2", 0.3), ("b", "t1", 0.4)]).unwrap();
        let (mx, rep) = build_matrix(&r).unwrap();
        assert_eq!(mx.model_ids(), ["a", "b"]);
        assert_eq!(mx.task_ids(), ["t1", "t2"]);
        assert_eq!(mx.row(1), &[0.4, 0.1]);
        assert_eq!(rep, PreprocessReport { n: 2, m: 2, ..Default::default() });
    }

    #[test]
    fn nothing_left_is_an_error() {
        let r = RawRecords::from_triples([("a", "t1", 0.1), ("b", "t2", 0.2)]).unwrap();
        assert!(build_matrix(&r).is_err());
        assert!(build_matrix(&RawRecords::default()).is_err());
    }

    #[test]
    fn namespaces() {
        assert_eq!(extract_namespace("Meta-Llama/Llama-3-8B"), "meta-llama");
        assert_eq!(extract_namespace("gpt-4"), "gpt-4");
        assert_eq!(extract_namespace("Org/a/b"), "org");
    }

    #[test]
    fn best_per_namespace_keeps_highest_mean() {
        let mx = ScoreMatrix::new(
            vec!["o/x".into(), "o/y".into(), "p/z".into()],
            vec!["t".into()],
            vec![vec![0.6], vec![0.7], vec![0.1]],
        )
        .unwrap();
        assert_eq!(best_per_namespace(&mx).model_ids(), ["o/y", "p/z"]);

        let tied = ScoreMatrix::new(
            vec!["o/y".into(), "o/x".into()],
            vec!["t".into()],
            vec![vec![0.5], vec![0.5]],
        )
        .unwrap();
        assert_eq!(best_per_namespace(&tied).model_ids(), ["o/x"]);

        let distinct = ScoreMatrix::from_rows(vec![vec![0.1], vec![0.2]]).unwrap();
        assert_eq!(best_per_namespace(&distinct), distinct);
    }

    #[test]
    fn writers_round_trip() {
        let mx = ScoreMatrix::from_rows(vec![vec![0.1, 0.2], vec![1.0 / 3.0, 0.0]]).unwrap();
        let (back, _) = build_matrix(&parse_str(&to_long_csv(&mx), Format::Csv).unwrap()).unwrap();
        assert_eq!(back, mx);
        let (back, _) = build_matrix(&parse_str(&to_json_value(&mx).to_string(), Format::Json).unwrap()).unwrap();
        assert_eq!(back, mx);
    }
}
