//! Append-only results table stored as JSON lines under the output root.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use bondlearn::evaluation::{significance_interval, CvResult, SignificanceInterval};
use serde::{Deserialize, Serialize};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const RESULTS_FILE: &str = "results.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub seed: u64,
    pub n_test: usize,
    pub train_weps: Option<f64>,
    pub test_weps: Option<f64>,
    pub fit_seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Directory name under `runs/` holding the config, CV result and
    /// instance-0 model.
    pub run_id: String,
    pub label: String,
    pub method: String,
    pub seed: u64,
    pub pca_k: Option<usize>,
    pub train_weps: Option<f64>,
    pub test_weps: Option<f64>,
    pub fit_seconds: Option<f64>,
    /// Test-set size when every instance has the same one.
    pub n_test: Option<usize>,
    pub failed_instances: usize,
    pub instances: Vec<InstanceRow>,
    pub config: ExperimentConfig,
}

impl ResultRow {
    pub fn new(run_id: String, label: String, config: ExperimentConfig, cv: &CvResult) -> Self {
        ResultRow {
            run_id,
            label,
            method: cv.method.clone(),
            seed: config.seed.unwrap_or_default(),
            pca_k: config.pca_k,
            train_weps: cv.mean_train_weps,
            test_weps: cv.mean_test_weps,
            fit_seconds: cv.mean_fit_seconds,
            n_test: cv.common_test_size(),
            failed_instances: cv.failed_instances,
            instances: cv
                .instances
                .iter()
                .map(|i| InstanceRow {
                    seed: i.seed,
                    n_test: i.n_test,
                    train_weps: i.train_weps,
                    test_weps: i.test_weps,
                    fit_seconds: i.fit_seconds,
                    error: i.error.clone(),
                })
                .collect(),
            config,
        }
    }
}

pub fn results_path(out: &Path) -> PathBuf {
    out.join(RESULTS_FILE)
}

/// Appends one row under an exclusive advisory lock so concurrent runs do
/// not interleave lines.
pub fn append_row(out: &Path, row: &ResultRow) -> Result<(), CliError> {
    let path = results_path(out);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| CliError::io(&path, e))?;
    file.lock().map_err(|e| CliError::io(&path, e))?;
    let mut line = serde_json::to_string(row)?;
    line.push('\n');
    let written = file.write_all(line.as_bytes()).and_then(|_| file.flush());
    file.unlock().map_err(|e| CliError::io(&path, e))?;
    written.map_err(|e| CliError::io(&path, e))
}

pub fn read_rows(out: &Path) -> Result<Vec<ResultRow>, CliError> {
    let path = results_path(out);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CliError::Data(format!("no completed runs under {}", out.display())))
        }
        Err(e) => return Err(CliError::io(&path, e)),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Finds a row by run id, or by label when that label is unique. A label
/// shared by several rows resolves to the most recent one.
pub fn find_row<'a>(rows: &'a [ResultRow], key: &str) -> Result<&'a ResultRow, CliError> {
    rows.iter()
        .rev()
        .find(|r| r.run_id == key)
        .or_else(|| rows.iter().rev().find(|r| r.label == key))
        .ok_or_else(|| CliError::Usage(format!("no results row named {key}")))
}

/// Significance of `a`'s mean test error minus `b`'s. Both rows must share
/// the same test-set size.
pub fn compare_rows(a: &ResultRow, b: &ResultRow) -> Result<SignificanceInterval, CliError> {
    let (Some(na), Some(nb)) = (a.n_test, b.n_test) else {
        return Err(CliError::Data("rows without a common test size cannot be compared".into()));
    };
    if na != nb {
        return Err(CliError::Data(format!(
            "rows {} and {} were evaluated on different test sizes ({na} vs {nb})",
            a.run_id, b.run_id
        )));
    }
    let (Some(e1), Some(e2)) = (a.test_weps, b.test_weps) else {
        return Err(CliError::Data("both rows need a completed test error".into()));
    };
    Ok(significance_interval(e1, e2, na)?)
}
