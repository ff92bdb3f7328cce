//! Subcommand implementations. Each takes a parsed config (where one is
//! needed) and the output root, writes its files and returns what it
//! computed so callers and tests can inspect it.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::results::{append_row, compare_rows, find_row, read_rows, ResultRow};
use bondlearn::dataset::{profile, write_csv, ProfileReport};
use bondlearn::evaluation::{run_cv, SignificanceInterval};
use bondlearn::model::{trainer, FittedModel, ModelArtifact};
use bondlearn::timeseries::{build_group_arma_table, GroupArmaTable, DEFAULT_SAMPLES_PER_GROUP};
use bondlearn::tree_ensembles::{rf_feature_ranking, FeatureRanking};
use bondlearn::SCHEMA_VERSION;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const OUT_ENV: &str = "BONDLEARN_OUT";
pub const DEFAULT_OUT: &str = "bondlearn-out";

/// Output root: the `--out` flag, then the config's `out_dir`, then the
/// environment variable, then `./bondlearn-out`.
pub fn resolve_out(flag: Option<&Path>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = cfg.and_then(|c| c.out_dir.clone()) {
        return p;
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

fn ensure_dir(p: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
}

fn write_file(p: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(p, contents).map_err(|e| CliError::io(p, e))
}

fn write_json<T: Serialize>(p: &Path, value: &T) -> Result<(), CliError> {
    write_file(p, &serde_json::to_string_pretty(value)?)
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    schema_version: &'a str,
    generator: bondlearn::dataset::SyntheticConfig,
}

/// Writes `synthetic.csv` and `synthetic.provenance.json` (the generator
/// parameters, seed included).
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    if cfg.data_path.is_some() {
        return Err(CliError::Usage("generate builds synthetic data; remove data_path".into()));
    }
    let synth = cfg.synthetic_config()?;
    let ds = cfg.load_data()?;
    ensure_dir(out)?;
    let path = out.join("synthetic.csv");
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_csv(&ds, std::io::BufWriter::new(file))?;
    write_json(
        &out.join("synthetic.provenance.json"),
        &Provenance {
            schema_version: SCHEMA_VERSION,
            generator: synth,
        },
    )?;
    Ok(path)
}

/// Writes `profile.json`.
pub fn cmd_profile(cfg: &ExperimentConfig, out: &Path) -> Result<ProfileReport, CliError> {
    let ds = cfg.load_data()?;
    let report = profile(&ds)?;
    ensure_dir(out)?;
    write_json(&out.join("profile.json"), &report)?;
    Ok(report)
}

/// Runs the configured method through repeated weight-balanced hold-out,
/// persists the run under `runs/<run_id>/` and appends its row to the
/// results table.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<ResultRow, CliError> {
    let spec = cfg.train_spec()?;
    let cv = cfg.cv_options()?;
    let label = cfg.label()?;
    let ds = cfg.load_data()?;
    let run_id = format!("{label}-s{}", cv.base_seed);
    let hyper = serde_json::to_value(&spec)?;
    let run = run_cv(&ds, trainer(&spec), &cv, cfg.method()?.name(), hyper)?;

    let dir = out.join("runs").join(&run_id);
    ensure_dir(&dir)?;
    write_file(&dir.join("config.toml"), &cfg.to_toml())?;
    write_json(&dir.join("cv_result.json"), &run.result)?;
    if let Some(model) = &run.first_model {
        write_file(&dir.join("model.json"), &model.to_json()?)?;
        write_model_traces(&dir, model)?;
    }
    let row = ResultRow::new(run_id, label, cfg.clone(), &run.result);
    append_row(out, &row)?;

    let failed: Vec<String> = run
        .result
        .instances
        .iter()
        .filter(|i| !i.completed())
        .map(|i| format!("instance {}: {}", i.index, i.error.as_deref().unwrap_or("")))
        .collect();
    if !failed.is_empty() {
        log::warn!("{}: {} failed instances: {}", row.run_id, failed.len(), failed.join("; "));
    }
    if row.test_weps.is_none() {
        return Err(CliError::Numerical(format!(
            "every instance of {} failed ({})",
            row.run_id,
            failed.join("; ")
        )));
    }
    Ok(row)
}

fn write_model_traces(dir: &Path, model: &ModelArtifact) -> Result<(), CliError> {
    match &model.model {
        FittedModel::Mlp(m) => write_file(&dir.join("training_log.csv"), &m.log_csv()),
        FittedModel::Boost(b) => {
            let mut s = String::from("stage,train_loss\n");
            for (i, l) in b.loss_trace.iter().enumerate() {
                s.push_str(&format!("{i},{l}\n"));
            }
            write_file(&dir.join("loss_trace.csv"), &s)
        }
        _ => Ok(()),
    }
}

/// Writes `feature_ranking.json`.
pub fn cmd_rank_features(cfg: &ExperimentConfig, out: &Path) -> Result<FeatureRanking, CliError> {
    let opts = cfg.ranking_options()?;
    let ds = cfg.load_data()?;
    let ranking = rf_feature_ranking(&ds, &cfg.features(), &opts)?;
    ensure_dir(out)?;
    write_json(&out.join("feature_ranking.json"), &ranking)?;
    Ok(ranking)
}

/// Writes `ts_table.json`, the per-bond-type ARMA table over the whole
/// dataset. Runs with `ts_augment` never use it; they rebuild the table on
/// each training split.
pub fn cmd_build_ts_table(cfg: &ExperimentConfig, out: &Path) -> Result<GroupArmaTable, CliError> {
    let ds = cfg.load_data()?;
    let table = build_group_arma_table(
        &ds,
        cfg.ts_samples_per_group.unwrap_or(DEFAULT_SAMPLES_PER_GROUP),
        cfg.seed()?,
    )?;
    ensure_dir(out)?;
    write_json(&out.join("ts_table.json"), &table)?;
    Ok(table)
}

/// Significance of row `a`'s test error minus row `b`'s.
pub fn cmd_compare(out: &Path, a: &str, b: &str) -> Result<SignificanceInterval, CliError> {
    let rows = read_rows(out)?;
    compare_rows(find_row(&rows, a)?, find_row(&rows, b)?)
}

pub fn format_comparison(a: &str, b: &str, s: &SignificanceInterval) -> String {
    let interval = match (s.lower, s.upper) {
        (Some(lo), Some(hi)) => format!("[{lo:.6}, {hi:.6}]"),
        _ => "undefined (negative variance)".to_string(),
    };
    let verdict = if s.significant {
        if s.difference < 0.0 {
            format!("{a} is significantly better")
        } else {
            format!("{b} is significantly better")
        }
    } else {
        "difference is not significant".to_string()
    };
    let mut text = format!(
        "{a} vs {b}: d = {:.6} (n = {}), 95% interval {interval}; {verdict}",
        s.difference, s.n
    );
    if s.outside_unit_interval {
        text.push_str("\nnote: an error lies outside [0, 1], where the variance formula has no probabilistic reading");
    }
    text
}

pub use crate::report::cmd_report;
