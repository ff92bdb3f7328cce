//! Results table and plot-data files built from `results.jsonl`.
//!
//! * `results_table.txt` / `results_table.csv`: one row per run with label,
//!   mean train and test WEPS and mean fit time, then the test WEPS of each
//!   instance.
//! * `pca_curve.csv`: PCR rows ordered by component count.
//! * `time_vs_error.csv`: fit time against test WEPS.
//! * `comparisons.csv`: every row against the OLS row, when there is one.

use crate::error::CliError;
use crate::results::{compare_rows, read_rows, ResultRow};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct ReportSummary {
    pub rows: Vec<ResultRow>,
    pub files: Vec<PathBuf>,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fixed(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

/// Keeps the latest row of each run id, in order of first appearance.
fn latest_per_run(rows: Vec<ResultRow>) -> Vec<ResultRow> {
    let mut out: Vec<ResultRow> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|o| o.run_id == r.run_id) {
            Some(slot) => *slot = r,
            None => out.push(r),
        }
    }
    out
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let k = rows.iter().map(|r| r.instances.len()).max().unwrap_or(0);
    let mut s = String::from("label,train_weps,test_weps,fit_seconds");
    for i in 1..=k {
        write!(s, ",test_weps_{i}").unwrap();
    }
    s.push('\n');
    for r in rows {
        write!(s, "{},{},{},{}", r.label, num(r.train_weps), num(r.test_weps), num(r.fit_seconds)).unwrap();
        for i in 0..k {
            s.push(',');
            s.push_str(&num(r.instances.get(i).and_then(|x| x.test_weps)));
        }
        s.push('\n');
    }
    s
}

pub fn results_text(rows: &[ResultRow]) -> String {
    let k = rows.iter().map(|r| r.instances.len()).max().unwrap_or(0);
    let mut header = vec!["method".to_string(), "train WEPS".into(), "test WEPS".into(), "time (s)".into()];
    header.extend((1..=k).map(|i| format!("test #{i}")));
    let mut table = vec![header];
    for r in rows {
        let mut line = vec![
            r.label.clone(),
            fixed(r.train_weps, 4),
            fixed(r.test_weps, 4),
            fixed(r.fit_seconds, 2),
        ];
        line.extend((0..k).map(|i| fixed(r.instances.get(i).and_then(|x| x.test_weps), 4)));
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for (n, line) in table.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
            .collect();
        s.push_str(cells.join("  ").trim_end());
        s.push('\n');
        if n == 0 {
            s.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            s.push('\n');
        }
    }
    s
}

pub fn pca_curve_csv(rows: &[ResultRow]) -> String {
    let mut pcr: Vec<&ResultRow> = rows.iter().filter(|r| r.method == "pcr").collect();
    pcr.sort_by_key(|r| (r.pca_k.unwrap_or(0), r.label.clone()));
    let mut s = String::from("k,label,train_weps,test_weps\n");
    for r in pcr {
        writeln!(s, "{},{},{},{}", r.pca_k.map(|k| k.to_string()).unwrap_or_default(), r.label, num(r.train_weps), num(r.test_weps)).unwrap();
    }
    s
}

pub fn time_vs_error_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("label,fit_seconds,test_weps\n");
    for r in rows {
        writeln!(s, "{},{},{}", r.label, num(r.fit_seconds), num(r.test_weps)).unwrap();
    }
    s
}

pub fn comparisons_csv(rows: &[ResultRow]) -> Option<String> {
    let base = rows.iter().find(|r| r.method == "ols")?;
    let mut s = String::from("label,baseline,difference,lower,upper,significant\n");
    for r in rows.iter().filter(|r| r.run_id != base.run_id) {
        if let Ok(c) = compare_rows(r, base) {
            writeln!(s, "{},{},{},{},{},{}", r.label, base.label, c.difference, num(c.lower), num(c.upper), c.significant).unwrap();
        }
    }
    Some(s)
}

pub fn cmd_report(out: &Path) -> Result<ReportSummary, CliError> {
    let rows = latest_per_run(read_rows(out)?);
    if rows.is_empty() {
        return Err(CliError::Data(format!("no completed runs under {}", out.display())));
    }
    let mut files = Vec::new();
    let mut put = |name: &str, body: String| -> Result<(), CliError> {
        let p = out.join(name);
        std::fs::write(&p, body).map_err(|e| CliError::io(&p, e))?;
        files.push(p);
        Ok(())
    };
    put("results_table.txt", results_text(&rows))?;
    put("results_table.csv", results_csv(&rows))?;
    put("pca_curve.csv", pca_curve_csv(&rows))?;
    put("time_vs_error.csv", time_vs_error_csv(&rows))?;
    if let Some(c) = comparisons_csv(&rows) {
        put("comparisons.csv", c)?;
    }
    Ok(ReportSummary { rows, files })
}
