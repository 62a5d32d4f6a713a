//! Results CSV rows and their aggregation into per-group summaries.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{confidence_interval, median, MetricKind};

/// One run in the results CSV. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_key: String,
    pub kind: String,
    pub range_label: String,
    pub seed: u64,
    pub success: bool,
    pub solved_at_iter: Option<u64>,
    pub sparsity_error: f64,
    pub best_val_loss: f64,
    pub extrap_mse: f64,
    pub wall_secs: f64,
    /// `completed`, or `failed: <reason>`.
    pub status: String,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.status != "completed"
    }
}

pub const RESULT_COLUMNS: [&str; 11] = [
    "run_key",
    "kind",
    "range_label",
    "seed",
    "success",
    "solved_at_iter",
    "sparsity_error",
    "best_val_loss",
    "extrap_mse",
    "wall_secs",
    "status",
];

/// Parses a results CSV. Malformed rows are reported with their 1-based line number.
pub fn read_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(RESULT_COLUMNS.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("unexpected header {:?}", headers),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::MalformedRow {
                line,
                reason: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: ResultRow = record.deserialize(Some(&headers)).map_err(|e| Error::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_results_file(path: &Path) -> Result<Vec<ResultRow>> {
    read_results(File::open(path)?)
}

/// Statistics for one (kind, range) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub kind: String,
    pub range_label: String,
    pub seeds: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub success_ci: (f64, f64),
    /// Over successful runs only.
    pub solved_median: Option<f64>,
    pub solved_ci: Option<(f64, f64)>,
    /// Over successful runs only.
    pub sparsity_median: Option<f64>,
    pub sparsity_ci: Option<(f64, f64)>,
    pub failed_runs: usize,
    pub failure_reasons: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub groups: Vec<GroupSummary>,
    /// Run keys seen more than once; the later row was kept.
    pub duplicate_keys: Vec<String>,
}

/// Groups rows by (kind, range label), sorted by kind then label.
/// Duplicate run keys keep the later row and emit a warning.
pub fn aggregate(rows: &[ResultRow]) -> Result<SweepSummary> {
    let mut latest: HashMap<&str, usize> = HashMap::new();
    let mut duplicate_keys = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if latest.insert(&row.run_key, i).is_some() {
            log::warn!("duplicate run key {}; keeping the later row", row.run_key);
            duplicate_keys.push(row.run_key.clone());
        }
    }
    let mut kept: Vec<usize> = latest.into_values().collect();
    kept.sort_unstable();

    let mut groups: HashMap<(&str, &str), Vec<&ResultRow>> = HashMap::new();
    for &i in &kept {
        let r = &rows[i];
        groups.entry((&r.kind, &r.range_label)).or_default().push(r);
    }
    for g in groups.values_mut() {
        g.sort_by(|a, b| (a.seed, &a.run_key).cmp(&(b.seed, &b.run_key)));
    }
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort_unstable();
    let mut out = Vec::with_capacity(keys.len());
    for key in keys {
        out.push(summarize(key.0, key.1, &groups[&key])?);
    }
    Ok(SweepSummary {
        groups: out,
        duplicate_keys,
    })
}

fn summarize(kind: &str, range_label: &str, rows: &[&ResultRow]) -> Result<GroupSummary> {
    let seeds = rows.len();
    let successes: Vec<&&ResultRow> = rows.iter().filter(|r| r.success).collect();
    let outcomes: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r.success))).collect();
    let solved: Vec<f64> = successes
        .iter()
        .filter_map(|r| r.solved_at_iter)
        .map(|v| v as f64)
        .collect();
    let sparsity: Vec<f64> = successes
        .iter()
        .map(|r| r.sparsity_error)
        .filter(|v| v.is_finite())
        .collect();
    let ci = |metric, samples: &[f64]| -> Result<Option<(f64, f64)>> {
        if samples.len() < 2 {
            return Ok(samples.first().map(|&v| (v, v)));
        }
        confidence_interval(metric, samples).map(Some)
    };
    let mut failure_reasons: Vec<String> = rows
        .iter()
        .filter(|r| r.failed())
        .map(|r| r.status.trim_start_matches("failed:").trim().to_string())
        .collect();
    failure_reasons.sort();
    failure_reasons.dedup();
    Ok(GroupSummary {
        kind: kind.to_string(),
        range_label: range_label.to_string(),
        seeds,
        successes: successes.len(),
        success_rate: successes.len() as f64 / seeds as f64,
        success_ci: confidence_interval(MetricKind::SuccessRate, &outcomes)?,
        solved_median: (!solved.is_empty()).then(|| median(&solved)),
        solved_ci: ci(MetricKind::Convergence, &solved)?,
        sparsity_median: (!sparsity.is_empty()).then(|| median(&sparsity)),
        sparsity_ci: ci(MetricKind::Sparsity, &sparsity)?,
        failed_runs: rows.iter().filter(|r| r.failed()).count(),
        failure_reasons,
    })
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    kind: &'a str,
    range_label: &'a str,
    seeds: usize,
    successes: usize,
    success_rate: f64,
    success_lo: f64,
    success_hi: f64,
    solved_median: Option<f64>,
    solved_lo: Option<f64>,
    solved_hi: Option<f64>,
    sparsity_median: Option<f64>,
    sparsity_lo: Option<f64>,
    sparsity_hi: Option<f64>,
    failed_runs: usize,
}

/// Writes one row per group; missing statistics are empty cells.
pub fn write_summary_csv<W: Write>(writer: W, summary: &SweepSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if summary.groups.is_empty() {
        w.write_record([
            "kind",
            "range_label",
            "seeds",
            "successes",
            "success_rate",
            "success_lo",
            "success_hi",
            "solved_median",
            "solved_lo",
            "solved_hi",
            "sparsity_median",
            "sparsity_lo",
            "sparsity_hi",
            "failed_runs",
        ])?;
    }
    for g in &summary.groups {
        w.serialize(SummaryRecord {
            kind: &g.kind,
            range_label: &g.range_label,
            seeds: g.seeds,
            successes: g.successes,
            success_rate: g.success_rate,
            success_lo: g.success_ci.0,
            success_hi: g.success_ci.1,
            solved_median: g.solved_median,
            solved_lo: g.solved_ci.map(|c| c.0),
            solved_hi: g.solved_ci.map(|c| c.1),
            sparsity_median: g.sparsity_median,
            sparsity_lo: g.sparsity_ci.map(|c| c.0),
            sparsity_hi: g.sparsity_ci.map(|c| c.1),
            failed_runs: g.failed_runs,
        })?;
    }
    w.flush()?;
    Ok(())
}
