//! Plain-text tables for terminal output.

use nalm_core::experiment::{SweepSummary, ThresholdRow};
use nalm_core::nalm::ModuleKind;

fn interval(ci: Option<(f64, f64)>, precision: usize) -> String {
    match ci {
        Some((lo, hi)) => format!("[{lo:.precision$}, {hi:.precision$}]"),
        None => "-".to_string(),
    }
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.precision$}"))
}

/// One line per (kind, range): success rate, convergence and sparsity with CIs.
pub fn print_summary(summary: &SweepSummary) {
    if summary.groups.is_empty() {
        println!("no runs");
        return;
    }
    let kind_w = summary.groups.iter().map(|g| g.kind.len()).max().unwrap_or(4).max(4);
    let range_w = summary
        .groups
        .iter()
        .map(|g| g.range_label.len())
        .max()
        .unwrap_or(5)
        .max(5);
    println!(
        "{:<kind_w$}  {:<range_w$}  {:>7}  {:>16}  {:>9}  {:>20}  {:>9}  {:>16}  {:>6}",
        "kind",
        "range",
        "success",
        "success 95% CI",
        "solved at",
        "solved 95% CI",
        "sparsity",
        "sparsity 95% CI",
        "failed"
    );
    for g in &summary.groups {
        println!(
            "{:<kind_w$}  {:<range_w$}  {:>7}  {:>16}  {:>9}  {:>20}  {:>9}  {:>16}  {:>6}",
            g.kind,
            g.range_label,
            format!("{}/{}", g.successes, g.seeds),
            interval(Some(g.success_ci), 3),
            opt(g.solved_median, 0),
            interval(g.solved_ci, 0),
            opt(g.sparsity_median, 4),
            interval(g.sparsity_ci, 4),
            g.failed_runs,
        );
        for reason in &g.failure_reasons {
            println!("    failure: {reason}");
        }
    }
    if !summary.duplicate_keys.is_empty() {
        println!(
            "{} duplicate run keys; later rows were kept",
            summary.duplicate_keys.len()
        );
    }
}

/// Thresholds with one column per module kind.
pub fn print_thresholds(rows: &[ThresholdRow], kinds: &[ModuleKind]) {
    let task_w = rows.iter().map(|r| r.task.len()).max().unwrap_or(4).max(4);
    print!("{:<task_w$}", "task");
    for k in kinds {
        print!("  {:>12}", k.to_string());
    }
    println!();
    let mut tasks: Vec<&str> = rows.iter().map(|r| r.task.as_str()).collect();
    tasks.dedup();
    for task in tasks {
        print!("{task:<task_w$}");
        for k in kinds {
            let v = rows
                .iter()
                .find(|r| r.task == task && r.kind == *k)
                .map(|r| r.threshold);
            match v {
                Some(v) => print!("  {v:>12.4e}"),
                None => print!("  {:>12}", "-"),
            }
        }
        println!();
    }
}
