//! Parallel, resumable execution of a sweep.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::presets::{Preset, PresetTask};
use super::results::{aggregate, read_results_file, write_summary_csv, ResultRow, SweepSummary};
use super::variant::Variant;
use crate::error::{Error, Result};
use crate::training::{train_run, LossKind, RunStatus, TrainConfig};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Values that replace the preset's hyperparameters for every run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub iterations: Option<u64>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub eval_every: Option<u64>,
    pub val_samples: Option<usize>,
    pub test_samples: Option<usize>,
    pub loss: Option<LossKind>,
}

/// A sweep: every selected variant on every selected preset task, once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub preset: Preset,
    /// Empty means the preset's defaults.
    #[serde(default)]
    pub variants: Vec<Variant>,
    /// Range labels to keep; empty keeps every task.
    #[serde(default)]
    pub ranges: Vec<String>,
    /// Explicit seeds; absent means `0..25`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    /// Worker threads; absent means one per core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Where `results.csv` and `summary.csv` go.
    #[serde(default)]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub overrides: Overrides,
}

impl SweepSpec {
    pub fn new(preset: Preset, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            preset,
            variants: Vec::new(),
            ranges: Vec::new(),
            seeds: None,
            workers: None,
            output_dir: output_dir.into(),
            overrides: Overrides::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        self.seeds
            .clone()
            .unwrap_or_else(|| (0..self.preset.default_seed_count() as u64).collect())
    }

    /// Every run of the sweep, in a fixed order.
    pub fn jobs(&self) -> Result<Vec<Job>> {
        let variants = if self.variants.is_empty() {
            self.preset.default_variants()
        } else {
            self.variants.clone()
        };
        let tasks: Vec<PresetTask> = self
            .preset
            .tasks()
            .into_iter()
            .filter(|t| self.ranges.is_empty() || self.ranges.iter().any(|f| t.matches(f)))
            .collect();
        for f in &self.ranges {
            if !self.preset.tasks().iter().any(|t| t.matches(f)) {
                return Err(Error::Config(format!(
                    "range {f:?} is not part of preset {}",
                    self.preset
                )));
            }
        }
        let seeds = self.seed_list();
        let mut jobs = Vec::new();
        for t in &tasks {
            for &v in &variants {
                for &seed in &seeds {
                    let config = self.configure(v, t, seed);
                    config.validate()?;
                    jobs.push(Job {
                        key: run_key(v, &t.task, seed),
                        variant: v,
                        label: t.label.clone(),
                        seed,
                        config,
                    });
                }
            }
        }
        Ok(jobs)
    }

    fn configure(&self, variant: Variant, t: &PresetTask, seed: u64) -> TrainConfig {
        let mut c = variant.config(t.task.clone(), &t.hyper, seed);
        c.threshold = t.threshold;
        c.threshold_precision = t.precision;
        if t.no_reg {
            c.regularizers.clear();
        }
        let o = &self.overrides;
        if let Some(v) = o.iterations {
            c.iterations = v;
        }
        if let Some(v) = o.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = o.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = o.eval_every {
            c.eval_every = v;
        }
        if let Some(v) = o.val_samples {
            c.val_samples = v;
        }
        if let Some(v) = o.test_samples {
            c.test_samples = v;
        }
        if let Some(v) = o.loss {
            c.loss = v;
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub key: String,
    pub variant: Variant,
    pub label: String,
    pub seed: u64,
    pub config: TrainConfig,
}

/// Stable identifier of a run: hash of the variant, the task and the seed.
pub fn run_key(variant: Variant, task: &crate::datagen::TaskSpec, seed: u64) -> String {
    let task_text = toml::to_string(task).expect("task specs serialise");
    let digest = Sha256::digest(format!("{variant}\n{task_text}\n{seed}").as_bytes());
    hex::encode(&digest[..8])
}

pub fn run_job(job: &Job) -> ResultRow {
    match train_run(&job.config) {
        Ok(r) => ResultRow {
            run_key: job.key.clone(),
            kind: job.variant.name().to_string(),
            range_label: job.label.clone(),
            seed: job.seed,
            success: r.success,
            solved_at_iter: r.solved_at_iter,
            sparsity_error: r.sparsity_error,
            best_val_loss: r.best_val_loss,
            extrap_mse: r.extrapolation_mse_at_best,
            wall_secs: r.wall_secs,
            status: match r.status {
                RunStatus::Completed => "completed".to_string(),
                RunStatus::Failed(reason) => format!("failed: {reason}"),
            },
        },
        Err(e) => ResultRow {
            run_key: job.key.clone(),
            kind: job.variant.name().to_string(),
            range_label: job.label.clone(),
            seed: job.seed,
            success: false,
            solved_at_iter: None,
            sparsity_error: f64::NAN,
            best_val_loss: f64::NAN,
            extrap_mse: f64::NAN,
            wall_secs: 0.0,
            status: format!("failed: {e}"),
        },
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub executed: usize,
    pub skipped: usize,
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Runs every job not already present in `output_dir/results.csv`, appending
/// rows as runs finish, then rewrites `summary.csv` from the full results.
/// Run failures are recorded as rows; only I/O and configuration problems
/// are errors.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    run_sweep_with(spec, |_| {})
}

/// [`run_sweep`] with a callback invoked for each completed row.
pub fn run_sweep_with(spec: &SweepSpec, on_row: impl FnMut(&ResultRow)) -> Result<SweepOutcome> {
    let jobs = spec.jobs()?;
    fs::create_dir_all(&spec.output_dir)?;
    let results_path = spec.output_dir.join(RESULTS_FILE);
    let summary_path = spec.output_dir.join(SUMMARY_FILE);
    let done: HashSet<String> = if results_path.exists() {
        read_results_file(&results_path)?
            .into_iter()
            .map(|r| r.run_key)
            .collect()
    } else {
        HashSet::new()
    };
    let pending: Vec<&Job> = jobs.iter().filter(|j| !done.contains(&j.key)).collect();
    let skipped = jobs.len() - pending.len();
    let executed = pending.len();

    append_rows(&results_path, &pending, spec.workers, on_row)?;

    let rows = read_results_file(&results_path)?;
    let summary = aggregate(&rows)?;
    write_summary_csv(fs::File::create(&summary_path)?, &summary)?;
    Ok(SweepOutcome {
        summary,
        executed,
        skipped,
        results_path,
        summary_path,
    })
}

/// Trains `jobs` on a worker pool; a single writer appends each finished row.
fn append_rows(path: &Path, jobs: &[&Job], workers: Option<usize>, mut on_row: impl FnMut(&ResultRow)) -> Result<()> {
    let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    if fresh && jobs.is_empty() {
        writer.write_record(super::results::RESULT_COLUMNS)?;
        writer.flush()?;
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<ResultRow>();
    std::thread::scope(|scope| -> Result<()> {
        scope.spawn(move || {
            pool.install(|| {
                jobs.par_iter().for_each_with(tx, |tx, job| {
                    // The receiver only disappears if writing failed.
                    let _ = tx.send(run_job(job));
                })
            })
        });
        for row in rx {
            writer.serialize(&row)?;
            writer.flush()?;
            on_row(&row);
        }
        Ok(())
    })
}
