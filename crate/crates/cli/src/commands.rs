use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use nalm_core::evaluation::Precision;
use nalm_core::experiment::{
    aggregate, read_results_file, run_sweep_with, small_value_thresholds, write_summary_csv, write_threshold_csv,
    SweepSpec, RESULTS_FILE,
};
use nalm_core::gradcheck::check_gradients;
use nalm_core::landscape::{rmse_surface, write_surface_csv, SurfaceSpec};
use nalm_core::nalm::ModuleKind;
use nalm_core::training::{train_run, write_trace_csv, TrainConfig};

use crate::table::{print_summary, print_thresholds};
use crate::{LandscapeArgs, ReportArgs, SweepArgs, ThresholdArgs, TrainArgs, TrainOverrides, VerifyGradArgs};

/// Largest accepted relative error of the gradient check.
const GRAD_TOLERANCE: f64 = 1e-4;
const CLOSED_FORM_TOLERANCE: f64 = 1e-9;

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    create_parent(path)?;
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

impl TrainOverrides {
    fn apply(&self, c: &mut TrainConfig) {
        if let Some(v) = self.iterations {
            c.iterations = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.eval_every {
            c.eval_every = v;
        }
        if let Some(v) = self.val_samples {
            c.val_samples = v;
        }
        if let Some(v) = self.test_samples {
            c.test_samples = v;
        }
        if let Some(v) = self.loss {
            c.loss = v.into();
        }
    }
}

fn train_config(args: &TrainArgs) -> Result<(TrainConfig, String)> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let c = TrainConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
        let name = c.kind.to_string();
        return Ok((c, name));
    }
    let mut spec = SweepSpec::new(args.preset, "");
    spec.variants = vec![args.variant];
    spec.ranges = vec![args.range.clone()];
    spec.seeds = Some(vec![args.seed.unwrap_or(0)]);
    let job = spec.jobs()?.into_iter().next().context("preset produced no run")?;
    Ok((job.config, args.variant.to_string()))
}

pub fn train(args: TrainArgs) -> Result<ExitCode> {
    let (mut config, name) = train_config(&args)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    args.overrides.apply(&mut config);
    config.validate()?;

    let record = train_run(&config)?;
    let stem = format!("train-{name}-seed{}", config.seed);
    let trace_path = args
        .trace
        .clone()
        .unwrap_or_else(|| args.out_dir.join(format!("{stem}-trace.csv")));
    let record_path = args
        .record
        .clone()
        .unwrap_or_else(|| trace_path.with_file_name(format!("{stem}-record.json")));
    write_trace_csv(create_file(&trace_path)?, &record.trace)?;
    serde_json::to_writer_pretty(create_file(&record_path)?, &record)?;

    println!("module            {} ({name})", config.kind);
    println!(
        "task              {} -> {}",
        config.task.range_label(),
        config.task.extrapolation_label()
    );
    println!("status            {}", record.status.label());
    if let nalm_core::training::RunStatus::Failed(reason) = &record.status {
        println!("failure           {reason}");
    }
    println!("success           {}", record.success);
    println!("threshold         {:e}", record.threshold);
    println!("best iteration    {}", record.best_iteration);
    println!("best val mse      {:e}", record.best_val_loss);
    println!("extrap mse        {:e}", record.extrapolation_mse_at_best);
    match record.solved_at_iter {
        Some(i) => println!("solved at         {i}"),
        None => println!("solved at         -"),
    }
    println!("sparsity error    {:.6}", record.sparsity_error);
    println!("weights           {:?}", record.best_params.weights.as_slice());
    if let Some(g) = &record.best_params.gate {
        println!("gate              {g:?}");
    }
    println!("wall time         {:.2}s", record.wall_secs);
    println!("trace             {}", trace_path.display());
    println!("record            {}", record_path.display());
    Ok(ExitCode::SUCCESS)
}

fn sweep_spec(args: &SweepArgs) -> Result<SweepSpec> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SweepSpec::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let preset = args.preset.context("either --config or --preset is required")?;
            SweepSpec::new(preset, "")
        }
    };
    if let Some(p) = args.preset {
        spec.preset = p;
    }
    if !args.kinds.is_empty() {
        spec.variants = args.kinds.clone();
    }
    if !args.ranges.is_empty() {
        spec.ranges = args.ranges.clone();
    }
    if let Some(n) = args.seeds {
        spec.seeds = Some((0..n).collect());
    }
    if args.workers.is_some() {
        spec.workers = args.workers;
    }
    if let Some(out) = &args.out {
        spec.output_dir = out.clone();
    }
    if spec.output_dir.as_os_str().is_empty() {
        spec.output_dir = PathBuf::from("nalm-out").join(spec.preset.name());
    }
    let o = &args.overrides;
    let so = &mut spec.overrides;
    so.iterations = o.iterations.or(so.iterations);
    so.learning_rate = o.learning_rate.or(so.learning_rate);
    so.batch_size = o.batch_size.or(so.batch_size);
    so.eval_every = o.eval_every.or(so.eval_every);
    so.val_samples = o.val_samples.or(so.val_samples);
    so.test_samples = o.test_samples.or(so.test_samples);
    so.loss = o.loss.map(Into::into).or(so.loss);
    Ok(spec)
}

pub fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let spec = sweep_spec(&args)?;
    let outcome = run_sweep_with(&spec, |row| {
        eprintln!(
            "{} {} seed {}: {} ({})",
            row.kind,
            row.range_label,
            row.seed,
            if row.success { "solved" } else { "unsolved" },
            row.status
        );
    })?;
    println!(
        "{} runs executed, {} already present; results in {}",
        outcome.executed,
        outcome.skipped,
        outcome.results_path.display()
    );
    print_summary(&outcome.summary);
    Ok(ExitCode::SUCCESS)
}

pub fn landscape(args: LandscapeArgs) -> Result<ExitCode> {
    let kind: ModuleKind = args.kind.parse()?;
    let mut spec = SurfaceSpec::for_kind(kind)?;
    spec.resolution = args.res;
    if let Some(eps) = args.eps {
        spec.eps = eps;
    }
    let points = rmse_surface(&spec)?;
    let path = args
        .out
        .unwrap_or_else(|| args.out_dir.join(format!("landscape-{kind}.csv")));
    write_surface_csv(create_file(&path)?, &points)?;
    let finite: Vec<f64> = points.iter().map(|p| p.rmse).filter(|v| v.is_finite()).collect();
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "{} grid points ({}x{}) written to {}",
        points.len(),
        spec.resolution,
        spec.resolution,
        path.display()
    );
    println!(
        "largest finite rmse {max:e}; {} non-finite cells",
        points.len() - finite.len()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn verify_grad(args: VerifyGradArgs) -> Result<ExitCode> {
    let kinds = match args.kind {
        Some(k) => vec![k],
        None => ModuleKind::ALL.to_vec(),
    };
    let mut ok = true;
    for kind in kinds {
        let r = check_gradients(kind, args.trials, args.seed)?;
        let pass =
            r.max_rel_err < GRAD_TOLERANCE && r.closed_form_max_rel_err.is_none_or(|e| e < CLOSED_FORM_TOLERANCE);
        ok &= pass;
        print!(
            "{:<14} trials {:>5}  max rel err {:.3e}",
            kind.to_string(),
            r.trials,
            r.max_rel_err
        );
        if let Some(e) = r.closed_form_max_rel_err {
            print!("  closed form {e:.3e}");
        }
        println!("  {}", if pass { "ok" } else { "FAIL" });
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn thresholds(args: ThresholdArgs) -> Result<ExitCode> {
    if args.samples == 0 {
        bail!("--samples must be positive");
    }
    let precision: Precision = args.precision.into();
    let rows = small_value_thresholds(&args.kinds, args.samples, args.seed, args.eps, precision)?;
    print_thresholds(&rows, &args.kinds);
    if let Some(path) = &args.out {
        write_threshold_csv(create_file(path)?, &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn report(args: ReportArgs) -> Result<ExitCode> {
    let path = if args.results.is_dir() {
        args.results.join(RESULTS_FILE)
    } else {
        args.results.clone()
    };
    let rows = read_results_file(&path).with_context(|| format!("reading {}", path.display()))?;
    let summary = aggregate(&rows)?;
    print_summary(&summary);
    if let Some(out) = &args.csv {
        write_summary_csv(create_file(out)?, &summary)?;
    }
    Ok(ExitCode::SUCCESS)
}
