use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::loss::compute_loss;
use super::optim::{clip_grad_norm, Optimizer};
use crate::datagen::{build_batch, Split};
use crate::error::{Error, Result};
use crate::evaluation::{compute_threshold, mse, sparsity_error};
use crate::matrix::Matrix;
use crate::nalm::{backward, forward, init_params_with, predict, Mode, ModuleParams};

const TRAIN_STREAM: u64 = 1;
const VAL_STREAM: u64 = 2;
const TEST_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    /// Stopped early on a non-finite loss, gradient or prediction.
    Failed(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Failed(_) => "failed",
        }
    }
}

/// One evaluation step. `train_loss` is the loss of the batch that produced
/// the evaluated parameters (NaN at iteration 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub train_loss: f64,
    pub val_mse: f64,
    pub extrap_mse: f64,
    pub sparsity_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub status: RunStatus,
    pub best_iteration: u64,
    pub best_val_loss: f64,
    pub extrapolation_mse_at_best: f64,
    /// First evaluation step whose extrapolation MSE is below the threshold.
    pub solved_at_iter: Option<u64>,
    /// Sparsity error of the best checkpoint.
    pub sparsity_error: f64,
    pub success: bool,
    pub threshold: f64,
    pub best_params: ModuleParams,
    pub final_params: ModuleParams,
    pub trace: Vec<TraceRow>,
    /// Training steps where the correlation loss hit its clamp floor.
    pub degenerate_steps: u64,
    pub wall_secs: f64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Training objective on one batch: loss plus every scheduled penalty.
/// Returns `(data loss, total objective, gradient, degenerate)`.
pub fn objective(
    config: &TrainConfig,
    params: &ModuleParams,
    x: &Matrix,
    y: &[f64],
    iteration: u64,
) -> Result<(f64, f64, ModuleParams, bool)> {
    let (out, cache) = forward(params, &config.settings, x, Mode::Training)?;
    let loss = compute_loss(config.loss, out.as_slice(), y)?;
    if !loss.loss.is_finite() {
        return Err(Error::NonFinite(format!("training loss at iteration {iteration}")));
    }
    let grad_y = Matrix::from_vec(out.rows(), 1, loss.grad)?;
    let mut grad = backward(params, &config.settings, &cache, &grad_y)?.params;
    let mut total = loss.loss;
    for reg in &config.regularizers {
        let (p, g) = reg.penalty(params, iteration);
        total += p;
        for (dst, src) in grad.tensors_mut().into_iter().zip(g.tensors()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
    }
    Ok((loss.loss, total, grad, loss.degenerate))
}

struct Evaluator {
    val_x: Matrix,
    val_y: Vec<f64>,
    test_x: Matrix,
    test_y: Vec<f64>,
}

impl Evaluator {
    fn row(&self, config: &TrainConfig, params: &ModuleParams, iteration: u64, train_loss: f64) -> TraceRow {
        let val = predict(params, &config.settings, &self.val_x, Mode::Eval);
        let test = predict(params, &config.settings, &self.test_x, Mode::Eval);
        TraceRow {
            iteration,
            train_loss,
            val_mse: mse(val.as_slice(), &self.val_y),
            extrap_mse: mse(test.as_slice(), &self.test_y),
            sparsity_error: sparsity_error(params),
        }
    }
}

/// Trains one module from scratch.
///
/// Validation (interpolation) and test (extrapolation) sets are drawn once;
/// a fresh training batch is drawn every iteration. Both are always scored
/// with MSE in evaluation mode. The reported metrics come from the checkpoint
/// with the lowest validation MSE (earliest on ties), not the last iterate.
/// A non-finite loss or gradient stops the run with [`RunStatus::Failed`].
///
/// Errors are reserved for invalid configurations.
pub fn train_run(config: &TrainConfig) -> Result<RunRecord> {
    config.validate()?;
    let start = Instant::now();
    let task = &config.task;
    let mut params = init_params_with(
        config.kind,
        task.input_size,
        1,
        config.init,
        config.nmru_gate,
        config.seed,
    )?;
    params.clip_with(config.clip);

    let (val_x, val_y) = build_batch(
        task,
        Split::Val,
        config.val_samples,
        &mut stream_rng(config.seed, VAL_STREAM),
    )?;
    let (test_x, test_y) = build_batch(
        task,
        Split::Test,
        config.test_samples,
        &mut stream_rng(config.seed, TEST_STREAM),
    )?;
    let threshold = compute_threshold(
        config.kind,
        task,
        config.threshold,
        &config.settings,
        &test_x,
        &test_y,
        config.threshold_precision,
    )?
    .value;
    let eval = Evaluator {
        val_x,
        val_y,
        test_x,
        test_y,
    };
    let mut train_rng = stream_rng(config.seed, TRAIN_STREAM);
    let mut optimizer = Optimizer::new(config.optimizer, &params);

    let mut trace = vec![eval.row(config, &params, 0, f64::NAN)];
    let mut best = (0usize, params.clone());
    let mut status = RunStatus::Completed;
    let mut degenerate_steps = 0;
    let mut last_loss;

    for iteration in 0..config.iterations {
        let (x, y) = build_batch(task, Split::Train, config.batch_size, &mut train_rng)?;
        let step = objective(config, &params, &x, &y, iteration).and_then(|(loss, _, mut grad, degenerate)| {
            if let Some(max_norm) = config.grad_norm_clip {
                clip_grad_norm(&mut grad, max_norm);
            }
            optimizer.step(&mut params, &grad, config.learning_rate)?;
            Ok((loss, degenerate))
        });
        match step {
            Ok((loss, degenerate)) => {
                last_loss = loss;
                degenerate_steps += u64::from(degenerate);
            }
            Err(Error::NonFinite(what)) => {
                status = RunStatus::Failed(format!("non-finite {what} at iteration {iteration}"));
                break;
            }
            Err(e) => {
                status = RunStatus::Failed(format!("{e} at iteration {iteration}"));
                break;
            }
        }
        params.clip_with(config.clip);
        let done = iteration + 1;
        if done % config.eval_every == 0 {
            let row = eval.row(config, &params, done, last_loss);
            if rank(row.val_mse) < rank(trace[best.0].val_mse) {
                best = (trace.len(), params.clone());
            }
            trace.push(row);
        }
    }

    let best_row = trace[best.0];
    let solved_at_iter = trace.iter().find(|r| r.extrap_mse < threshold).map(|r| r.iteration);
    let success = status == RunStatus::Completed && best_row.extrap_mse < threshold;
    Ok(RunRecord {
        status,
        best_iteration: best_row.iteration,
        best_val_loss: best_row.val_mse,
        extrapolation_mse_at_best: best_row.extrap_mse,
        solved_at_iter,
        sparsity_error: best_row.sparsity_error,
        success,
        threshold,
        best_params: best.1,
        final_params: params,
        trace,
        degenerate_steps,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// NaN sorts after every number so it never wins early stopping.
fn rank(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Writes the trace as CSV: `iteration,train_loss,val_mse,extrap_mse,sparsity_error`.
pub fn write_trace_csv<W: Write>(writer: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
