//! Losses, penalties, optimisers and the single-run training loop.

mod config;
pub mod loss;
pub mod optim;
pub mod regularizer;
mod run;

pub use config::{TrainConfig, DEFAULT_EVAL_EVERY, DEFAULT_EVAL_SAMPLES};
pub use loss::{compute_loss, LossKind, LossOutput, PCC_EPS};
pub use optim::{clip_grad_norm, Optimizer, OptimizerKind};
pub use regularizer::{discretization_penalty, l_penalty, BetaSchedule, LambdaSchedule, RegSchedule, RegTargets};
pub use run::{objective, train_run, write_trace_csv, RunRecord, RunStatus, TraceRow};

/// `sign(x)` with `sign(0) = 0`, the subgradient convention for `|x|`.
#[inline]
pub(crate) fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
