//! Deterministic sampling of training, validation and test data.

mod range;
mod task;

pub use range::{RangeSpec, MIN_TRUNC_NORMAL_ACCEPTANCE};
pub use task::{build_batch, write_dataset_csv, Operation, Split, TaskSpec};
