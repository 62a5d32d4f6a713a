//! Metrics, success thresholds, confidence intervals and the sign oracle.

pub mod ci;
pub mod metrics;
pub mod sign_oracle;
pub mod threshold;

pub use ci::{confidence_interval, median, wilson_interval, MetricKind};
pub use metrics::{discretization_distance, mse, sparsity_error, sparsity_error_of};
pub use sign_oracle::sign_oracle;
pub use threshold::{compute_threshold, Precision, Threshold, ThresholdMode, FIXED_THRESHOLD, GOLDEN_MARGIN};
