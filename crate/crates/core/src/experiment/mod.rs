//! Multi-seed sweeps over preset experiment settings, with resumable CSV results.

mod presets;
mod results;
mod sweep;
mod thresholds;
mod variant;

pub use presets::{Preset, PresetTask, DISTRIBUTION_RANGES, MIXED_SIGN_RANGES, SMALL_UPPER_BOUNDS, UNIFORM_RANGES};
pub use results::{
    aggregate, read_results, read_results_file, write_summary_csv, GroupSummary, ResultRow, SweepSummary,
    RESULT_COLUMNS,
};
pub use sweep::{
    run_job, run_key, run_sweep, run_sweep_with, Job, Overrides, SweepOutcome, SweepSpec, RESULTS_FILE, SUMMARY_FILE,
};
pub use thresholds::{small_value_thresholds, write_threshold_csv, ThresholdRow};
pub use variant::{Hyper, Variant};
