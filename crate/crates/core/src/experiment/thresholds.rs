//! Golden-solution thresholds for the division-by-small-values tasks.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::presets::Preset;
use crate::datagen::{build_batch, Split};
use crate::error::Result;
use crate::evaluation::{compute_threshold, Precision, ThresholdMode};
use crate::nalm::{ModuleKind, ModuleSettings};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    /// Task label, e.g. `reciprocal-in1:U[0,0.1)`.
    pub task: String,
    pub upper_bound: f64,
    pub kind: ModuleKind,
    pub threshold: f64,
}

/// Golden thresholds for every small-value task and kind. Each task's test
/// set is drawn from `seed`, so every bound scales the same unit draws.
pub fn small_value_thresholds(
    kinds: &[ModuleKind],
    samples: usize,
    seed: u64,
    eps: f64,
    precision: Precision,
) -> Result<Vec<ThresholdRow>> {
    let settings = ModuleSettings {
        eps,
        ..ModuleSettings::default()
    };
    let mut rows = Vec::new();
    for t in Preset::DivBySmall.tasks() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = build_batch(&t.task, Split::Test, samples, &mut rng)?;
        let upper_bound = t.task.extrapolation[0].bounds().1;
        for &kind in kinds {
            let th = compute_threshold(
                kind,
                &t.task,
                ThresholdMode::GoldenPlusEps,
                &settings,
                &x,
                &y,
                precision,
            )?;
            rows.push(ThresholdRow {
                task: t.label.clone(),
                upper_bound,
                kind,
                threshold: th.value,
            });
        }
    }
    Ok(rows)
}

/// Writes `task,upper_bound,kind,threshold` rows.
pub fn write_threshold_csv<W: Write>(writer: W, rows: &[ThresholdRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_task_and_kind() {
        let rows = small_value_thresholds(&[ModuleKind::Nru, ModuleKind::Nmru], 100, 0, 1e-7, Precision::F32).unwrap();
        assert_eq!(rows.len(), 15 * 2);
        assert!(rows.iter().all(|r| r.threshold > 0.0 && r.threshold.is_finite()));
    }
}
