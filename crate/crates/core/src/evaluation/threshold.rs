//! Success thresholds on the extrapolation MSE.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::mse;
use crate::datagen::TaskSpec;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nalm::{golden_params, predict, predict_row, Mode, ModuleKind, ModuleSettings};

pub const FIXED_THRESHOLD: f64 = 1e-5;
/// Machine epsilon of 32-bit floats, added to golden test errors.
pub const GOLDEN_MARGIN: f64 = f32::EPSILON as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    #[default]
    Fixed,
    GoldenPlusEps,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::Fixed => "fixed",
            ThresholdMode::GoldenPlusEps => "golden",
        })
    }
}

/// Arithmetic used when evaluating the golden solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    F64,
    /// Inputs are rounded to `f32` and the module is evaluated in `f32`;
    /// targets stay exact.
    F32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub mode: ThresholdMode,
}

/// Threshold for `kind` on `task`. In golden mode this is the MSE of the
/// golden parameters on the given test set plus [`GOLDEN_MARGIN`].
pub fn compute_threshold(
    kind: ModuleKind,
    task: &TaskSpec,
    mode: ThresholdMode,
    settings: &ModuleSettings,
    test_x: &Matrix,
    test_y: &[f64],
    precision: Precision,
) -> Result<Threshold> {
    if mode == ThresholdMode::Fixed {
        return Ok(Threshold {
            value: FIXED_THRESHOLD,
            mode,
        });
    }
    let golden = golden_params(kind, task)?;
    if test_x.rows() != test_y.len() || test_x.cols() != golden.in_size() {
        return Err(Error::Dimension(format!(
            "test set is {}x{} with {} targets, module expects {} inputs",
            test_x.rows(),
            test_x.cols(),
            test_y.len(),
            golden.in_size()
        )));
    }
    let pred: Vec<f64> = match precision {
        Precision::F64 => predict(&golden, settings, test_x, Mode::Eval).into_vec(),
        Precision::F32 => (0..test_x.rows())
            .map(|r| {
                let row: Vec<f32> = test_x.row(r).iter().map(|&v| v as f32).collect();
                predict_row::<f32>(&golden, settings, &row, Mode::Eval)[0] as f64
            })
            .collect(),
    };
    let err = mse(&pred, test_y);
    if !err.is_finite() {
        return Err(Error::NonFinite(format!("golden {kind} test error")));
    }
    Ok(Threshold {
        value: err + GOLDEN_MARGIN,
        mode,
    })
}
