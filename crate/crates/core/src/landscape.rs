//! RMSE surfaces of a two-layer NAU → product-module network on one probe.
//!
//! The first layer is a NAU with `W1 = [[w1, w1, 0, 0], [w1, w1, w1, w1]]`,
//! so the probe `x = (1, 1.2, 1.8, 2)` maps to hidden `(2.2 w1, 6 w1)`. The
//! second layer multiplies the two hidden values with weight `w2` on each
//! (the NMRU additionally receives the reciprocals, weighted 0). The target
//! `(x1 + x2)(x1 + x2 + x3 + x4) = 13.2` is reached at `w1 = w2 = 1`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nalm::{predict_row, Mode, ModuleKind, ModuleParams, ModuleSettings, DEFAULT_EPS};

pub const PROBE: [f64; 4] = [1.0, 1.2, 1.8, 2.0];
pub const DEFAULT_RESOLUTION: usize = 401;
/// Stability term of the Real NPU surface.
pub const REAL_NPU_SURFACE_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub kind: ModuleKind,
    pub w1_range: (f64, f64),
    pub w2_range: (f64, f64),
    pub resolution: usize,
    pub eps: f64,
}

impl SurfaceSpec {
    /// `w1` over `[-1, 1]`; `w2` over the kind's weight range.
    pub fn for_kind(kind: ModuleKind) -> Result<Self> {
        let (w2_range, eps) = match kind {
            ModuleKind::RealNpu => ((-1.0, 1.0), REAL_NPU_SURFACE_EPS),
            ModuleKind::Nru => ((-1.0, 1.0), DEFAULT_EPS),
            ModuleKind::Nmru => ((0.0, 1.0), DEFAULT_EPS),
            other => return Err(Error::Unsupported(format!("no surface for {other}"))),
        };
        Ok(Self {
            kind,
            w1_range: (-1.0, 1.0),
            w2_range,
            resolution: DEFAULT_RESOLUTION,
            eps,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::for_kind(self.kind)?;
        if self.resolution < 2 {
            return Err(Error::Config(format!(
                "surface resolution {} is below 2",
                self.resolution
            )));
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(self.w1_range) || !ok(self.w2_range) {
            return Err(Error::Config("surface ranges must be finite with lo <= hi".into()));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps {} must be non-negative", self.eps)));
        }
        Ok(())
    }
}

/// Grid node `i` of `n` over `[lo, hi]`.
pub fn grid_node(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    lo + (hi - lo) * i as f64 / (n - 1) as f64
}

/// Hidden NAU outputs for the probe.
pub fn hidden(w1: f64) -> [f64; 2] {
    let w = Matrix::from_rows(&[vec![w1, w1], vec![w1, w1], vec![0.0, w1], vec![0.0, w1]]);
    let nau = ModuleParams::with_weights(ModuleKind::Nau, w).expect("4x2 weights");
    let h = predict_row(&nau, &ModuleSettings::default(), &PROBE, Mode::Eval);
    [h[0], h[1]]
}

/// Exact target for the probe, accumulated in the same order as the network.
pub fn target() -> f64 {
    let [a, b] = hidden(1.0);
    a * b
}

fn second_layer(kind: ModuleKind, w2: f64) -> Result<ModuleParams> {
    match kind {
        ModuleKind::RealNpu => ModuleParams::new(kind, Matrix::column(&[w2, w2]), None, Some(vec![1.0, 1.0])),
        ModuleKind::Nru => ModuleParams::with_weights(kind, Matrix::column(&[w2, w2])),
        ModuleKind::Nmru => ModuleParams::with_weights(kind, Matrix::column(&[w2, w2, 0.0, 0.0])),
        other => Err(Error::Unsupported(format!("no surface for {other}"))),
    }
}

/// Network output at `(w1, w2)`. Non-finite values are returned as is.
pub fn stacked_prediction(kind: ModuleKind, eps: f64, w1: f64, w2: f64) -> Result<f64> {
    let params = second_layer(kind, w2)?;
    let settings = ModuleSettings {
        eps,
        ..ModuleSettings::default()
    };
    Ok(predict_row(&params, &settings, &hidden(w1), Mode::Eval)[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub w1: f64,
    pub w2: f64,
    /// `|prediction - target|`; `inf` when the prediction is not finite.
    pub rmse: f64,
}

/// Dense grid, row-major with `w1` as the outer index.
pub fn rmse_surface(spec: &SurfaceSpec) -> Result<Vec<SurfacePoint>> {
    spec.validate()?;
    let n = spec.resolution;
    let t = target();
    let rows: Vec<Vec<SurfacePoint>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let w1 = grid_node(spec.w1_range.0, spec.w1_range.1, i, n);
            (0..n)
                .map(|j| {
                    let w2 = grid_node(spec.w2_range.0, spec.w2_range.1, j, n);
                    let p = stacked_prediction(spec.kind, spec.eps, w1, w2).expect("kind validated");
                    let rmse = (p - t).abs();
                    SurfacePoint {
                        w1,
                        w2,
                        rmse: if rmse.is_nan() { f64::INFINITY } else { rmse },
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Writes `w1,w2,rmse` rows; infinite losses are written as `inf`.
pub fn write_surface_csv<W: Write>(writer: W, points: &[SurfacePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if points.is_empty() {
        w.write_record(["w1", "w2", "rmse"])?;
    }
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_target() {
        assert!((target() - 13.2).abs() < 1e-12);
        let [a, b] = hidden(0.5);
        assert!((a - 1.1).abs() < 1e-12 && (b - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nru_predictions() {
        assert_eq!(
            stacked_prediction(ModuleKind::Nru, DEFAULT_EPS, 1.0, 1.0).unwrap(),
            target()
        );
        let p = stacked_prediction(ModuleKind::Nru, DEFAULT_EPS, -1.0, 1.0).unwrap();
        assert!((p - 13.2).abs() < 1e-12);
    }

    #[test]
    fn nmru_identity_at_zero_weight() {
        let p = stacked_prediction(ModuleKind::Nmru, DEFAULT_EPS, 0.3, 0.0).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(
            stacked_prediction(ModuleKind::Nmru, DEFAULT_EPS, 1.0, 1.0).unwrap(),
            target()
        );
    }

    #[test]
    fn real_npu_offset_comes_from_eps() {
        let [a, b] = hidden(1.0);
        let eps = REAL_NPU_SURFACE_EPS;
        let p = stacked_prediction(ModuleKind::RealNpu, eps, 1.0, 1.0).unwrap();
        assert!((p - (a + eps) * (b + eps)).abs() < 1e-12);
        let exact = stacked_prediction(ModuleKind::RealNpu, 0.0, 1.0, 1.0).unwrap();
        assert!((exact - target()).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_is_subset_of_fine_grid() {
        let mut spec = SurfaceSpec::for_kind(ModuleKind::Nru).unwrap();
        spec.resolution = 5;
        let coarse = rmse_surface(&spec).unwrap();
        spec.resolution = 9;
        let fine = rmse_surface(&spec).unwrap();
        for (k, p) in coarse.iter().enumerate() {
            let (i, j) = (k / 5, k % 5);
            let q = fine[(2 * i) * 9 + 2 * j];
            assert_eq!((p.w1, p.w2), (q.w1, q.w2));
            assert_eq!(p.rmse.to_bits(), q.rmse.to_bits());
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SurfaceSpec::for_kind(ModuleKind::Nau).is_err());
        let mut s = SurfaceSpec::for_kind(ModuleKind::Nmru).unwrap();
        s.resolution = 1;
        assert!(rmse_surface(&s).is_err());
    }

    #[test]
    fn csv_sentinel() {
        let pts = [SurfacePoint {
            w1: 0.0,
            w2: -1.0,
            rmse: f64::INFINITY,
        }];
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &pts).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "w1,w2,rmse\n0.0,-1.0,inf\n");
    }
}
