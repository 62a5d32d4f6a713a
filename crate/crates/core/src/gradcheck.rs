//! Finite-difference verification of the analytic module gradients.
//!
//! Each trial draws a random module and batch from a region where the
//! forward rule is smooth (no clamp boundaries, no `|x|` kinks, no rounding
//! steps), then compares [`backward`] against central differences of
//! `sum(c * forward(x))` for a random cotangent `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::nalm::{backward, forward, nru_weight_grad_closed_form, Mode, ModuleKind, ModuleParams, ModuleSettings};

pub const FD_STEP: f64 = 1e-5;
/// Floor on the denominator of the relative error.
pub const REL_ERR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub kind: ModuleKind,
    pub trials: usize,
    /// Largest relative error over every parameter and input entry.
    pub max_rel_err: f64,
    /// NRU only: largest relative error between the backward weight
    /// gradient and the closed-form expression.
    pub closed_form_max_rel_err: Option<f64>,
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERR_FLOOR)
}

/// Draws a value with magnitude in `[lo, hi]` and a random sign.
fn signed<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..=hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

fn random_weight<R: Rng>(kind: ModuleKind, rng: &mut R) -> f64 {
    match kind {
        ModuleKind::Nau | ModuleKind::RealNpu | ModuleKind::Npu => rng.random_range(-1.0..=1.0),
        ModuleKind::Nmu | ModuleKind::Nmru => rng.random_range(0.0..=1.0),
        ModuleKind::Nru => signed(rng, 0.05, 1.0),
        // Keep clear of the rounding step at |w| = 0.5.
        ModuleKind::NruSeparateSign => {
            if rng.random_bool(0.5) {
                signed(rng, 0.05, 0.45)
            } else {
                signed(rng, 0.55, 1.0)
            }
        }
    }
}

/// One random module in the kind's smooth region.
pub fn random_case<R: Rng>(kind: ModuleKind, rng: &mut R) -> (ModuleParams, ModuleSettings, Matrix, Mode) {
    let in_size = rng.random_range(1..=5);
    let out_size = rng.random_range(1..=3);
    let batch = rng.random_range(1..=4);
    let rows = kind.weight_rows(in_size);
    let w: Vec<f64> = (0..rows * out_size).map(|_| random_weight(kind, rng)).collect();
    let weights = Matrix::from_vec(rows, out_size, w).expect("sizes agree");
    let imag = (kind == ModuleKind::Npu)
        .then(|| {
            Matrix::from_vec(
                rows,
                out_size,
                (0..rows * out_size).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            )
        })
        .transpose()
        .expect("sizes agree");
    let gated = kind.has_gate() || (kind == ModuleKind::Nmru && rng.random_bool(0.5));
    let gate = gated.then(|| (0..rows).map(|_| rng.random_range(0.1..=0.9)).collect());
    let params = ModuleParams::new(kind, weights, imag, gate).expect("valid shapes");
    let settings = ModuleSettings {
        sign_retrieval: rng.random_bool(0.5),
        ..ModuleSettings::default()
    };
    let x = Matrix::from_vec(
        batch,
        in_size,
        (0..batch * in_size).map(|_| signed(rng, 0.3, 5.0)).collect(),
    )
    .expect("sizes agree");
    let mode = if rng.random_bool(0.5) {
        Mode::Training
    } else {
        Mode::Eval
    };
    (params, settings, x, mode)
}

fn weighted_output(
    params: &ModuleParams,
    settings: &ModuleSettings,
    x: &Matrix,
    mode: Mode,
    c: &Matrix,
) -> Result<f64> {
    let (y, _) = forward(params, settings, x, mode)?;
    Ok(y.as_slice().iter().zip(c.as_slice()).map(|(a, b)| a * b).sum())
}

/// Largest relative error between analytic and central-difference gradients
/// for every parameter and input entry of one case.
pub fn check_case(params: &ModuleParams, settings: &ModuleSettings, x: &Matrix, mode: Mode, c: &Matrix) -> Result<f64> {
    let (_, cache) = forward(params, settings, x, mode)?;
    let grads = backward(params, settings, &cache, c)?;
    let mut worst: f64 = 0.0;

    let flat = params.to_flat();
    let analytic = grads.params.to_flat();
    for i in 0..flat.len() {
        let shifted = |d: f64| -> Result<f64> {
            let mut p = params.clone();
            let mut f = flat.clone();
            f[i] += d;
            p.set_flat(&f)?;
            weighted_output(&p, settings, x, mode, c)
        };
        let fd = (shifted(FD_STEP)? - shifted(-FD_STEP)?) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic[i], fd));
    }
    for i in 0..x.as_slice().len() {
        let shifted = |d: f64| -> Result<f64> {
            let mut xs = x.clone();
            xs.as_mut_slice()[i] += d;
            weighted_output(params, settings, &xs, mode, c)
        };
        let fd = (shifted(FD_STEP)? - shifted(-FD_STEP)?) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(grads.input.as_slice()[i], fd));
    }
    Ok(worst)
}

/// Compares the NRU training-mode weight gradient of a single-row, single-output
/// module with the closed form.
pub fn check_nru_closed_form(weights: &[f64], x: &[f64], settings: &ModuleSettings) -> Result<f64> {
    let params = ModuleParams::new(ModuleKind::Nru, Matrix::column(weights), None, None)?;
    let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
    let (_, cache) = forward(&params, settings, &xm, Mode::Training)?;
    let grads = backward(&params, settings, &cache, &Matrix::filled(1, 1, 1.0))?;
    let factor = |w: f64, xi: f64| {
        let a = (settings.tanh_scale * w).tanh().powi(2);
        let sign = if xi >= 0.0 { 1.0 } else { -1.0 };
        sign * xi.abs().powf(w) * a + (1.0 - a)
    };
    let mut worst: f64 = 0.0;
    for i in 0..weights.len() {
        let rest: f64 = (0..weights.len())
            .filter(|&j| j != i)
            .map(|j| factor(weights[j], x[j]))
            .product();
        let expected = nru_weight_grad_closed_form(weights[i], x[i], rest);
        worst = worst.max(rel_err(grads.params.weights.get(i, 0), expected));
    }
    Ok(worst)
}

/// Runs `trials` random cases for `kind`.
pub fn check_gradients(kind: ModuleKind, trials: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_err: f64 = 0.0;
    let mut closed: Option<f64> = None;
    for _ in 0..trials {
        let (params, settings, x, mode) = random_case(kind, &mut rng);
        let (b, o) = (x.rows(), params.out_size());
        let c = Matrix::from_vec(b, o, (0..b * o).map(|_| rng.random_range(-1.0..=1.0)).collect())?;
        max_rel_err = max_rel_err.max(check_case(&params, &settings, &x, mode, &c)?);
        if kind == ModuleKind::Nru {
            let col: Vec<f64> = (0..params.in_size()).map(|i| params.weights.get(i, 0)).collect();
            let err = check_nru_closed_form(&col, x.row(0), &settings)?;
            closed = Some(closed.unwrap_or(0.0).max(err));
        }
    }
    Ok(GradCheckReport {
        kind,
        trials,
        max_rel_err,
        closed_form_max_rel_err: closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_passes_a_few_trials() {
        for kind in ModuleKind::ALL {
            let r = check_gradients(kind, 10, 7).unwrap();
            assert!(r.max_rel_err < 1e-4, "{kind}: {}", r.max_rel_err);
        }
    }

    #[test]
    fn nau_case_is_exact() {
        let p = ModuleParams::with_weights(ModuleKind::Nau, Matrix::column(&[0.5, 0.5])).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]);
        let c = Matrix::filled(1, 1, 1.0);
        let s = ModuleSettings::default();
        assert!(check_case(&p, &s, &x, Mode::Eval, &c).unwrap() < 1e-8);
    }

    #[test]
    fn closed_form_agrees() {
        let s = ModuleSettings::default();
        let err = check_nru_closed_form(&[0.7, -0.9, 0.2], &[1.5, -0.4, 3.0], &s).unwrap();
        assert!(err < 1e-9, "{err}");
    }
}
