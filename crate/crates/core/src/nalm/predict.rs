//! Cache-free evaluation generic over the float type.
//!
//! `predict_row::<f32>` emulates 32-bit arithmetic for threshold studies;
//! `predict_row::<f64>` follows the same operation order as [`super::forward`].
//! Unlike `forward`, nothing is validated: non-finite inputs and outputs pass
//! through, which the loss-landscape sweeps rely on.

use num_traits::{Float, FloatConst};

use super::{Mode, ModuleKind, ModuleParams, ModuleSettings};
use crate::matrix::Matrix;

#[inline]
fn c<F: Float>(v: f64) -> F {
    F::from(v).expect("f64 converts to any Float")
}

#[inline]
fn sign_nonneg<F: Float>(x: F) -> F {
    if x >= F::zero() {
        F::one()
    } else {
        -F::one()
    }
}

fn nru_abs<F: Float>(w: F, mode: Mode, scale: F) -> F {
    match mode {
        Mode::Training => {
            let t = (scale * w).tanh();
            t * t
        }
        Mode::Eval => w.abs(),
    }
}

/// Evaluates one input row, returning `O` outputs.
pub fn predict_row<F: Float + FloatConst>(
    params: &ModuleParams,
    settings: &ModuleSettings,
    x: &[F],
    mode: Mode,
) -> Vec<F> {
    let w = &params.weights;
    let (n_rows, n_out) = w.shape();
    let one = F::one();
    let eps: F = c(settings.eps);
    let mut out = Vec::with_capacity(n_out);
    match params.kind {
        ModuleKind::Nau => {
            for o in 0..n_out {
                let mut acc = F::zero();
                for (i, &xi) in x.iter().enumerate() {
                    acc = acc + c::<F>(w.get(i, o)) * xi;
                }
                out.push(acc);
            }
        }
        ModuleKind::Nmu | ModuleKind::Nru | ModuleKind::NruSeparateSign => {
            let scale: F = c(settings.tanh_scale);
            for o in 0..n_out {
                let mut prod = one;
                let mut sign = one;
                for (i, &xi) in x.iter().enumerate() {
                    let wi: F = c(w.get(i, o));
                    let f = match params.kind {
                        ModuleKind::Nmu => wi * xi + (one - wi),
                        ModuleKind::Nru => {
                            let a = nru_abs(wi, mode, scale);
                            sign_nonneg(xi) * xi.abs().powf(wi) * a + (one - a)
                        }
                        _ => {
                            let a = nru_abs(wi, mode, scale);
                            if super::product::separate_sign(xi.to_f64().unwrap_or(0.0), w.get(i, o)) < 0.0 {
                                sign = -sign;
                            }
                            xi.abs().powf(wi) * a + (one - a)
                        }
                    };
                    prod = prod * f;
                }
                if params.kind == ModuleKind::NruSeparateSign {
                    prod = prod * sign;
                }
                out.push(prod);
            }
        }
        ModuleKind::RealNpu | ModuleKind::Npu => {
            let gate = params.gate.as_deref().unwrap_or(&[]);
            let mut log_r = Vec::with_capacity(n_rows);
            let mut k = Vec::with_capacity(n_rows);
            for (i, &xi) in x.iter().enumerate() {
                let g: F = c(gate.get(i).copied().unwrap_or(1.0).clamp(0.0, 1.0));
                let r = g * (xi.abs() + eps) + (one - g);
                log_r.push(r.ln());
                k.push(if xi < F::zero() { F::PI() * g } else { F::zero() });
            }
            for o in 0..n_out {
                let mut z = F::zero();
                let mut ph = F::zero();
                for i in 0..n_rows {
                    let wi: F = c(w.get(i, o));
                    z = z + wi * log_r[i];
                    ph = ph + wi * k[i];
                }
                if let Some(im) = &params.imag {
                    for i in 0..n_rows {
                        let wi: F = c(im.get(i, o));
                        z = z - wi * k[i];
                        ph = ph + wi * log_r[i];
                    }
                }
                out.push(z.exp() * ph.cos());
            }
        }
        ModuleKind::Nmru => {
            let n_in = x.len();
            let mut u = Vec::with_capacity(2 * n_in);
            u.extend_from_slice(x);
            u.extend(x.iter().map(|&xi| one / (xi + eps)));
            let gate = params.gate.as_deref();
            for o in 0..n_out {
                let mut m = one;
                let mut th = F::zero();
                for (i, &ui) in u.iter().enumerate() {
                    let wi: F = c(w.get(i, o));
                    let g: F = c(gate.map_or(1.0, |g| g[i]));
                    m = m * (wi * (g * ui).abs() + (one - wi));
                    if ui < F::zero() {
                        th = th + wi * F::PI() * g;
                    }
                }
                out.push(if settings.sign_retrieval { m * th.cos() } else { m });
            }
        }
    }
    out
}

/// Batch evaluation in `f64` without a cache.
pub fn predict(params: &ModuleParams, settings: &ModuleSettings, x: &Matrix, mode: Mode) -> Matrix {
    let mut y = Matrix::zeros(x.rows(), params.out_size());
    for n in 0..x.rows() {
        let row = predict_row(params, settings, x.row(n), mode);
        y.row_mut(n).copy_from_slice(&row);
    }
    y
}
