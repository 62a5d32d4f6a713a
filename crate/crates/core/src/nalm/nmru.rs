//! Neural Multiplicative Reciprocal Unit.
//!
//! The input is augmented with reciprocals, `u = [x, 1 / (x + eps)]`, then
//! `z_o = prod_i (W[i,o] |u_i| + 1 - W[i,o]) * cos(sum_i W[i,o] k_i)` with
//! `k_i = pi` for negative `u_i`. With the gate ablation, `u` is replaced by
//! `g * u` and `k_i` by `pi * g_i`.

use std::f64::consts::PI;

use super::{abs_grad, leave_one_out, ForwardCache, Gradients, ModuleParams, ModuleSettings};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub(crate) struct NmruCache {
    /// `N x 2I` augmented input before gating.
    augmented: Matrix,
    /// `[(n * O + o) * 2I + i]`
    factors: Vec<f64>,
    /// `N x O`
    magnitude: Matrix,
    theta: Matrix,
}

/// Writes `[x, 1/(x + eps)]` into `out`.
pub(crate) fn augment_row(x: &[f64], eps: f64, out: &mut [f64]) {
    let n = x.len();
    out[..n].copy_from_slice(x);
    for (dst, xi) in out[n..].iter_mut().zip(x) {
        *dst = 1.0 / (xi + eps);
    }
}

pub(super) fn forward(params: &ModuleParams, settings: &ModuleSettings, x: &Matrix) -> Result<(Matrix, NmruCache)> {
    let w = &params.weights;
    let gate = params.gate.as_deref();
    let (n_rows, n_aug, n_out) = (x.rows(), w.rows(), w.cols());
    let mut augmented = Matrix::zeros(n_rows, n_aug);
    for n in 0..n_rows {
        augment_row(x.row(n), settings.eps, augmented.row_mut(n));
    }
    if !augmented.all_finite() {
        return Err(Error::NonFinite("NMRU reciprocal of an input equal to -eps".into()));
    }
    let mut factors = vec![0.0; n_rows * n_out * n_aug];
    let mut magnitude = Matrix::zeros(n_rows, n_out);
    let mut theta = Matrix::zeros(n_rows, n_out);
    let mut y = Matrix::zeros(n_rows, n_out);
    for n in 0..n_rows {
        let u = augmented.row(n);
        for o in 0..n_out {
            let base = (n * n_out + o) * n_aug;
            let mut m = 1.0;
            let mut th = 0.0;
            for i in 0..n_aug {
                let wi = w.get(i, o);
                let g = gate.map_or(1.0, |g| g[i]);
                let f = wi * (g * u[i]).abs() + (1.0 - wi);
                factors[base + i] = f;
                m *= f;
                if u[i] < 0.0 {
                    th += wi * PI * g;
                }
            }
            magnitude.set(n, o, m);
            theta.set(n, o, th);
            y.set(n, o, if settings.sign_retrieval { m * th.cos() } else { m });
        }
    }
    Ok((
        y,
        NmruCache {
            augmented,
            factors,
            magnitude,
            theta,
        },
    ))
}

pub(super) fn backward(
    params: &ModuleParams,
    settings: &ModuleSettings,
    cache: &ForwardCache,
    c: &NmruCache,
    grad_y: &Matrix,
) -> Gradients {
    let w = &params.weights;
    let gate = params.gate.as_deref();
    let x = &cache.input;
    let (n_rows, n_in, n_aug, n_out) = (x.rows(), x.cols(), w.rows(), w.cols());
    let mut gp = params.zeros_like();
    let mut gx = Matrix::zeros(n_rows, n_in);
    let mut rest = vec![0.0; n_aug];
    let mut d_aug = vec![0.0; n_aug];
    for n in 0..n_rows {
        let u = c.augmented.row(n);
        d_aug.iter_mut().for_each(|v| *v = 0.0);
        for o in 0..n_out {
            let g = grad_y.get(n, o);
            if g == 0.0 {
                continue;
            }
            let base = (n * n_out + o) * n_aug;
            leave_one_out(&c.factors[base..base + n_aug], &mut rest);
            let m = c.magnitude.get(n, o);
            let th = c.theta.get(n, o);
            let (cos, sin) = if settings.sign_retrieval {
                (th.cos(), th.sin())
            } else {
                (1.0, 0.0)
            };
            for i in 0..n_aug {
                let wi = w.get(i, o);
                let gi = gate.map_or(1.0, |gv| gv[i]);
                let gu = gi * u[i];
                let neg = u[i] < 0.0;
                let k = if neg { PI * gi } else { 0.0 };
                gp.weights
                    .add_at(i, o, g * ((gu.abs() - 1.0) * rest[i] * cos - m * sin * k));
                // dy/d(g u)
                let d_gated = g * wi * abs_grad(gu) * rest[i] * cos;
                if let Some(gg) = &mut gp.gate {
                    let d_k = if neg { -m * sin * wi * PI } else { 0.0 };
                    gg[i] += d_gated * u[i] + g * d_k;
                }
                d_aug[i] += d_gated * gi;
            }
        }
        for j in 0..n_in {
            let denom = x.get(n, j) + settings.eps;
            gx.add_at(n, j, d_aug[j] - d_aug[n_in + j] / (denom * denom));
        }
    }
    Gradients { params: gp, input: gx }
}
