//! (Real) Neural Power Unit.
//!
//! ```text
//! r   = g * (|x| + eps) + (1 - g)
//! k_i = 0 if x_i >= 0 else pi * g_i
//! NPU      = exp(W_re ln r - W_im k) * cos(W_im ln r + W_re k)
//! Real NPU = exp(W_re ln r) * cos(W_re k)
//! ```
//!
//! The gate is clamped to `[0, 1]` inside the forward pass, so training
//! setups that never clip the stored gate still see a valid relevance gate.

use std::f64::consts::PI;

use super::{abs_grad, ForwardCache, Gradients, ModuleParams, ModuleSettings};
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub(crate) struct NpuCache {
    /// `N x I`
    r: Matrix,
    log_r: Matrix,
    k: Matrix,
    /// `N x O`
    exp_z: Matrix,
    phi: Matrix,
}

#[inline]
fn clamp_gate(g: f64) -> (f64, f64) {
    if (0.0..=1.0).contains(&g) {
        (g, 1.0)
    } else {
        (g.clamp(0.0, 1.0), 0.0)
    }
}

pub(super) fn forward(params: &ModuleParams, settings: &ModuleSettings, x: &Matrix) -> (Matrix, NpuCache) {
    let w = &params.weights;
    let gate = params.gate.as_deref().expect("validated: NPU has a gate");
    let (n_rows, n_in, n_out) = (x.rows(), w.rows(), w.cols());
    let mut r = Matrix::zeros(n_rows, n_in);
    let mut log_r = Matrix::zeros(n_rows, n_in);
    let mut k = Matrix::zeros(n_rows, n_in);
    let mut exp_z = Matrix::zeros(n_rows, n_out);
    let mut phi = Matrix::zeros(n_rows, n_out);
    let mut y = Matrix::zeros(n_rows, n_out);
    for n in 0..n_rows {
        for i in 0..n_in {
            let xi = x.get(n, i);
            let (g, _) = clamp_gate(gate[i]);
            let ri = g * (xi.abs() + settings.eps) + (1.0 - g);
            r.set(n, i, ri);
            log_r.set(n, i, ri.ln());
            k.set(n, i, if xi < 0.0 { PI * g } else { 0.0 });
        }
        for o in 0..n_out {
            let mut z = 0.0;
            let mut ph = 0.0;
            for i in 0..n_in {
                z += w.get(i, o) * log_r.get(n, i);
                ph += w.get(i, o) * k.get(n, i);
            }
            if let Some(im) = &params.imag {
                for i in 0..n_in {
                    z -= im.get(i, o) * k.get(n, i);
                    ph += im.get(i, o) * log_r.get(n, i);
                }
            }
            let e = z.exp();
            exp_z.set(n, o, e);
            phi.set(n, o, ph);
            y.set(n, o, e * ph.cos());
        }
    }
    (
        y,
        NpuCache {
            r,
            log_r,
            k,
            exp_z,
            phi,
        },
    )
}

pub(super) fn backward(
    params: &ModuleParams,
    settings: &ModuleSettings,
    cache: &ForwardCache,
    c: &NpuCache,
    grad_y: &Matrix,
) -> Gradients {
    let w = &params.weights;
    let gate = params.gate.as_deref().expect("validated: NPU has a gate");
    let x = &cache.input;
    let y = &cache.output;
    let (n_rows, n_in, n_out) = (x.rows(), w.rows(), w.cols());
    let mut gp = params.zeros_like();
    let mut gx = Matrix::zeros(n_rows, n_in);
    for n in 0..n_rows {
        for i in 0..n_in {
            let l = c.log_r.get(n, i);
            let k = c.k.get(n, i);
            // dLoss/d(ln r_i) and dLoss/dk_i accumulated over outputs.
            let mut d_log = 0.0;
            let mut d_k = 0.0;
            for o in 0..n_out {
                let g = grad_y.get(n, o);
                let yo = y.get(n, o);
                let es = c.exp_z.get(n, o) * c.phi.get(n, o).sin();
                let wre = w.get(i, o);
                let wim = params.imag.as_ref().map_or(0.0, |m| m.get(i, o));
                gp.weights.add_at(i, o, g * (yo * l - es * k));
                if let Some(gim) = &mut gp.imag {
                    gim.add_at(i, o, g * (-yo * k - es * l));
                }
                d_log += g * (yo * wre - es * wim);
                d_k += g * (-yo * wim - es * wre);
            }
            let xi = x.get(n, i);
            let (gi, mask) = clamp_gate(gate[i]);
            let ri = c.r.get(n, i);
            let dlog_dg = (xi.abs() + settings.eps - 1.0) / ri;
            let dk_dg = if xi < 0.0 { PI } else { 0.0 };
            if let Some(gg) = &mut gp.gate {
                gg[i] += mask * (d_log * dlog_dg + d_k * dk_dg);
            }
            gx.add_at(n, i, d_log * gi * abs_grad(xi) / ri);
        }
    }
    Gradients { params: gp, input: gx }
}

#[cfg(test)]
mod tests {
    use crate::matrix::Matrix;
    use crate::nalm::{forward, Mode, ModuleKind, ModuleParams, ModuleSettings};

    #[test]
    fn real_npu_divides_with_sign() {
        let p = ModuleParams::new(
            ModuleKind::RealNpu,
            Matrix::column(&[1.0, -1.0]),
            None,
            Some(vec![1.0, 1.0]),
        )
        .unwrap();
        let s = ModuleSettings {
            eps: 0.0,
            ..Default::default()
        };
        let (y, _) = forward(&p, &s, &Matrix::from_rows(&[[-2.0, 3.0]]), Mode::Eval).unwrap();
        assert!((y.get(0, 0) - (-2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn closed_gate_maps_input_to_identity() {
        let p = ModuleParams::new(
            ModuleKind::RealNpu,
            Matrix::column(&[1.0, 1.0]),
            None,
            Some(vec![1.0, 0.0]),
        )
        .unwrap();
        let s = ModuleSettings {
            eps: 0.0,
            ..Default::default()
        };
        let (y, _) = forward(&p, &s, &Matrix::from_rows(&[[5.0, -7.0]]), Mode::Eval).unwrap();
        assert!((y.get(0, 0) - 5.0).abs() < 1e-12);
    }
}
