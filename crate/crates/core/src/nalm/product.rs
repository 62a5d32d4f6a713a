//! Product-of-factors modules: NMU, NRU and the separate-sign NRU.
//!
//! NMU factor: `W x + 1 - W`.
//! NRU factor: `sign(x) |x|^W a(W) + 1 - a(W)` where `a(W)` is `|W|` in
//! evaluation mode and `tanh(s W)^2` in training mode.
//! Separate-sign NRU: magnitude factors `|x|^W a(W) + 1 - a(W)` times
//! `prod_i sign(x_i)^round(W)`.

use super::{leave_one_out, sign_nonneg, ForwardCache, Gradients, Mode, ModuleKind, ModuleParams, ModuleSettings};
use crate::matrix::Matrix;

/// Scale of the `tanh` absolute-value approximation.
pub const TANH_SCALE: f64 = 1000.0;

#[derive(Debug, Clone)]
pub(crate) struct ProductCache {
    /// Factors laid out as `[(n * O + o) * I + i]`.
    factors: Vec<f64>,
    /// `|x|^W` per factor (NRU kinds only).
    powers: Vec<f64>,
    /// Separate-sign NRU: sign product per `(n, o)`.
    signs: Vec<f64>,
}

/// `(a, da/dw)` for the NRU absolute-value term.
#[inline]
pub(crate) fn nru_abs(w: f64, mode: Mode, scale: f64) -> (f64, f64) {
    match mode {
        Mode::Training => {
            let t = (scale * w).tanh();
            (t * t, 2.0 * t * (1.0 - t * t) * scale)
        }
        Mode::Eval => (w.abs(), super::abs_grad(w)),
    }
}

/// `sign(x)^round(w)` with ties rounded to even.
#[inline]
pub(crate) fn separate_sign(x: f64, w: f64) -> f64 {
    if x >= 0.0 || w.round_ties_even() as i64 % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(super) fn forward(
    params: &ModuleParams,
    settings: &ModuleSettings,
    x: &Matrix,
    mode: Mode,
) -> (Matrix, ProductCache) {
    let w = &params.weights;
    let (n_rows, n_in, n_out) = (x.rows(), w.rows(), w.cols());
    let nru = params.kind != ModuleKind::Nmu;
    let mut factors = vec![0.0; n_rows * n_out * n_in];
    let mut powers = if nru { vec![0.0; factors.len()] } else { Vec::new() };
    let mut signs = if params.kind == ModuleKind::NruSeparateSign {
        vec![1.0; n_rows * n_out]
    } else {
        Vec::new()
    };
    let mut y = Matrix::zeros(n_rows, n_out);
    for n in 0..n_rows {
        let xr = x.row(n);
        for o in 0..n_out {
            let base = (n * n_out + o) * n_in;
            let mut prod = 1.0;
            let mut sign = 1.0;
            for i in 0..n_in {
                let wi = w.get(i, o);
                let xi = xr[i];
                let f = match params.kind {
                    ModuleKind::Nmu => wi * xi + (1.0 - wi),
                    ModuleKind::Nru => {
                        let (a, _) = nru_abs(wi, mode, settings.tanh_scale);
                        let p = xi.abs().powf(wi);
                        powers[base + i] = p;
                        sign_nonneg(xi) * p * a + (1.0 - a)
                    }
                    _ => {
                        let (a, _) = nru_abs(wi, mode, settings.tanh_scale);
                        let p = xi.abs().powf(wi);
                        powers[base + i] = p;
                        sign *= separate_sign(xi, wi);
                        p * a + (1.0 - a)
                    }
                };
                factors[base + i] = f;
                prod *= f;
            }
            if !signs.is_empty() {
                signs[n * n_out + o] = sign;
                prod *= sign;
            }
            y.set(n, o, prod);
        }
    }
    (y, ProductCache { factors, powers, signs })
}

pub(super) fn backward(
    params: &ModuleParams,
    settings: &ModuleSettings,
    cache: &ForwardCache,
    pc: &ProductCache,
    grad_y: &Matrix,
) -> Gradients {
    let w = &params.weights;
    let x = &cache.input;
    let (n_rows, n_in, n_out) = (x.rows(), w.rows(), w.cols());
    let mut gp = params.zeros_like();
    let mut gx = Matrix::zeros(n_rows, n_in);
    let mut rest = vec![0.0; n_in];
    for n in 0..n_rows {
        for o in 0..n_out {
            let g = grad_y.get(n, o);
            if g == 0.0 {
                continue;
            }
            let base = (n * n_out + o) * n_in;
            leave_one_out(&pc.factors[base..base + n_in], &mut rest);
            let outer = if pc.signs.is_empty() {
                g
            } else {
                g * pc.signs[n * n_out + o]
            };
            for i in 0..n_in {
                let wi = w.get(i, o);
                let xi = x.get(n, i);
                let (dfdw, dfdx) = match params.kind {
                    ModuleKind::Nmu => (xi - 1.0, wi),
                    _ => {
                        let (a, da) = nru_abs(wi, cache.mode, settings.tanh_scale);
                        let p = pc.powers[base + i];
                        let ax = xi.abs();
                        let p_log = if p == 0.0 { 0.0 } else { p * ax.ln() };
                        // d|x|^W/dx = W |x|^(W-1) sign(x); the NRU's leading sign(x) cancels it.
                        let dpdx_abs = if ax == 0.0 { 0.0 } else { wi * p / ax };
                        if params.kind == ModuleKind::Nru {
                            let s = sign_nonneg(xi);
                            (s * (p_log * a + p * da) - da, a * dpdx_abs)
                        } else {
                            (p_log * a + p * da - da, a * dpdx_abs * sign_nonneg(xi))
                        }
                    }
                };
                gp.weights.add_at(i, o, outer * rest[i] * dfdw);
                gx.add_at(n, i, outer * rest[i] * dfdx);
            }
        }
    }
    Gradients { params: gp, input: gx }
}

/// Closed-form partial derivative of an NRU output with respect to one
/// weight under the training-mode `tanh` approximation:
///
/// `tanh(sw) * (sign(x) |x|^w (tanh(sw) ln|x| + 2s sech^2(sw)) - 2s sech^2(sw)) * rest`
///
/// with `s = 1000` and `rest` the product of the remaining factors.
pub fn nru_weight_grad_closed_form(w_i: f64, x_i: f64, rest_factor: f64) -> f64 {
    let s = TANH_SCALE;
    let t = (s * w_i).tanh();
    let sech2 = 1.0 - t * t;
    let ax = x_i.abs();
    let p = ax.powf(w_i);
    let log_term = if p == 0.0 { 0.0 } else { t * ax.ln() };
    t * (sign_nonneg(x_i) * p * (log_term + 2.0 * s * sech2) - 2.0 * s * sech2) * rest_factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nalm::{backward, forward};

    fn params(kind: ModuleKind, w: &[f64]) -> ModuleParams {
        ModuleParams::with_weights(kind, Matrix::column(w)).unwrap()
    }

    fn run(kind: ModuleKind, w: &[f64], x: &[f64], mode: Mode) -> f64 {
        let p = params(kind, w);
        let (y, _) = forward(&p, &ModuleSettings::default(), &Matrix::from_rows(&[x]), mode).unwrap();
        y.get(0, 0)
    }

    #[test]
    fn nmu_product_and_identity() {
        assert_eq!(run(ModuleKind::Nmu, &[1.0, 1.0], &[2.0, 3.0], Mode::Eval), 6.0);
        assert_eq!(run(ModuleKind::Nmu, &[0.0, 0.0], &[2.0, 3.0], Mode::Eval), 1.0);
    }

    #[test]
    fn nru_divides_with_discrete_weights() {
        assert_eq!(run(ModuleKind::Nru, &[1.0, -1.0], &[8.0, 2.0], Mode::Eval), 4.0);
        assert_eq!(
            run(ModuleKind::NruSeparateSign, &[1.0, -1.0], &[8.0, -2.0], Mode::Eval),
            -4.0
        );
        assert_eq!(run(ModuleKind::Nru, &[1.0, -1.0], &[-8.0, -2.0], Mode::Eval), 4.0);
    }

    #[test]
    fn nru_zero_divisor_is_infinite() {
        let y = run(ModuleKind::Nru, &[1.0, -1.0], &[3.0, 0.0], Mode::Eval);
        assert_eq!(y, f64::INFINITY);
    }

    #[test]
    fn nru_zero_weight_has_zero_gradient() {
        let p = params(ModuleKind::Nru, &[0.0]);
        let s = ModuleSettings::default();
        for xv in [-3.0, -0.4, 0.7, 2.5] {
            let x = Matrix::from_rows(&[[xv]]);
            let (_, c) = forward(&p, &s, &x, Mode::Training).unwrap();
            let g = backward(&p, &s, &c, &Matrix::filled(1, 1, 1.0)).unwrap();
            assert_eq!(g.params.weights.get(0, 0), 0.0);
        }
    }

    #[test]
    fn closed_form_vanishes_at_zero_weight_and_unit_inputs() {
        for x in [-4.0, -1.0, 0.5, 1.0, 3.0] {
            assert_eq!(nru_weight_grad_closed_form(0.0, x, 1.0), 0.0);
        }
        for w in [-1.0, -0.5, 0.25, 0.5, 1.0] {
            assert!(nru_weight_grad_closed_form(w, 1.0, 1.0).abs() < 1e-12);
            assert!(nru_weight_grad_closed_form(w, -1.0, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_backward_single_input() {
        let p = params(ModuleKind::Nru, &[0.5]);
        let s = ModuleSettings::default();
        let x = Matrix::from_rows(&[[1.0]]);
        let (_, c) = forward(&p, &s, &x, Mode::Training).unwrap();
        let g = backward(&p, &s, &c, &Matrix::filled(1, 1, 1.0)).unwrap();
        let cf = nru_weight_grad_closed_form(0.5, 1.0, 1.0);
        assert!((g.params.weights.get(0, 0) - cf).abs() < 1e-9);
    }

    #[test]
    fn separate_sign_rounds_half_to_even() {
        assert_eq!(separate_sign(-2.0, 0.5), 1.0);
        assert_eq!(separate_sign(-2.0, 0.51), -1.0);
        assert_eq!(separate_sign(-2.0, -1.0), -1.0);
        assert_eq!(separate_sign(-2.0, 1.5), 1.0);
        assert_eq!(separate_sign(2.0, 1.0), 1.0);
    }
}
