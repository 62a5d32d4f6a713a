//! NAU: `a_o = sum_i W[i,o] * x_i`.

use super::{ForwardCache, Gradients, ModuleParams};
use crate::matrix::Matrix;

pub(super) fn forward(params: &ModuleParams, x: &Matrix) -> Matrix {
    let w = &params.weights;
    let mut y = Matrix::zeros(x.rows(), w.cols());
    for n in 0..x.rows() {
        for o in 0..w.cols() {
            let mut acc = 0.0;
            for (i, xi) in x.row(n).iter().enumerate() {
                acc += w.get(i, o) * xi;
            }
            y.set(n, o, acc);
        }
    }
    y
}

pub(super) fn backward(params: &ModuleParams, cache: &ForwardCache, grad_y: &Matrix) -> Gradients {
    let w = &params.weights;
    let x = &cache.input;
    let mut gp = params.zeros_like();
    let mut gx = Matrix::zeros(x.rows(), x.cols());
    for n in 0..x.rows() {
        for o in 0..w.cols() {
            let g = grad_y.get(n, o);
            for i in 0..w.rows() {
                gp.weights.add_at(i, o, g * x.get(n, i));
                gx.add_at(n, i, g * w.get(i, o));
            }
        }
    }
    Gradients { params: gp, input: gx }
}
