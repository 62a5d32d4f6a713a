use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nalm::ModuleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimiser state for one parameter set.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
    Sgd,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, params: &ModuleParams) -> Self {
        match kind {
            OptimizerKind::Adam => {
                let n = params.num_values();
                Optimizer::Adam {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                    t: 0,
                }
            }
            OptimizerKind::Sgd => Optimizer::Sgd,
        }
    }

    /// Updates `params` in place. Non-finite gradients are rejected before
    /// anything is modified.
    pub fn step(&mut self, params: &mut ModuleParams, grads: &ModuleParams, lr: f64) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        let g = grads.to_flat();
        let mut p = params.to_flat();
        if g.len() != p.len() {
            return Err(Error::Dimension("gradient and parameter sizes differ".into()));
        }
        match self {
            Optimizer::Sgd => {
                for (pi, gi) in p.iter_mut().zip(&g) {
                    *pi -= lr * gi;
                }
            }
            Optimizer::Adam { m, v, t } => {
                *t += 1;
                let bc1 = 1.0 - ADAM_BETA1.powi(*t);
                let bc2 = 1.0 - ADAM_BETA2.powi(*t);
                for i in 0..p.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        params.set_flat(&p)
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut ModuleParams, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}
