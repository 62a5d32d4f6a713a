//! Sparsity (L1/L2) and discretisation penalties with their schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nalm::ModuleParams;

/// Which tensors a penalty applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegTargets {
    pub weights: bool,
    pub imag: bool,
    pub gate: bool,
}

impl Default for RegTargets {
    fn default() -> Self {
        Self {
            weights: true,
            imag: false,
            gate: false,
        }
    }
}

/// Stepwise-growing strength: `min(end, start * growth^floor(i / step))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub start: f64,
    pub end: f64,
    pub growth: f64,
    pub step: u64,
    #[serde(default)]
    pub targets: RegTargets,
}

impl BetaSchedule {
    pub fn beta(&self, iteration: u64) -> f64 {
        let steps = (iteration / self.step.max(1)) as i32;
        (self.start * self.growth.powi(steps)).min(self.end)
    }
}

/// Linear ramp from 0 at `start` to `lambda_hat` at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub lambda_hat: f64,
    pub start: u64,
    pub end: u64,
    /// Treat 0 as a non-discrete weight value, pushing weights towards +-1.
    #[serde(default)]
    pub penalize_zero: bool,
    #[serde(default)]
    pub targets: RegTargets,
}

impl LambdaSchedule {
    pub fn lambda(&self, iteration: u64) -> f64 {
        let frac = (iteration as f64 - self.start as f64) / (self.end as f64 - self.start as f64);
        self.lambda_hat * frac.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegSchedule {
    L1(BetaSchedule),
    L2(BetaSchedule),
    Discretization(LambdaSchedule),
    None,
}

impl RegSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            RegSchedule::L1(b) | RegSchedule::L2(b) => {
                let ok = b.start >= 0.0 && b.start <= b.end && b.growth >= 1.0 && b.step > 0;
                if !ok {
                    return Err(Error::Config(format!("invalid beta schedule {b:?}")));
                }
            }
            RegSchedule::Discretization(l) => {
                if !(l.lambda_hat >= 0.0 && l.start < l.end) {
                    return Err(Error::Config(format!("invalid lambda schedule {l:?}")));
                }
            }
            RegSchedule::None => {}
        }
        Ok(())
    }

    /// Penalty value and its gradient at `iteration`.
    pub fn penalty(&self, params: &ModuleParams, iteration: u64) -> (f64, ModuleParams) {
        match self {
            RegSchedule::L1(_) | RegSchedule::L2(_) => l_penalty(self, params, iteration),
            RegSchedule::Discretization(_) => discretization_penalty(self, params, iteration),
            RegSchedule::None => (0.0, params.zeros_like()),
        }
    }
}

/// Applies `f(value) -> (term, dterm)` to the targeted tensors.
fn for_targets(
    params: &ModuleParams,
    targets: RegTargets,
    mut f: impl FnMut(bool, f64) -> (f64, f64),
) -> (f64, usize, ModuleParams) {
    let mut grad = params.zeros_like();
    let mut total = 0.0;
    let mut count = 0;
    let mut visit = |vals: &[f64], out: &mut [f64], is_gate: bool| {
        for (v, g) in vals.iter().zip(out.iter_mut()) {
            let (t, d) = f(is_gate, *v);
            total += t;
            *g = d;
            count += 1;
        }
    };
    if targets.weights {
        visit(params.weights.as_slice(), grad.weights.as_mut_slice(), false);
    }
    if targets.imag {
        if let (Some(src), Some(dst)) = (&params.imag, &mut grad.imag) {
            visit(src.as_slice(), dst.as_mut_slice(), false);
        }
    }
    if targets.gate {
        if let (Some(src), Some(dst)) = (&params.gate, &mut grad.gate) {
            visit(src, dst, true);
        }
    }
    (total, count, grad)
}

/// `beta * sum|w|` (L1) or `beta * sum w^2` (L2) over the targeted tensors.
pub fn l_penalty(schedule: &RegSchedule, params: &ModuleParams, iteration: u64) -> (f64, ModuleParams) {
    let (b, square) = match schedule {
        RegSchedule::L1(b) => (b, false),
        RegSchedule::L2(b) => (b, true),
        _ => return (0.0, params.zeros_like()),
    };
    let beta = b.beta(iteration);
    let (total, _, mut grad) = for_targets(params, b.targets, |_, w| {
        if square {
            (w * w, 2.0 * w)
        } else {
            (w.abs(), super::sign_or_zero(w))
        }
    });
    grad.scale(beta);
    (beta * total, grad)
}

/// `lambda * mean(min(|w|, 1 - |w|))` over the targeted entries.
///
/// With `penalize_zero`, non-gate entries use the distance to `{-1, 1}` instead.
pub fn discretization_penalty(schedule: &RegSchedule, params: &ModuleParams, iteration: u64) -> (f64, ModuleParams) {
    let RegSchedule::Discretization(l) = schedule else {
        return (0.0, params.zeros_like());
    };
    let lambda = l.lambda(iteration);
    if lambda == 0.0 {
        return (0.0, params.zeros_like());
    }
    let (total, count, mut grad) = for_targets(params, l.targets, |is_gate, w| {
        let a = w.abs();
        let s = super::sign_or_zero(w);
        if l.penalize_zero && !is_gate {
            let d = a - 1.0;
            (d.abs(), s * super::sign_or_zero(d))
        } else if a <= 1.0 - a {
            (a, s)
        } else {
            (1.0 - a, -s)
        }
    });
    if count == 0 {
        return (0.0, grad);
    }
    let scale = lambda / count as f64;
    grad.scale(scale);
    (scale * total, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::nalm::ModuleKind;

    fn growing_beta() -> BetaSchedule {
        BetaSchedule {
            start: 1e-9,
            end: 1e-7,
            growth: 10.0,
            step: 10_000,
            targets: RegTargets::default(),
        }
    }

    fn ramp() -> LambdaSchedule {
        LambdaSchedule {
            lambda_hat: 10.0,
            start: 50_000,
            end: 75_000,
            penalize_zero: false,
            targets: RegTargets::default(),
        }
    }

    #[test]
    fn beta_schedule_values() {
        let b = growing_beta();
        assert_eq!(b.beta(0), 1e-9);
        assert_eq!(b.beta(25_000), 1e-7);
        assert_eq!(b.beta(1_000_000), 1e-7);
        let mut prev = 0.0;
        for it in (0..200_000).step_by(2_500) {
            assert!(b.beta(it) >= prev);
            prev = b.beta(it);
        }
    }

    #[test]
    fn lambda_ramp_values() {
        let l = ramp();
        assert_eq!(l.lambda(62_500), 5.0);
        assert_eq!(l.lambda(0), 0.0);
        assert_eq!(l.lambda(50_000), 0.0);
        assert_eq!(l.lambda(75_000), 10.0);
        assert_eq!(l.lambda(90_000), 10.0);
    }

    #[test]
    fn zero_weights_have_no_l1_penalty() {
        let p = ModuleParams::with_weights(ModuleKind::RealNpu, Matrix::zeros(3, 1)).unwrap();
        let (pen, grad) = l_penalty(&RegSchedule::L1(growing_beta()), &p, 30_000);
        assert_eq!(pen, 0.0);
        assert!(grad.values().all(|v| v == 0.0));
    }

    #[test]
    fn discretization_peak_and_clamp() {
        let p = ModuleParams::with_weights(ModuleKind::Nru, Matrix::column(&[0.5])).unwrap();
        let s = RegSchedule::Discretization(ramp());
        assert_eq!(discretization_penalty(&s, &p, 75_000).0, 10.0 * 0.5);
        assert_eq!(discretization_penalty(&s, &p, 10_000).0, 0.0);
    }

    #[test]
    fn penalize_zero_moves_target_set() {
        let p = ModuleParams::with_weights(ModuleKind::Nru, Matrix::column(&[0.0, 0.9])).unwrap();
        let mut l = ramp();
        let s = RegSchedule::Discretization(l);
        assert!((discretization_penalty(&s, &p, 80_000).0 - 10.0 * 0.05).abs() < 1e-12);
        l.penalize_zero = true;
        let s = RegSchedule::Discretization(l);
        assert!((discretization_penalty(&s, &p, 80_000).0 - 10.0 * 0.55).abs() < 1e-12);
    }

    #[test]
    fn gate_entries_included_when_targeted() {
        let mut p = ModuleParams::with_weights(ModuleKind::RealNpu, Matrix::column(&[1.0, -1.0])).unwrap();
        p.gate = Some(vec![0.5, 1.0]);
        let mut l = ramp();
        l.targets = RegTargets {
            weights: true,
            imag: false,
            gate: true,
        };
        let (pen, grad) = discretization_penalty(&RegSchedule::Discretization(l), &p, 80_000);
        assert!((pen - 10.0 * 0.5 / 4.0).abs() < 1e-12);
        assert_eq!(grad.gate.unwrap()[0], 10.0 / 4.0);
    }

    #[test]
    fn schedule_validation() {
        let mut b = growing_beta();
        b.start = 1e-6;
        assert!(RegSchedule::L1(b).validate().is_err());
        let mut l = ramp();
        l.end = l.start;
        assert!(RegSchedule::Discretization(l).validate().is_err());
        assert!(RegSchedule::L1(growing_beta()).validate().is_ok());
    }
}
