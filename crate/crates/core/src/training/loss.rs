use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stability term and standard-deviation floor of the correlation loss.
pub const PCC_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    /// `1 - r`, Pearson correlation over the batch.
    Pcc,
    /// Mean absolute percentage error, `mean(|y - y_hat| / |y|)`.
    Mape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// d loss / d y_hat
    pub grad: Vec<f64>,
    /// Set when a PCC standard deviation hit its clamp floor.
    pub degenerate: bool,
}

pub fn compute_loss(kind: LossKind, y_hat: &[f64], y: &[f64]) -> Result<LossOutput> {
    if y_hat.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            y_hat.len(),
            y.len()
        )));
    }
    let n = y.len();
    let min_n = if kind == LossKind::Pcc { 2 } else { 1 };
    if n < min_n {
        return Err(Error::Dimension(format!(
            "{kind:?} needs at least {min_n} samples, got {n}"
        )));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("loss targets".into()));
    }
    let nf = n as f64;
    let out = match kind {
        LossKind::Mse => {
            let mut loss = 0.0;
            let grad = y_hat
                .iter()
                .zip(y)
                .map(|(p, t)| {
                    let d = p - t;
                    loss += d * d;
                    2.0 * d / nf
                })
                .collect();
            LossOutput {
                loss: loss / nf,
                grad,
                degenerate: false,
            }
        }
        LossKind::Mape => {
            if y.contains(&0.0) {
                return Err(Error::NonFinite("MAPE with a zero target".into()));
            }
            let mut loss = 0.0;
            let grad = y_hat
                .iter()
                .zip(y)
                .map(|(p, t)| {
                    let d = p - t;
                    loss += d.abs() / t.abs();
                    super::sign_or_zero(d) / (t.abs() * nf)
                })
                .collect();
            LossOutput {
                loss: loss / nf,
                grad,
                degenerate: false,
            }
        }
        LossKind::Pcc => pcc(y_hat, y),
    };
    Ok(out)
}

fn pcc(y_hat: &[f64], y: &[f64]) -> LossOutput {
    let nf = y.len() as f64;
    let mean_p = y_hat.iter().sum::<f64>() / nf;
    let mean_t = y.iter().sum::<f64>() / nf;
    let vp: Vec<f64> = y_hat.iter().map(|p| p - mean_p).collect();
    let vt: Vec<f64> = y.iter().map(|t| t - mean_t).collect();
    let var_p = vp.iter().map(|v| v * v).sum::<f64>() / nf;
    let var_t = vt.iter().map(|v| v * v).sum::<f64>() / nf;
    let clamped_p = var_p < PCC_EPS;
    let clamped_t = var_t < PCC_EPS;
    let sp = var_p.max(PCC_EPS).sqrt();
    let st = var_t.max(PCC_EPS).sqrt();
    let ct: Vec<f64> = vt.iter().map(|v| v / (st + PCC_EPS)).collect();
    let dot: f64 = vp.iter().zip(&ct).map(|(a, b)| a * b).sum();
    let denom = sp + PCC_EPS;
    let r = dot / (nf * denom);
    let mean_ct = ct.iter().sum::<f64>() / nf;
    let grad = vp
        .iter()
        .zip(&ct)
        .map(|(v, c)| {
            // Centering: d v_i / d yhat_j = delta_ij - 1/N.
            let d_dot = c - mean_ct;
            let d_sp = if clamped_p { 0.0 } else { v / (nf * sp) };
            let dr = d_dot / (nf * denom) - dot / (nf * denom * denom) * d_sp;
            -dr
        })
        .collect();
    LossOutput {
        loss: 1.0 - r,
        grad,
        degenerate: clamped_p || clamped_t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(kind: LossKind, p: &[f64], y: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..p.len())
            .map(|i| {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[i] += h;
                b[i] -= h;
                (compute_loss(kind, &a, y).unwrap().loss - compute_loss(kind, &b, y).unwrap().loss) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn exact_fit_losses() {
        let y = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(compute_loss(LossKind::Mse, &y, &y).unwrap().loss, 0.0);
        assert!(compute_loss(LossKind::Pcc, &y, &y).unwrap().loss.abs() < 1e-7);
        assert_eq!(compute_loss(LossKind::Mape, &y, &y).unwrap().loss, 0.0);
    }

    #[test]
    fn mape_example() {
        let out = compute_loss(LossKind::Mape, &[2.0, 3.0], &[4.0, 3.0]).unwrap();
        assert_eq!(out.loss, 0.25);
    }

    #[test]
    fn mape_uses_absolute_denominator() {
        let out = compute_loss(LossKind::Mape, &[-2.0], &[-4.0]).unwrap();
        assert_eq!(out.loss, 0.5);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = [0.3, -1.2, 2.5, 0.9, 1.7];
        let y = [0.5, -1.0, 2.0, 1.5, 1.1];
        for kind in [LossKind::Mse, LossKind::Pcc, LossKind::Mape] {
            let g = compute_loss(kind, &p, &y).unwrap().grad;
            for (a, b) in g.iter().zip(fd_grad(kind, &p, &y)) {
                assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{kind:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn pcc_constant_targets_flagged() {
        let out = compute_loss(LossKind::Pcc, &[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap();
        assert!(out.degenerate);
        assert!(out.loss.is_finite());
        assert!(out.grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn pcc_needs_two_samples() {
        assert!(compute_loss(LossKind::Pcc, &[1.0], &[1.0]).is_err());
        assert!(compute_loss(LossKind::Mse, &[1.0], &[1.0, 2.0]).is_err());
    }
}
