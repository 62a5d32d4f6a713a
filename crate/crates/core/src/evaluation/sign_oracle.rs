//! Two-state sign machine for the cosine sign mechanism.
//!
//! Starting from `s = +1`, each input either flips the state (`a(s) = -s`)
//! or keeps it (`b(s) = s`):
//!
//! * Real NPU flips iff `x_i < 0`, `w_i != 0` and `g_i = 1`.
//! * NMRU flips iff the augmented element is negative and `w_i = 1`.

use crate::error::{Error, Result};
use crate::nalm::ModuleKind;

/// Final sign for discrete parameters. For the NMRU, `weights` has `2I`
/// entries over `[x, 1/x]` and `negative` gives the `I` raw input signs;
/// `gates` is ignored.
pub fn sign_oracle(kind: ModuleKind, weights: &[f64], gates: &[f64], negative: &[bool]) -> Result<f64> {
    let mut state = 1.0;
    match kind {
        ModuleKind::RealNpu => {
            if weights.len() != negative.len() || gates.len() != negative.len() {
                return Err(Error::Dimension("weights, gates and signs must align".into()));
            }
            for ((&w, &g), &neg) in weights.iter().zip(gates).zip(negative) {
                if ![-1.0, 0.0, 1.0].contains(&w) || ![0.0, 1.0].contains(&g) {
                    return Err(Error::Config(format!("non-discrete Real NPU parameters w={w}, g={g}")));
                }
                if neg && w != 0.0 && g == 1.0 {
                    state = -state;
                }
            }
        }
        ModuleKind::Nmru => {
            if weights.len() != 2 * negative.len() {
                return Err(Error::Dimension("NMRU oracle needs 2I weights".into()));
            }
            for (i, &w) in weights.iter().enumerate() {
                if ![0.0, 1.0].contains(&w) {
                    return Err(Error::Config(format!("non-discrete NMRU weight {w}")));
                }
                if negative[i % negative.len()] && w == 1.0 {
                    state = -state;
                }
            }
        }
        k => return Err(Error::Unsupported(format!("no sign state machine for {k}"))),
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            sign_oracle(ModuleKind::RealNpu, &[1.0, -1.0], &[1.0, 1.0], &[true, false]).unwrap(),
            -1.0
        );
        assert_eq!(
            sign_oracle(ModuleKind::Nmru, &[0.0; 4], &[], &[true, true]).unwrap(),
            1.0
        );
        assert_eq!(sign_oracle(ModuleKind::RealNpu, &[1.0], &[0.0], &[true]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_non_discrete() {
        assert!(sign_oracle(ModuleKind::RealNpu, &[0.5], &[1.0], &[true]).is_err());
        assert!(sign_oracle(ModuleKind::RealNpu, &[1.0], &[0.3], &[true]).is_err());
        assert!(sign_oracle(ModuleKind::Nmru, &[-1.0, 0.0], &[], &[true]).is_err());
        assert!(sign_oracle(ModuleKind::Nau, &[1.0], &[], &[true]).is_err());
    }
}
