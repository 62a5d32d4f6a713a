use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModuleKind, ModuleParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Weight initialisation schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// The kind's usual scheme (see [`InitScheme::for_kind`]).
    Default,
    /// `U(-b, b)` with `b = sqrt(3 / fan_avg)`, `fan_avg = (I + O) / 2`.
    Xavier,
    /// Xavier with the bound capped at 0.5.
    ConstrainedXavier,
    /// `U(0.25, 0.75)`.
    NmuUniform,
}

impl InitScheme {
    pub fn for_kind(kind: ModuleKind) -> InitScheme {
        match kind {
            ModuleKind::RealNpu | ModuleKind::Npu => InitScheme::Xavier,
            ModuleKind::Nru | ModuleKind::NruSeparateSign | ModuleKind::Nau => InitScheme::ConstrainedXavier,
            ModuleKind::Nmru | ModuleKind::Nmu => InitScheme::NmuUniform,
        }
    }
}

/// Xavier-uniform bound for a `fan_in x fan_out` matrix.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    let fan_avg = (fan_in + fan_out) as f64 / 2.0;
    (3.0 / fan_avg).sqrt()
}

/// Initialises parameters with the kind's default scheme.
pub fn init_params(kind: ModuleKind, in_size: usize, out_size: usize, seed: u64) -> Result<ModuleParams> {
    init_params_with(kind, in_size, out_size, InitScheme::Default, false, seed)
}

/// Initialises parameters. `nmru_gate` adds the gated-NMRU ablation's
/// `2I` gate (starting at 0.5, like the Real NPU gate).
pub fn init_params_with(
    kind: ModuleKind,
    in_size: usize,
    out_size: usize,
    scheme: InitScheme,
    nmru_gate: bool,
    seed: u64,
) -> Result<ModuleParams> {
    if in_size == 0 || out_size == 0 {
        return Err(Error::Dimension(format!(
            "module size {in_size}x{out_size} has a zero dimension"
        )));
    }
    let scheme = match scheme {
        InitScheme::Default => InitScheme::for_kind(kind),
        s => s,
    };
    let rows = kind.weight_rows(in_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = match scheme {
        InitScheme::Xavier => {
            let b = xavier_bound(rows, out_size);
            (-b, b)
        }
        InitScheme::ConstrainedXavier => {
            let b = xavier_bound(rows, out_size).min(0.5);
            (-b, b)
        }
        InitScheme::NmuUniform => (0.25, 0.75),
        InitScheme::Default => unreachable!(),
    };
    let data = (0..rows * out_size).map(|_| rng.random_range(lo..hi)).collect();
    let weights = Matrix::from_vec(rows, out_size, data)?;
    let imag = (kind == ModuleKind::Npu).then(|| Matrix::zeros(rows, out_size));
    let gate = if kind.has_gate() || (kind == ModuleKind::Nmru && nmru_gate) {
        Some(vec![0.5; rows])
    } else {
        None
    };
    ModuleParams::new(kind, weights, imag, gate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nmru_weights_in_quarter_band() {
        let p = init_params(ModuleKind::Nmru, 2, 1, 7).unwrap();
        assert_eq!(p.weights.shape(), (4, 1));
        assert!(p.values().all(|v| (0.25..=0.75).contains(&v)));
    }

    #[test]
    fn npu_gate_half_and_zero_imag() {
        let p = init_params(ModuleKind::RealNpu, 2, 1, 3).unwrap();
        assert_eq!(p.gate.as_deref().unwrap(), &[0.5, 0.5]);
        assert!(p.imag.is_none());
        let p = init_params(ModuleKind::Npu, 3, 1, 11).unwrap();
        assert!(p.imag.unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constrained_kinds_stay_within_half() {
        for kind in [ModuleKind::Nru, ModuleKind::Nau, ModuleKind::NruSeparateSign] {
            for seed in 0..20 {
                let p = init_params(kind, 2, 1, seed).unwrap();
                assert!(p.values().all(|v| v.abs() <= 0.5));
            }
        }
        let p = init_params_with(ModuleKind::RealNpu, 2, 1, InitScheme::ConstrainedXavier, false, 1).unwrap();
        assert!(p.weights.as_slice().iter().all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn xavier_can_exceed_unit_range_for_small_layers() {
        assert!(xavier_bound(2, 1) > 1.0);
        let hit = (0..200).any(|seed| {
            init_params(ModuleKind::RealNpu, 2, 1, seed)
                .unwrap()
                .weights
                .as_slice()
                .iter()
                .any(|v| v.abs() > 1.0)
        });
        assert!(hit);
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        assert_eq!(
            init_params(ModuleKind::Nru, 10, 1, 5).unwrap(),
            init_params(ModuleKind::Nru, 10, 1, 5).unwrap()
        );
        assert!(init_params(ModuleKind::Nru, 0, 1, 5).is_err());
        assert!(init_params(ModuleKind::Nru, 2, 0, 5).is_err());
    }
}
