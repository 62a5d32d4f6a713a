//! Named module configurations: the Real NPU modification ablations and the
//! NRU/NMRU variants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::TaskSpec;
use crate::error::{Error, Result};
use crate::nalm::{ClipPolicy, InitScheme, ModuleKind};
use crate::training::{BetaSchedule, LambdaSchedule, OptimizerKind, RegSchedule, RegTargets, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Real NPU as originally proposed: L1 on the weights, no clipping, Xavier init.
    RealNpuBaseline,
    RealNpuNoL1,
    /// Baseline plus weight and gate clipping.
    RealNpuClip,
    /// Clipping plus discretisation of the gate only.
    RealNpuDiscGate,
    /// Clipping plus discretisation of weights and gate.
    RealNpuDisc,
    /// All modifications: L1, clipping, discretisation, constrained init.
    RealNpu,
    /// `RealNpu` with L2 in place of L1.
    RealNpuL2,
    /// Complex NPU with the Real NPU modifications on the real weights.
    Npu,
    /// `Npu` with clipped imaginary weights pushed to 0 by L1.
    NpuClipReg,
    Nru,
    NruSepSign,
    Nmru,
    NmruNoSign,
    NmruNoClip,
    /// No sign retrieval and no gradient clipping.
    NmruVanilla,
    NmruGate,
    NmruSgd,
    Nau,
    Nmu,
}

impl Variant {
    pub const ALL: [Variant; 19] = [
        Variant::RealNpuBaseline,
        Variant::RealNpuNoL1,
        Variant::RealNpuClip,
        Variant::RealNpuDiscGate,
        Variant::RealNpuDisc,
        Variant::RealNpu,
        Variant::RealNpuL2,
        Variant::Npu,
        Variant::NpuClipReg,
        Variant::Nru,
        Variant::NruSepSign,
        Variant::Nmru,
        Variant::NmruNoSign,
        Variant::NmruNoClip,
        Variant::NmruVanilla,
        Variant::NmruGate,
        Variant::NmruSgd,
        Variant::Nau,
        Variant::Nmu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::RealNpuBaseline => "real-npu-baseline",
            Variant::RealNpuNoL1 => "real-npu-no-l1",
            Variant::RealNpuClip => "real-npu-clip",
            Variant::RealNpuDiscGate => "real-npu-disc-gate",
            Variant::RealNpuDisc => "real-npu-disc",
            Variant::RealNpu => "real-npu",
            Variant::RealNpuL2 => "real-npu-l2",
            Variant::Npu => "npu",
            Variant::NpuClipReg => "npu-clip-reg",
            Variant::Nru => "nru",
            Variant::NruSepSign => "nru-sep-sign",
            Variant::Nmru => "nmru",
            Variant::NmruNoSign => "nmru-no-sign",
            Variant::NmruNoClip => "nmru-no-clip",
            Variant::NmruVanilla => "nmru-vanilla",
            Variant::NmruGate => "nmru-gate",
            Variant::NmruSgd => "nmru-sgd",
            Variant::Nau => "nau",
            Variant::Nmu => "nmu",
        }
    }

    pub fn kind(self) -> ModuleKind {
        use Variant::*;
        match self {
            RealNpuBaseline | RealNpuNoL1 | RealNpuClip | RealNpuDiscGate | RealNpuDisc | RealNpu | RealNpuL2 => {
                ModuleKind::RealNpu
            }
            Npu | NpuClipReg => ModuleKind::Npu,
            Nru => ModuleKind::Nru,
            NruSepSign => ModuleKind::NruSeparateSign,
            Nmru | NmruNoSign | NmruNoClip | NmruVanilla | NmruGate | NmruSgd => ModuleKind::Nmru,
            Nau => ModuleKind::Nau,
            Nmu => ModuleKind::Nmu,
        }
    }

    /// Training configuration for `task` under `hyper`. Presets may tweak
    /// the result further (e.g. dropping regularisation).
    pub fn config(self, task: TaskSpec, hyper: &Hyper, seed: u64) -> TrainConfig {
        use Variant::*;
        let kind = self.kind();
        let lr = match kind {
            ModuleKind::RealNpu | ModuleKind::Npu => hyper.lr_npu,
            ModuleKind::Nru | ModuleKind::NruSeparateSign => hyper.lr_nru,
            _ => hyper.lr_nmru,
        };
        let mut c = TrainConfig::new(kind, task, hyper.iterations, lr);
        c.seed = seed;
        let (npu_start, npu_end) = hyper.npu_reg_window;
        let (start, end) = hyper.reg_window;
        let beta = |targets| BetaSchedule {
            start: 1e-9,
            end: 1e-7,
            growth: 10.0,
            step: 10_000,
            targets,
        };
        let weights_only = RegTargets {
            weights: true,
            imag: false,
            gate: false,
        };
        let npu_disc = |targets| {
            RegSchedule::Discretization(LambdaSchedule {
                lambda_hat: 1.0,
                start: npu_start,
                end: npu_end,
                penalize_zero: false,
                targets,
            })
        };
        let disc = |targets| {
            RegSchedule::Discretization(LambdaSchedule {
                lambda_hat: 10.0,
                start,
                end,
                penalize_zero: false,
                targets,
            })
        };
        let w_and_g = RegTargets {
            weights: true,
            imag: false,
            gate: true,
        };
        let real_clip = ClipPolicy {
            weights: true,
            imag: false,
            gate: true,
        };
        match self {
            RealNpuBaseline | RealNpuNoL1 => {
                c.clip = ClipPolicy::NONE;
                c.init = InitScheme::Xavier;
                if self == RealNpuBaseline {
                    c.regularizers = vec![RegSchedule::L1(beta(weights_only))];
                }
            }
            RealNpuClip | RealNpuDiscGate | RealNpuDisc => {
                c.clip = real_clip;
                c.init = InitScheme::Xavier;
                c.regularizers = vec![RegSchedule::L1(beta(weights_only))];
                match self {
                    RealNpuDiscGate => c.regularizers.push(npu_disc(RegTargets {
                        weights: false,
                        imag: false,
                        gate: true,
                    })),
                    RealNpuDisc => c.regularizers.push(npu_disc(w_and_g)),
                    _ => {}
                }
            }
            RealNpu | RealNpuL2 | Npu => {
                c.clip = real_clip;
                c.init = InitScheme::ConstrainedXavier;
                let l = if self == RealNpuL2 {
                    RegSchedule::L2(beta(weights_only))
                } else {
                    RegSchedule::L1(beta(weights_only))
                };
                c.regularizers = vec![l, npu_disc(w_and_g)];
            }
            NpuClipReg => {
                c.clip = ClipPolicy::ALL;
                c.init = InitScheme::ConstrainedXavier;
                c.regularizers = vec![
                    RegSchedule::L1(beta(RegTargets {
                        weights: true,
                        imag: true,
                        gate: false,
                    })),
                    npu_disc(w_and_g),
                ];
            }
            Nru | NruSepSign | Nau | Nmu => {
                c.regularizers = vec![disc(weights_only)];
            }
            Nmru | NmruNoSign | NmruNoClip | NmruVanilla | NmruGate | NmruSgd => {
                c.regularizers = vec![disc(weights_only)];
                c.grad_norm_clip = Some(1.0);
                match self {
                    NmruNoSign => c.settings.sign_retrieval = false,
                    NmruNoClip => c.grad_norm_clip = None,
                    NmruVanilla => {
                        c.settings.sign_retrieval = false;
                        c.grad_norm_clip = None;
                    }
                    NmruGate => {
                        c.nmru_gate = true;
                        c.regularizers = vec![disc(w_and_g)];
                    }
                    NmruSgd => c.optimizer = OptimizerKind::Sgd,
                    _ => {}
                }
            }
        }
        c
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let key = match key.as_str() {
            "real-npu-modified" | "realnpu" => "real-npu",
            "nrusep" | "nru-separate-sign" => "nru-sep-sign",
            other => other,
        };
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown variant {s:?}")))
    }
}

/// Hyperparameters shared by the variants of one experiment setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub iterations: u64,
    pub lr_npu: f64,
    pub lr_nru: f64,
    pub lr_nmru: f64,
    /// Discretisation ramp of the Real NPU family.
    pub npu_reg_window: (u64, u64),
    /// Discretisation ramp of every other module.
    pub reg_window: (u64, u64),
}

impl Hyper {
    /// Two inputs, 50k iterations.
    pub const NO_REDUNDANCY: Hyper = Hyper {
        iterations: 50_000,
        lr_npu: 5e-3,
        lr_nru: 1.0,
        lr_nmru: 1e-2,
        npu_reg_window: (40_000, 50_000),
        reg_window: (20_000, 35_000),
    };

    /// Ten inputs, 100k iterations.
    pub const REDUNDANCY: Hyper = Hyper {
        iterations: 100_000,
        lr_npu: 5e-3,
        lr_nru: 1e-3,
        lr_nmru: 1e-2,
        npu_reg_window: (50_000, 75_000),
        reg_window: (50_000, 75_000),
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{Operation, RangeSpec};

    fn task() -> TaskSpec {
        TaskSpec::shared(
            2,
            Operation::Divide,
            vec![0, 1],
            RangeSpec::uniform(1.0, 2.0),
            RangeSpec::uniform(2.0, 6.0),
        )
    }

    #[test]
    fn names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("real_npu_modified".parse::<Variant>().unwrap(), Variant::RealNpu);
        assert!("bogus".parse::<Variant>().is_err());
    }

    #[test]
    fn every_variant_builds_a_valid_config() {
        for v in Variant::ALL {
            for h in [Hyper::NO_REDUNDANCY, Hyper::REDUNDANCY] {
                let c = v.config(task(), &h, 3);
                c.validate().unwrap();
                assert_eq!(c.kind, v.kind());
                assert_eq!(c.seed, 3);
            }
        }
    }

    #[test]
    fn modified_real_npu_settings() {
        let c = Variant::RealNpu.config(task(), &Hyper::NO_REDUNDANCY, 0);
        assert_eq!(c.learning_rate, 5e-3);
        assert_eq!(c.init, InitScheme::ConstrainedXavier);
        assert!(c.clip.weights && c.clip.gate);
        match c.regularizers[1] {
            RegSchedule::Discretization(l) => {
                assert_eq!((l.lambda_hat, l.start, l.end), (1.0, 40_000, 50_000));
                assert!(l.targets.gate && l.targets.weights);
            }
            other => panic!("unexpected {other:?}"),
        }
        let b = Variant::RealNpuBaseline.config(task(), &Hyper::NO_REDUNDANCY, 0);
        assert_eq!(b.clip, ClipPolicy::NONE);
        assert_eq!(b.regularizers.len(), 1);
    }

    #[test]
    fn nmru_settings() {
        let c = Variant::Nmru.config(task(), &Hyper::REDUNDANCY, 0);
        assert_eq!(c.grad_norm_clip, Some(1.0));
        assert_eq!(c.learning_rate, 1e-2);
        let v = Variant::NmruVanilla.config(task(), &Hyper::REDUNDANCY, 0);
        assert!(!v.settings.sign_retrieval && v.grad_norm_clip.is_none());
        let n = Variant::Nru.config(task(), &Hyper::REDUNDANCY, 0);
        assert_eq!(n.learning_rate, 1e-3);
    }
}
