//! Catalogue of the experiment settings and their range sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::variant::{Hyper, Variant};
use crate::datagen::{Operation, RangeSpec, TaskSpec};
use crate::error::{Error, Result};
use crate::evaluation::{Precision, ThresholdMode};

/// Division ranges `(interpolation, extrapolation)` for the single-module tasks.
pub const UNIFORM_RANGES: [(&str, &str); 9] = [
    ("U[-20,-10)", "U[-40,-20)"),
    ("U[-2,-1)", "U[-6,-2)"),
    ("U[-1.2,-1.1)", "U[-6.1,-1.2)"),
    ("U[-0.2,-0.1)", "U[-2,-0.2)"),
    ("U[-2,2)", "U[[-6,-2),[2,6)]"),
    ("U[0.1,0.2)", "U[0.2,2)"),
    ("U[1,2)", "U[2,6)"),
    ("U[1.1,1.2)", "U[1.2,6)"),
    ("U[10,20)", "U[20,40)"),
];

/// Truncated normal, Benford and wide uniform ranges.
pub const DISTRIBUTION_RANGES: [(&str, &str); 6] = [
    ("TN(-1,3)[-5,10)", "TN(-10,3)[-15,-5)"),
    ("TN(0,1)[-5,5)", "TN(10,1)[5,15)"),
    ("TN(1,3)[-10,5)", "TN(10,3)[5,15)"),
    ("B[10,100)", "B[100,1000)"),
    ("U[-100,100)", "U[[-200,-100),[100,200)]"),
    ("U[-50,50)", "U[[-100,-50),[50,100)]"),
];

/// Per-element `[(interp a, interp b), (extrap a, extrap b)]` for `a / b`.
pub const MIXED_SIGN_RANGES: [[(&str, &str); 2]; 5] = [
    [("U[-2,-0.1)", "U[0.1,2)"), ("U[-6,-2)", "U[2,6)")],
    [("U[-2,-1)", "U[1,2)"), ("U[-6,-2)", "U[2,6)")],
    [("U[-2,2)", "U[-2,2)"), ("U[-6,-2)", "U[2,6)")],
    [("U[0.1,2)", "U[-2,-0.1)"), ("U[2,6)", "U[-6,-2)")],
    [("U[1,2)", "U[-2,-1)"), ("U[2,6)", "U[-6,-2)")],
];

/// Upper bounds of the `U[0, ub)` ranges for division by small values.
pub const SMALL_UPPER_BOUNDS: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    NoRedundancy,
    Redundancy,
    MixedSign,
    DivBySmall,
    DistributionsIn2,
    DistributionsIn10,
    /// No-redundancy and redundancy settings together at 25 seeds.
    FullScale,
}

/// One task of a preset with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetTask {
    /// Group label in results, usually the interpolation range.
    pub label: String,
    pub task: TaskSpec,
    pub hyper: Hyper,
    pub threshold: ThresholdMode,
    pub precision: Precision,
    /// Drop every regularizer from the variant configs.
    pub no_reg: bool,
}

impl PresetTask {
    fn plain(task: TaskSpec, hyper: Hyper) -> Self {
        Self {
            label: task.range_label(),
            task,
            hyper,
            threshold: ThresholdMode::Fixed,
            precision: Precision::F64,
            no_reg: false,
        }
    }

    /// Whether a user-supplied range filter selects this task.
    pub fn matches(&self, filter: &str) -> bool {
        let f: String = filter.chars().filter(|c| !c.is_whitespace()).collect();
        f == self.label || f == self.task.range_label()
    }
}

fn range(s: &str) -> RangeSpec {
    s.parse().expect("preset range notation is valid")
}

fn divide_tasks(ranges: &[(&str, &str)], input_size: usize) -> Vec<TaskSpec> {
    ranges
        .iter()
        .map(|(i, e)| TaskSpec::shared(input_size, Operation::Divide, vec![0, 1], range(i), range(e)))
        .collect()
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::NoRedundancy,
        Preset::Redundancy,
        Preset::MixedSign,
        Preset::DivBySmall,
        Preset::DistributionsIn2,
        Preset::DistributionsIn10,
        Preset::FullScale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::NoRedundancy => "no_redundancy",
            Preset::Redundancy => "redundancy",
            Preset::MixedSign => "mixed_sign",
            Preset::DivBySmall => "div_by_small",
            Preset::DistributionsIn2 => "distributions_in2",
            Preset::DistributionsIn10 => "distributions_in10",
            Preset::FullScale => "full_scale",
        }
    }

    pub fn default_variants(self) -> Vec<Variant> {
        match self {
            Preset::MixedSign => vec![Variant::RealNpu],
            Preset::DivBySmall => vec![Variant::RealNpu, Variant::Nru, Variant::Nmru],
            _ => vec![Variant::RealNpuBaseline, Variant::RealNpu, Variant::Nru, Variant::Nmru],
        }
    }

    pub fn default_seed_count(self) -> usize {
        25
    }

    pub fn tasks(self) -> Vec<PresetTask> {
        let plain =
            |tasks: Vec<TaskSpec>, hyper: Hyper| tasks.into_iter().map(|t| PresetTask::plain(t, hyper)).collect();
        match self {
            Preset::NoRedundancy => plain(divide_tasks(&UNIFORM_RANGES, 2), Hyper::NO_REDUNDANCY),
            Preset::Redundancy => plain(divide_tasks(&UNIFORM_RANGES, 10), Hyper::REDUNDANCY),
            Preset::DistributionsIn2 => plain(divide_tasks(&DISTRIBUTION_RANGES, 2), Hyper::NO_REDUNDANCY),
            Preset::DistributionsIn10 => plain(divide_tasks(&DISTRIBUTION_RANGES, 10), Hyper::REDUNDANCY),
            Preset::MixedSign => MIXED_SIGN_RANGES
                .iter()
                .map(|[(ia, ib), (ea, eb)]| {
                    let task = TaskSpec {
                        input_size: 2,
                        operation: Operation::Divide,
                        relevant: vec![0, 1],
                        interpolation: vec![range(ia), range(ib)],
                        extrapolation: vec![range(ea), range(eb)],
                    };
                    PresetTask::plain(task, Hyper::NO_REDUNDANCY)
                })
                .collect(),
            Preset::DivBySmall => {
                let mut out = Vec::new();
                let kinds: [(&str, usize, Operation, Vec<usize>, u64); 3] = [
                    ("reciprocal-in1", 1, Operation::Reciprocal, vec![0], 5_000),
                    ("reciprocal-in2", 2, Operation::Reciprocal, vec![0], 50_000),
                    ("divide-in2", 2, Operation::Divide, vec![0, 1], 50_000),
                ];
                for (name, size, op, relevant, iterations) in kinds {
                    for ub in SMALL_UPPER_BOUNDS {
                        let r = RangeSpec::uniform(0.0, ub);
                        let task = TaskSpec::shared(size, op, relevant.clone(), r.clone(), r);
                        out.push(PresetTask {
                            label: format!("{name}:{}", task.range_label()),
                            task,
                            hyper: Hyper {
                                iterations,
                                ..Hyper::NO_REDUNDANCY
                            },
                            threshold: ThresholdMode::GoldenPlusEps,
                            precision: Precision::F32,
                            no_reg: iterations == 5_000,
                        });
                    }
                }
                out
            }
            Preset::FullScale => {
                let mut out = Vec::new();
                for (prefix, preset) in [("in2", Preset::NoRedundancy), ("in10", Preset::Redundancy)] {
                    for mut t in preset.tasks() {
                        t.label = format!("{prefix}:{}", t.label);
                        out.push(t);
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown preset {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_task_is_valid() {
        for p in Preset::ALL {
            let tasks = p.tasks();
            assert!(!tasks.is_empty());
            for t in &tasks {
                t.task.validate().unwrap();
                for v in p.default_variants() {
                    let c = v.config(t.task.clone(), &t.hyper, 0);
                    c.validate().unwrap();
                }
            }
            let mut labels: Vec<_> = tasks.iter().map(|t| t.label.clone()).collect();
            labels.sort();
            labels.dedup();
            assert_eq!(labels.len(), tasks.len(), "{p}: labels must be unique");
        }
    }

    #[test]
    fn sizes() {
        assert_eq!(Preset::NoRedundancy.tasks().len(), 9);
        assert_eq!(Preset::DivBySmall.tasks().len(), 15);
        assert_eq!(Preset::FullScale.tasks().len(), 18);
        let r = Preset::Redundancy.tasks();
        assert!(r
            .iter()
            .all(|t| t.task.input_size == 10 && t.hyper.iterations == 100_000));
    }

    #[test]
    fn range_filters() {
        let tasks = Preset::NoRedundancy.tasks();
        let hits: Vec<_> = tasks.iter().filter(|t| t.matches("U[1, 2)")).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].task.extrapolation_label(), "U[2,6)");
        let small = Preset::DivBySmall.tasks();
        assert_eq!(small.iter().filter(|t| t.matches("U[0,0.1)")).count(), 3);
        assert_eq!(small.iter().filter(|t| t.matches("divide-in2:U[0,0.1)")).count(), 1);
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert_eq!("no-redundancy".parse::<Preset>().unwrap(), Preset::NoRedundancy);
    }
}
