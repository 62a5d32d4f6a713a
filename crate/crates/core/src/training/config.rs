use serde::{Deserialize, Serialize};

use super::loss::LossKind;
use super::optim::OptimizerKind;
use super::regularizer::RegSchedule;
use crate::datagen::TaskSpec;
use crate::error::{Error, Result};
use crate::evaluation::{Precision, ThresholdMode};
use crate::nalm::{ClipPolicy, InitScheme, ModuleKind, ModuleSettings};

pub const DEFAULT_EVAL_EVERY: u64 = 1000;
pub const DEFAULT_EVAL_SAMPLES: usize = 10_000;

/// Everything that determines one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModuleKind,
    pub task: TaskSpec,
    pub iterations: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(default)]
    pub regularizers: Vec<RegSchedule>,
    /// Global gradient-norm cap applied before each step.
    #[serde(default)]
    pub grad_norm_clip: Option<f64>,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub settings: ModuleSettings,
    #[serde(default = "default_init")]
    pub init: InitScheme,
    /// Parameter clamping after each step.
    #[serde(default)]
    pub clip: ClipPolicy,
    /// Adds the learnable `2I` gate to the NMRU.
    #[serde(default)]
    pub nmru_gate: bool,
    #[serde(default = "default_eval_samples")]
    pub val_samples: usize,
    #[serde(default = "default_eval_samples")]
    pub test_samples: usize,
    #[serde(default)]
    pub threshold: ThresholdMode,
    /// Arithmetic for golden thresholds.
    #[serde(default)]
    pub threshold_precision: Precision,
}

fn default_batch_size() -> usize {
    128
}
fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}
fn default_loss() -> LossKind {
    LossKind::Mse
}
fn default_eval_every() -> u64 {
    DEFAULT_EVAL_EVERY
}
fn default_init() -> InitScheme {
    InitScheme::Default
}
fn default_eval_samples() -> usize {
    DEFAULT_EVAL_SAMPLES
}

impl TrainConfig {
    /// A config with the usual defaults: Adam, MSE, batch 128, no penalties,
    /// full clipping, evaluation every 1000 iterations on 10,000 samples.
    pub fn new(kind: ModuleKind, task: TaskSpec, iterations: u64, learning_rate: f64) -> Self {
        Self {
            kind,
            task,
            iterations,
            batch_size: default_batch_size(),
            learning_rate,
            optimizer: default_optimizer(),
            loss: default_loss(),
            regularizers: Vec::new(),
            grad_norm_clip: None,
            eval_every: DEFAULT_EVAL_EVERY,
            seed: 0,
            settings: ModuleSettings::default(),
            init: InitScheme::Default,
            clip: ClipPolicy::ALL,
            nmru_gate: false,
            val_samples: DEFAULT_EVAL_SAMPLES,
            test_samples: DEFAULT_EVAL_SAMPLES,
            threshold: ThresholdMode::Fixed,
            threshold_precision: Precision::F64,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.eval_every == 0 || !self.iterations.is_multiple_of(self.eval_every) {
            return bad(format!(
                "eval_every {} must divide iterations {}",
                self.eval_every, self.iterations
            ));
        }
        let min_batch = if self.loss == LossKind::Pcc { 2 } else { 1 };
        if self.batch_size < min_batch {
            return bad(format!(
                "batch size {} is below {min_batch} for {:?}",
                self.batch_size, self.loss
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if let Some(c) = self.grad_norm_clip {
            if !(c.is_finite() && c > 0.0) {
                return bad(format!("gradient clip {c} must be positive"));
            }
        }
        if self.val_samples == 0 || self.test_samples == 0 {
            return bad("validation and test sets need at least one sample".into());
        }
        if self.nmru_gate && self.kind != ModuleKind::Nmru {
            return bad(format!("nmru_gate is only valid for the NMRU, not {}", self.kind));
        }
        if !(self.settings.eps >= 0.0 && self.settings.eps.is_finite()) {
            return bad(format!("eps {} must be a non-negative number", self.settings.eps));
        }
        for r in &self.regularizers {
            r.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{Operation, RangeSpec};

    fn cfg() -> TrainConfig {
        let r = RangeSpec::uniform(1.0, 2.0);
        TrainConfig::new(
            ModuleKind::Nru,
            TaskSpec::shared(2, Operation::Divide, vec![0, 1], r.clone(), r),
            5000,
            1.0,
        )
    }

    #[test]
    fn validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.iterations = 1500;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.loss = LossKind::Pcc;
        c.batch_size = 1;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.nmru_gate = true;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.iterations = 0;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let c = cfg();
        let text = toml::to_string(&c).unwrap();
        let back: TrainConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        let minimal = r#"
            kind = "nru"
            iterations = 1000
            learning_rate = 1.0
            [task]
            input_size = 2
            operation = "divide"
            relevant = [0, 1]
            interpolation = ["U[1,2)"]
            extrapolation = ["U[2,6)"]
        "#;
        let c: TrainConfig = toml::from_str(minimal).unwrap();
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.eval_every, 1000);
        assert_eq!(c.clip, ClipPolicy::ALL);
    }
}
