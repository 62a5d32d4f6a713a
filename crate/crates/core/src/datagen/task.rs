use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RangeSpec;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    /// `x_i / x_j`
    Divide,
    /// `1 / x_i`
    Reciprocal,
    /// `x_i * x_j`
    Multiply,
}

impl Operation {
    pub fn arity(self) -> usize {
        match self {
            Operation::Reciprocal => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// A synthetic regression task over `input_size` inputs.
///
/// Range lists hold either one shared spec or one spec per input element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub input_size: usize,
    pub operation: Operation,
    pub relevant: Vec<usize>,
    pub interpolation: Vec<RangeSpec>,
    pub extrapolation: Vec<RangeSpec>,
}

impl TaskSpec {
    /// Task with one range shared by every input element.
    pub fn shared(
        input_size: usize,
        operation: Operation,
        relevant: Vec<usize>,
        interpolation: RangeSpec,
        extrapolation: RangeSpec,
    ) -> Self {
        Self {
            input_size,
            operation,
            relevant,
            interpolation: vec![interpolation],
            extrapolation: vec![extrapolation],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 {
            return Err(Error::Config("task input size must be at least 1".into()));
        }
        if self.relevant.len() != self.operation.arity() {
            return Err(Error::Config(format!(
                "{:?} needs {} relevant indices, got {:?}",
                self.operation,
                self.operation.arity(),
                self.relevant
            )));
        }
        if let Some(&bad) = self.relevant.iter().find(|&&i| i >= self.input_size) {
            return Err(Error::Config(format!(
                "relevant index {bad} out of range for {} inputs",
                self.input_size
            )));
        }
        for (name, list) in [
            ("interpolation", &self.interpolation),
            ("extrapolation", &self.extrapolation),
        ] {
            if list.len() != 1 && list.len() != self.input_size {
                return Err(Error::Config(format!(
                    "{name} needs 1 or {} ranges, got {}",
                    self.input_size,
                    list.len()
                )));
            }
            list.iter().try_for_each(RangeSpec::validate)?;
        }
        Ok(())
    }

    fn ranges(&self, split: Split) -> &[RangeSpec] {
        match split {
            Split::Train | Split::Val => &self.interpolation,
            Split::Test => &self.extrapolation,
        }
    }

    pub fn range_for(&self, split: Split, element: usize) -> &RangeSpec {
        let list = self.ranges(split);
        if list.len() == 1 {
            &list[0]
        } else {
            &list[element]
        }
    }

    /// Interpolation label, e.g. `U[1,2)` or `U[-2,-0.1);U[0.1,2)`.
    pub fn range_label(&self) -> String {
        join_labels(&self.interpolation)
    }

    pub fn extrapolation_label(&self) -> String {
        join_labels(&self.extrapolation)
    }

    /// Exact target for one input row.
    pub fn target(&self, x: &[f64]) -> f64 {
        match self.operation {
            Operation::Divide => x[self.relevant[0]] / x[self.relevant[1]],
            Operation::Reciprocal => 1.0 / x[self.relevant[0]],
            Operation::Multiply => x[self.relevant[0]] * x[self.relevant[1]],
        }
    }

    fn denominator_is_zero(&self, x: &[f64]) -> bool {
        match self.operation {
            Operation::Divide => x[self.relevant[1]] == 0.0,
            Operation::Reciprocal => x[self.relevant[0]] == 0.0,
            Operation::Multiply => false,
        }
    }
}

fn join_labels(list: &[RangeSpec]) -> String {
    list.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// Samples `n` rows for `split`. Rows whose denominator is exactly zero are redrawn.
pub fn build_batch<R: Rng + ?Sized>(
    task: &TaskSpec,
    split: Split,
    n: usize,
    rng: &mut R,
) -> Result<(Matrix, Vec<f64>)> {
    task.validate()?;
    let cols = task.input_size;
    let mut x = Matrix::zeros(n, cols);
    let mut y = Vec::with_capacity(n);
    for r in 0..n {
        loop {
            for c in 0..cols {
                let v = task.range_for(split, c).sample_one(rng);
                x.set(r, c, v);
            }
            if !task.denominator_is_zero(x.row(r)) {
                break;
            }
        }
        y.push(task.target(x.row(r)));
    }
    Ok((x, y))
}

/// Writes a dataset as CSV with header `x_0,...,x_{I-1},y`.
pub fn write_dataset_csv<W: Write>(writer: W, x: &Matrix, y: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..x.cols()).map(|i| format!("x_{i}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for (r, target) in y.iter().enumerate() {
        let mut rec: Vec<String> = x.row(r).iter().map(|v| v.to_string()).collect();
        rec.push(target.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
