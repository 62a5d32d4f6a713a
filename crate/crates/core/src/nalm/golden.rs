use super::{ModuleKind, ModuleParams};
use crate::datagen::{Operation, TaskSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// The discrete parameter assignment that solves `task` exactly.
///
/// Irrelevant inputs get weight 0 (and gate 0 for the NPU family).
pub fn golden_params(kind: ModuleKind, task: &TaskSpec) -> Result<ModuleParams> {
    task.validate()?;
    let n = task.input_size;
    // (input index, exponent) pairs describing the target as a power product.
    let terms: Vec<(usize, f64)> = match task.operation {
        Operation::Divide => vec![(task.relevant[0], 1.0), (task.relevant[1], -1.0)],
        Operation::Reciprocal => vec![(task.relevant[0], -1.0)],
        Operation::Multiply => vec![(task.relevant[0], 1.0), (task.relevant[1], 1.0)],
    };
    let unsupported = || Error::Unsupported(format!("no golden {kind} solution for {:?}", task.operation));
    match kind {
        ModuleKind::Nau => Err(unsupported()),
        ModuleKind::Nmu => {
            if terms.iter().any(|&(_, e)| e < 0.0) {
                return Err(unsupported());
            }
            let mut w = Matrix::zeros(n, 1);
            terms.iter().for_each(|&(i, _)| w.set(i, 0, 1.0));
            ModuleParams::new(kind, w, None, None)
        }
        ModuleKind::Nru | ModuleKind::NruSeparateSign => {
            let mut w = Matrix::zeros(n, 1);
            terms.iter().for_each(|&(i, e)| w.set(i, 0, e));
            ModuleParams::new(kind, w, None, None)
        }
        ModuleKind::RealNpu | ModuleKind::Npu => {
            let mut w = Matrix::zeros(n, 1);
            let mut g = vec![0.0; n];
            for &(i, e) in &terms {
                w.set(i, 0, e);
                g[i] = 1.0;
            }
            let imag = (kind == ModuleKind::Npu).then(|| Matrix::zeros(n, 1));
            ModuleParams::new(kind, w, imag, Some(g))
        }
        ModuleKind::Nmru => {
            let mut w = Matrix::zeros(2 * n, 1);
            for &(i, e) in &terms {
                let row = if e < 0.0 { n + i } else { i };
                w.set(row, 0, 1.0);
            }
            ModuleParams::new(kind, w, None, None)
        }
    }
}
