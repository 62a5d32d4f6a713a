use crate::nalm::ModuleParams;

/// Distance of one entry from the nearest acceptable discrete value,
/// `min(|w|, |1 - |w||)`.
#[inline]
pub fn discretization_distance(w: f64) -> f64 {
    let a = w.abs();
    a.min((1.0 - a).abs())
}

/// Largest [`discretization_distance`] over every learnable entry
/// (weights, imaginary weights and gates).
pub fn sparsity_error(params: &ModuleParams) -> f64 {
    sparsity_error_of(params.values())
}

pub fn sparsity_error_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().map(discretization_distance).fold(0.0, f64::max)
}

/// Mean squared error, accumulated in `f64`.
pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    let n = target.len().max(1) as f64;
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n
}
