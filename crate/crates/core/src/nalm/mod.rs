//! Neural arithmetic logic modules.
//!
//! Every module maps a batch `x` (`N x I`) to `y` (`N x O`) through a
//! multiplicative or additive rule parameterised by a weight matrix whose
//! discrete values encode selection and operation. The forward pass records a
//! [`ForwardCache`] from which [`backward`] produces exact analytic gradients.

mod additive;
mod golden;
mod init;
mod nmru;
mod npu;
mod predict;
mod product;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use golden::golden_params;
pub use init::{init_params, init_params_with, xavier_bound, InitScheme};
pub use predict::{predict, predict_row};
pub use product::{nru_weight_grad_closed_form, TANH_SCALE};

/// Default stability term added to `|x|` (Real NPU) and to the reciprocal
/// denominators (NMRU).
pub const DEFAULT_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModuleKind {
    RealNpu,
    Npu,
    Nru,
    NruSeparateSign,
    Nmru,
    Nau,
    Nmu,
}

impl ModuleKind {
    pub const ALL: [ModuleKind; 7] = [
        ModuleKind::RealNpu,
        ModuleKind::Npu,
        ModuleKind::Nru,
        ModuleKind::NruSeparateSign,
        ModuleKind::Nmru,
        ModuleKind::Nau,
        ModuleKind::Nmu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModuleKind::RealNpu => "real-npu",
            ModuleKind::Npu => "npu",
            ModuleKind::Nru => "nru",
            ModuleKind::NruSeparateSign => "nru-sep-sign",
            ModuleKind::Nmru => "nmru",
            ModuleKind::Nau => "nau",
            ModuleKind::Nmu => "nmu",
        }
    }

    /// Number of weight rows for a raw input of size `in_size`.
    pub fn weight_rows(self, in_size: usize) -> usize {
        match self {
            ModuleKind::Nmru => 2 * in_size,
            _ => in_size,
        }
    }

    /// Legal closed interval for weight entries.
    pub fn weight_range(self) -> (f64, f64) {
        match self {
            ModuleKind::Nmru | ModuleKind::Nmu => (0.0, 1.0),
            _ => (-1.0, 1.0),
        }
    }

    /// Discrete weight values that encode an exact operation.
    pub fn discrete_weights(self) -> &'static [f64] {
        match self {
            ModuleKind::Nmru | ModuleKind::Nmu => &[0.0, 1.0],
            _ => &[-1.0, 0.0, 1.0],
        }
    }

    pub fn has_gate(self) -> bool {
        matches!(self, ModuleKind::RealNpu | ModuleKind::Npu)
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .or(match norm.as_str() {
                "realnpu" => Some(ModuleKind::RealNpu),
                "nru-separate-sign" | "nrusep" => Some(ModuleKind::NruSeparateSign),
                _ => None,
            })
            .ok_or_else(|| Error::Parse(format!("unknown module kind `{s}`")))
    }
}

/// Training mode switches the NRU absolute value to its smooth `tanh`
/// approximation; evaluation uses the exact absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Training,
    Eval,
}

/// Non-learnable settings of a module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModuleSettings {
    /// Added to `|x|` inside the Real NPU relevance gate and to the NMRU
    /// reciprocal denominators. Zero is allowed.
    pub eps: f64,
    /// Scale inside `tanh(scale * w)^2`, the NRU training-mode absolute value.
    pub tanh_scale: f64,
    /// NMRU cosine sign retrieval. Off gives the magnitude-only product.
    pub sign_retrieval: bool,
}

impl Default for ModuleSettings {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            tanh_scale: TANH_SCALE,
            sign_retrieval: true,
        }
    }
}

/// Learnable state of one module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleParams {
    pub kind: ModuleKind,
    /// `I x O`, or `2I x O` for the NMRU.
    pub weights: Matrix,
    /// Imaginary weights, NPU only.
    pub imag: Option<Matrix>,
    /// Relevance gate: length `I` for the (Real) NPU, `2I` for the gated NMRU ablation.
    pub gate: Option<Vec<f64>>,
}

impl ModuleParams {
    /// Assembles parameters, checking shapes against the kind.
    pub fn new(kind: ModuleKind, weights: Matrix, imag: Option<Matrix>, gate: Option<Vec<f64>>) -> Result<Self> {
        let p = Self {
            kind,
            weights,
            imag,
            gate,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters holding only a weight matrix.
    pub fn with_weights(kind: ModuleKind, weights: Matrix) -> Result<Self> {
        let gate = kind.has_gate().then(|| vec![1.0; weights.rows()]);
        let imag = (kind == ModuleKind::Npu).then(|| Matrix::zeros(weights.rows(), weights.cols()));
        Self::new(kind, weights, imag, gate)
    }

    fn validate(&self) -> Result<()> {
        let (rows, cols) = self.weights.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("empty weight matrix".into()));
        }
        if self.kind == ModuleKind::Nmru && rows % 2 != 0 {
            return Err(Error::Dimension(format!(
                "NMRU weights need an even row count, got {rows}"
            )));
        }
        match (&self.imag, self.kind) {
            (Some(_), k) if k != ModuleKind::Npu => {
                return Err(Error::Dimension(format!("{k} has no imaginary weights")))
            }
            (None, ModuleKind::Npu) => return Err(Error::Dimension("NPU requires imaginary weights".into())),
            (Some(im), _) if im.shape() != self.weights.shape() => {
                return Err(Error::Dimension("imaginary weights shape mismatch".into()))
            }
            _ => {}
        }
        match (&self.gate, self.kind) {
            (None, k) if k.has_gate() => return Err(Error::Dimension(format!("{k} requires a gate vector"))),
            (Some(g), k) if g.len() != rows => {
                return Err(Error::Dimension(format!(
                    "{k} gate has length {} but weights have {rows} rows",
                    g.len()
                )))
            }
            (Some(_), k) if !k.has_gate() && k != ModuleKind::Nmru => {
                return Err(Error::Dimension(format!("{k} has no gate")))
            }
            _ => {}
        }
        Ok(())
    }

    /// Raw input size `I` (half the weight rows for the NMRU).
    pub fn in_size(&self) -> usize {
        match self.kind {
            ModuleKind::Nmru => self.weights.rows() / 2,
            _ => self.weights.rows(),
        }
    }

    pub fn out_size(&self) -> usize {
        self.weights.cols()
    }

    /// Same shapes, every entry zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self {
            kind: self.kind,
            weights: Matrix::zeros(self.weights.rows(), self.weights.cols()),
            imag: self.imag.as_ref().map(|m| Matrix::zeros(m.rows(), m.cols())),
            gate: self.gate.as_ref().map(|g| vec![0.0; g.len()]),
        }
    }

    /// Flat views of every learnable tensor in a fixed order: weights, imag, gate.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.weights.as_slice()];
        if let Some(im) = &self.imag {
            out.push(im.as_slice());
        }
        if let Some(g) = &self.gate {
            out.push(g.as_slice());
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.weights.as_mut_slice()];
        if let Some(im) = &mut self.imag {
            out.push(im.as_mut_slice());
        }
        if let Some(g) = &mut self.gate {
            out.push(g.as_mut_slice());
        }
        out
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors().into_iter().flat_map(|t| t.iter().copied())
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_values() {
            return Err(Error::Dimension(format!(
                "expected {} parameter values, got {}",
                self.num_values(),
                flat.len()
            )));
        }
        let mut rest = flat;
        for t in self.tensors_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// Global L2 norm over every learnable entry.
    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Clamps entries to the ranges selected by `policy`.
    pub fn clip_with(&mut self, policy: ClipPolicy) {
        let (lo, hi) = self.kind.weight_range();
        if policy.weights {
            self.weights.map_inplace(|v| v.clamp(lo, hi));
        }
        if policy.imag {
            if let Some(im) = &mut self.imag {
                im.map_inplace(|v| v.clamp(-1.0, 1.0));
            }
        }
        if policy.gate {
            if let Some(g) = &mut self.gate {
                g.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            }
        }
    }
}

/// Which tensors are clamped after an optimiser step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClipPolicy {
    pub weights: bool,
    pub imag: bool,
    pub gate: bool,
}

impl ClipPolicy {
    pub const ALL: ClipPolicy = ClipPolicy {
        weights: true,
        imag: true,
        gate: true,
    };
    pub const NONE: ClipPolicy = ClipPolicy {
        weights: false,
        imag: false,
        gate: false,
    };
}

impl Default for ClipPolicy {
    fn default() -> Self {
        Self::ALL
    }
}

/// Clamps every entry to its kind's legal range. Idempotent.
pub fn clip_params(params: &ModuleParams) -> ModuleParams {
    let mut out = params.clone();
    out.clip_with(ClipPolicy::ALL);
    out
}

/// Intermediates retained by [`forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub mode: Mode,
    pub input: Matrix,
    pub output: Matrix,
    pub(crate) inner: CacheInner,
}

#[derive(Debug, Clone)]
pub(crate) enum CacheInner {
    Additive,
    Product(product::ProductCache),
    Npu(npu::NpuCache),
    Nmru(nmru::NmruCache),
}

/// Gradients of `sum(grad_y * y)` with respect to parameters and input.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: ModuleParams,
    pub input: Matrix,
}

/// Runs the module on a batch, recording what [`backward`] needs.
///
/// Rejects non-finite inputs; NMRU additionally rejects non-finite reciprocal
/// augmentations (`x == -eps`). Outputs themselves may be non-finite (e.g. the
/// NRU dividing by an exact zero) and are returned as is.
pub fn forward(
    params: &ModuleParams,
    settings: &ModuleSettings,
    x: &Matrix,
    mode: Mode,
) -> Result<(Matrix, ForwardCache)> {
    params.validate()?;
    if x.cols() != params.in_size() {
        return Err(Error::Dimension(format!(
            "{} expects {} input columns, got {}",
            params.kind,
            params.in_size(),
            x.cols()
        )));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("input batch".into()));
    }
    let (y, inner) = match params.kind {
        ModuleKind::Nau => (additive::forward(params, x), CacheInner::Additive),
        ModuleKind::Nmu | ModuleKind::Nru | ModuleKind::NruSeparateSign => {
            let (y, c) = product::forward(params, settings, x, mode);
            (y, CacheInner::Product(c))
        }
        ModuleKind::RealNpu | ModuleKind::Npu => {
            let (y, c) = npu::forward(params, settings, x);
            (y, CacheInner::Npu(c))
        }
        ModuleKind::Nmru => {
            let (y, c) = nmru::forward(params, settings, x)?;
            (y, CacheInner::Nmru(c))
        }
    };
    let cache = ForwardCache {
        mode,
        input: x.clone(),
        output: y.clone(),
        inner,
    };
    Ok((y, cache))
}

/// Exact analytic gradients of the forward rule, summed over the batch.
pub fn backward(
    params: &ModuleParams,
    settings: &ModuleSettings,
    cache: &ForwardCache,
    grad_y: &Matrix,
) -> Result<Gradients> {
    if grad_y.shape() != cache.output.shape() {
        return Err(Error::Dimension(format!(
            "grad_y is {:?} but the cached output is {:?}",
            grad_y.shape(),
            cache.output.shape()
        )));
    }
    if cache.input.cols() != params.in_size() || cache.output.cols() != params.out_size() {
        return Err(Error::Dimension("cache does not match parameters".into()));
    }
    let grads = match (&cache.inner, params.kind) {
        (CacheInner::Additive, ModuleKind::Nau) => additive::backward(params, cache, grad_y),
        (CacheInner::Product(c), ModuleKind::Nmu | ModuleKind::Nru | ModuleKind::NruSeparateSign) => {
            product::backward(params, settings, cache, c, grad_y)
        }
        (CacheInner::Npu(c), ModuleKind::RealNpu | ModuleKind::Npu) => {
            npu::backward(params, settings, cache, c, grad_y)
        }
        (CacheInner::Nmru(c), ModuleKind::Nmru) => nmru::backward(params, settings, cache, c, grad_y),
        _ => return Err(Error::Dimension("cache was produced by a different module kind".into())),
    };
    Ok(grads)
}

/// Products of all factors except each one, via prefix/suffix products.
pub(crate) fn leave_one_out(factors: &[f64], out: &mut [f64]) {
    let n = factors.len();
    let mut acc = 1.0;
    for i in 0..n {
        out[i] = acc;
        acc *= factors[i];
    }
    acc = 1.0;
    for i in (0..n).rev() {
        out[i] *= acc;
        acc *= factors[i];
    }
}

/// `+1` for `x >= 0`, `-1` otherwise.
#[inline]
pub(crate) fn sign_nonneg(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Derivative of `|x|` with the subgradient 0 at 0.
#[inline]
pub(crate) fn abs_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leave_one_out_handles_zero_factors() {
        let mut out = [0.0; 4];
        leave_one_out(&[2.0, 0.0, 3.0, 5.0], &mut out);
        assert_eq!(out, [0.0, 30.0, 0.0, 0.0]);
        leave_one_out(&[2.0, 4.0, 3.0, 5.0], &mut out);
        assert_eq!(out, [60.0, 30.0, 40.0, 24.0]);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModuleKind::ALL {
            assert_eq!(k.name().parse::<ModuleKind>().unwrap(), k);
        }
        assert!("nalu".parse::<ModuleKind>().is_err());
    }

    #[test]
    fn clip_examples() {
        let p = ModuleParams::with_weights(ModuleKind::RealNpu, Matrix::column(&[1.7, -0.2])).unwrap();
        assert_eq!(clip_params(&p).weights.as_slice(), &[1.0, -0.2]);

        let p = ModuleParams::with_weights(ModuleKind::Nmru, Matrix::column(&[-0.3, 0.2, 1.0, 1.4])).unwrap();
        assert_eq!(clip_params(&p).weights.as_slice(), &[0.0, 0.2, 1.0, 1.0]);

        let p = ModuleParams::with_weights(ModuleKind::Nru, Matrix::column(&[0.4])).unwrap();
        assert_eq!(clip_params(&p).weights.as_slice(), &[0.4]);
    }

    #[test]
    fn clip_gate_and_imag_ranges() {
        let mut p = ModuleParams::with_weights(ModuleKind::Npu, Matrix::column(&[0.3, -2.0])).unwrap();
        p.gate = Some(vec![-0.5, 1.5]);
        p.imag = Some(Matrix::column(&[3.0, -3.0]));
        let c = clip_params(&p);
        assert_eq!(c.gate.as_deref().unwrap(), &[0.0, 1.0]);
        assert_eq!(c.imag.as_ref().unwrap().as_slice(), &[1.0, -1.0]);
        assert_eq!(c.weights.as_slice(), &[0.3, -1.0]);
    }

    #[test]
    fn shape_validation() {
        assert!(ModuleParams::with_weights(ModuleKind::Nmru, Matrix::column(&[0.5; 3])).is_err());
        let p = ModuleParams::with_weights(ModuleKind::Nmu, Matrix::column(&[0.5, 0.5])).unwrap();
        let bad = Matrix::from_rows(&[[1.0, 2.0, 3.0]]);
        assert!(forward(&p, &ModuleSettings::default(), &bad, Mode::Eval).is_err());
        let nan = Matrix::from_rows(&[[1.0, f64::NAN]]);
        assert!(matches!(
            forward(&p, &ModuleSettings::default(), &nan, Mode::Eval),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn backward_rejects_mismatched_shapes() {
        let p = ModuleParams::with_weights(ModuleKind::Nmu, Matrix::column(&[0.5, 0.5])).unwrap();
        let s = ModuleSettings::default();
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let (_, cache) = forward(&p, &s, &x, Mode::Training).unwrap();
        assert!(backward(&p, &s, &cache, &Matrix::zeros(3, 1)).is_err());
        let nau = ModuleParams::with_weights(ModuleKind::Nau, Matrix::column(&[0.5, 0.5])).unwrap();
        assert!(backward(&nau, &s, &cache, &Matrix::zeros(2, 1)).is_err());
    }
}
