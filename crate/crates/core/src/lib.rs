//! Neural arithmetic modules for learning division.
//!
//! The crate implements the Real NPU, NPU, NRU (including the separate-sign
//! variant), NMRU, NAU and NMU with analytic gradients, trains them on
//! synthetic division tasks, and evaluates them with success-rate,
//! convergence and sparsity metrics.

pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod gradcheck;
pub mod landscape;
pub mod matrix;
pub mod nalm;
pub mod training;

pub use error::{Error, Result};
pub use matrix::Matrix;
