//! Generative forecasting (GenF) for long-range multivariate time series.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the numerical
//! pieces of the pipeline:
//!
//! * [`data`]: imputation, min-max scaling, sliding windows and unit splits.
//! * [`mi`]: the KSG mutual-information estimator and the ITC unit partition.
//! * [`nn`]: a small differentiable kernel (linear, LSTM, attention, layer norm,
//!   Adam) with hand-written gradients.
//! * [`cwgan`]: the conditional Wasserstein GAN used as a one-step generator.
//! * [`predictor`]: the shallow transformer regressor.
//! * [`strategies`]: direct, iterative and generative forecasting runs.
//! * [`theory`]: bias-variance bounds and their Monte-Carlo counterparts.
//! * [`metrics`] and [`synth`]: evaluation metrics and synthetic processes.
//!
//! File formats, the CLI and anything touching the filesystem live in the
//! `genf` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cwgan;
pub mod data;
mod error;
pub(crate) mod math;
pub mod metrics;
pub mod mi;
pub mod nn;
pub mod predictor;
pub mod rng;
pub mod strategies;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
