//! Core algorithms for benchmarking regionalized against unified recurrent
//! models on hierarchically stratified time-series data.
//!
//! Everything here is pure computation over in-memory data: the region
//! taxonomy and neighbor algebra, the site/dataset model with normalization,
//! a synthetic bucket-model world generator, an LSTM regressor with exact
//! backpropagation through time, AdaDelta training on masked RMSE, per-site
//! metrics with Wilcoxon signed-rank comparisons, and the scenario builders
//! for the global/local and similar/dissimilar experiment families.
//!
//! File formats, configuration and orchestration live in the companion
//! `synergy-harness` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
mod gemm;
pub mod lstm;
pub mod norm;
pub mod region;
pub mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
