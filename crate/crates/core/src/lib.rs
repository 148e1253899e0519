//! Johnson–Lindenstrauss sketching for time autocorrelation and power
//! spectral density estimation of many-particle time series.
//!
//! The core crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! anything touching the OS live in the `specsketch` crate.

#![no_std]
extern crate alloc;

pub mod error;
pub mod fft;
pub mod matrix;
pub mod rng;
pub mod sketch;
pub mod spectral;
pub mod spline;
pub mod baselines;
pub mod synth;
pub mod metrics;

pub use error::{Error, Result};
pub use matrix::{CellAudit, Matrix};
pub use sketch::{draw, required_dim, SketchKind, SketchOperator, SketchSpec, Transform};
pub use spectral::{
    autocorr_direct, autocorr_from_sketch, bartlett_window, psd_from_autocorr, run_pipeline, AutocorrEstimate,
    MatrixSource, PipelineConfig, PowerSpectrum, SketchedBlock, TimeSeriesSource,
};
