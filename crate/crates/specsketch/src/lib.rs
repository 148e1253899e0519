//! Streaming sketch-based autocorrelation and spectrum estimation: file
//! formats, baseline runners and the `specsketch` command line.

pub mod bench;
pub mod cli;
pub mod io;
pub mod manifest;
pub mod methods;

pub use specsketch_core as core;
