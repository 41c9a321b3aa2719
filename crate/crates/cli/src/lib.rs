//! Configuration parsing, run orchestration and CSV emission behind the
//! `rydeit` binary; exposed as a library so integration tests can drive the
//! same code paths.

pub mod config;
pub mod output;
pub mod recipes;
pub mod run;
