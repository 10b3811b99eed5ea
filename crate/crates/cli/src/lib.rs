//! Configuration loading, figure presets, the parallel sweep engine and CSV
//! output for the `optomech` command-line tool.

pub mod config;
pub mod output;
pub mod presets;
pub mod sweep;
