//! Command-line front end for the optomech library: single working points,
//! two-dimensional sweeps with built-in figure recipes, spectra, and
//! Monte-Carlo validation runs.

pub mod commands;
pub mod config;
pub mod output;
pub mod recipes;
pub mod sweep;
