//! Command-line front end for the stability certification library: bundle
//! selection, verification pipelines, time-scale sweeps, and plot-ready CSV
//! export. See the crate's binary (`lyapcert`) for the user surface.

pub mod commands;
pub mod custom;
pub mod expr;
pub mod report;
