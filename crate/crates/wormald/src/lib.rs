//! Std companion to `wormald-core`: rayon-parallel experiment drivers,
//! CSV/JSON report files and the `wormald` command-line front-end.

pub mod cli;
pub mod config;
pub mod parallel;
pub mod report;

pub use wormald_core::{analysis, coupon, mc, ode, process, rng};
pub use wormald_core::{Error, Result};
