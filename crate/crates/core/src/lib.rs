//! Differential-equation method for discrete stochastic processes.
//!
//! A process is described by a [`ProcessSpec`]: a drift function `f(s, z)`
//! giving the expected one-step change of each tracked coordinate as a
//! function of scaled time `s = t/n` and scaled state `z = Y/n`, together
//! with an increment bound, a magnitude bound and an open domain box on
//! which the drift is Lipschitz. Under those hypotheses the scaled
//! trajectory `Y_t / n` stays uniformly close to the solution of
//! `dz/ds = f(s, z)`.
//!
//! The crate provides:
//!
//! - [`process`]: the process abstraction, domain membership and an
//!   empirical Lipschitz estimate;
//! - [`ode`]: a fixed-step fourth-order Runge–Kutta engine with domain-exit
//!   detection on a shared sampling [`Grid`];
//! - [`coupon`]: the coupon-collecting process, its closed-form fluid limit
//!   `z_i(s) = s^i e^{-s} / i!` and an exact inclusion–exclusion oracle for
//!   the cover-time tail;
//! - [`mc`]: seeded, reproducible simulation on the ODE grid plus empirical
//!   checks of the bounded-increment, drift and Lipschitz hypotheses;
//! - [`analysis`]: sup-norm deviation, scaling in `n` and the cover-time
//!   threshold experiment.
//!
//! The crate is `no_std` and only needs `alloc`. IO, parallel drivers and
//! the command-line front-end live in the `wormald` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod coupon;
pub mod error;
pub mod mc;
pub mod ode;
pub mod process;
pub mod rng;

pub use error::{Error, Result};
pub use ode::{Grid, IntegratorConfig, Trajectory};
pub use process::{DomainBox, Drift, ProcessSpec, ScaledPoint};
