//! Semiclassical simulation and closed-form prediction of adaptive
//! homodyne phase tracking with squeezed light.
//!
//! The crate is organized bottom-up:
//! - [`sde`]: seedable noise processes (Wiener, Ornstein-Uhlenbeck,
//!   one-pole colored noise);
//! - [`optics`]: the squeezed-beam homodyne measurement model;
//! - [`estimator`]: the feedback filter, the offline smoother, and the
//!   closed-form MSE theory;
//! - [`lab`]: closed-loop Monte Carlo experiments and parameter sweeps;
//! - [`stats`]: sample statistics shared by the harness and the tests;
//! - [`config`]/[`emit`]: TOML scenario files and CSV/JSON output.

pub mod config;
pub mod emit;
pub mod error;
pub mod estimator;
pub mod lab;
pub mod optics;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
