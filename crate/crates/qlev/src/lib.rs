//! Level curves of quasiperiodic functions on the plane.
//!
//! A periodic trigonometric polynomial on T^m (m = 3 or 4) restricted to an
//! affine 2-plane yields a quasiperiodic function of two variables. This crate
//! traces connected components of its level sets, classifies each component as
//! compact or strip-confined open, recovers the integral hyperplane that
//! governs the strip direction, and sweeps direction space to map the zones
//! over which that label is stable.
//!
//! Start with the `examples/` directory: each example exercises one major
//! capability end to end. The `qlev` binary exposes the same pipeline as
//! `trace`, `scan`, `crit`, and `render` subcommands driven by a JSON config.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod error;
pub mod lattice;
pub mod qpfunction;
pub mod render;
pub mod scanner;
pub mod tracer;
pub(crate) mod vecmath;

pub use error::{Error, Result};
