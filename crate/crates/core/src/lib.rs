//! Jost solutions, WKB spectral densities and dispersive propagator kernels for
//! one-dimensional Schrödinger operators with slowly decaying attractive potentials.

pub mod cli;
pub mod config;
pub mod error;
pub mod jet;
pub mod jost;
pub mod liouville;
pub mod ode;
pub mod oracle;
pub mod oscillatory;
pub mod potential;
pub mod propagator;
pub mod quad;
pub mod spectral;
pub mod spline;

pub use error::{Error, Result};
