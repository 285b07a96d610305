//! Conservative spectral solver for the space-inhomogeneous Boltzmann equation.
//!
//! The collision operator is evaluated as a weighted convolution in Fourier
//! space with precomputed weights, then projected onto the discrete collision
//! invariants. Transport is a second-order finite-volume scheme on a
//! nonuniform 1-D grid, split from collisions with Strang splitting. Spatial
//! cells can be spread over several ranks with a two-cell halo exchange.

pub mod bench;
pub mod collision;
pub mod config;
pub mod error;
pub mod grid;
pub mod moments;
pub mod output;
pub mod parallel;
pub mod run;
pub mod scenarios;
pub mod timestepper;
pub mod transport;
pub mod weights;

pub use error::{Error, ErrorCategory, Result};
pub use grid::VelocityGrid;
