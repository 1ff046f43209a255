//! Stationary outflow of a compressible viscous gas through a curved boundary.
//!
//! The crate builds the one-dimensional boundary-layer profile, flattens a
//! graph-shaped boundary with a shear map, marches the perturbation system
//! to a multidirectional steady state on a structured grid and measures the
//! weighted norms used to judge contraction and exponential decay.

pub mod boundary;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod params;
pub mod profile;
pub mod scenario;
pub mod solver;
pub mod stationary;

pub use error::{Error, Result};
pub use params::PhysicalParams;
