//! Zero cycles of sparse Laurent polynomial systems on the algebraic torus
//! and their angle and radius discrepancy from the unit polycircle.

pub mod cycles;
pub mod error;
pub mod et_bounds;
pub mod experiments;
mod homotopy;
pub mod lattice_geometry;
pub mod laurent;
pub mod resultants;
pub mod solver;
pub mod window;

pub use error::{Error, Result};
