//! Systoles and systolic ratios of the four non-orientable flat 3-manifold
//! families, and of singular metrics built as suspensions of a
//! piecewise-spherical Klein bottle.

pub mod cli;
pub mod error;
pub mod flat;
pub mod lattice;
pub mod mesh;
pub mod scan;
pub mod surface;
pub mod suspension;

pub use error::{Error, Result};
