//! Numerical toolkit for one-dimensional and orthant-reflected rough
//! differential equations on a time grid.
//!
//! - [`roughpath`]: level-2 lifts, Chen composition, geometricity checks.
//! - [`variation`]: p-variation by dynamic programming, controls.
//! - [`skorohod`]: reflection maps and the a-priori measure bound.
//! - [`sewing`]: discrete sewing and the rough Gronwall bound.
//! - [`solver`]: the reflected step-2 scheme and refinement studies.

pub mod error;
pub mod grid;
pub mod roughpath;
pub mod sewing;
pub mod skorohod;
pub mod solver;
pub mod variation;

pub use error::{Error, Result};
pub use grid::{GridPath, PairTable};
pub use roughpath::{brownian_driver, Increment, RoughPathGrid};
pub use variation::{Control, PVarResult};
