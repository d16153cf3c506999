//! Reflected step-2 solver and refinement studies.

pub mod field;
pub mod scheme;
pub mod study;

pub use field::{Smoothness, VectorField};
pub use scheme::{
    remainder_diagnostics, solve_reflected, solve_reflected_orthant, solve_unreflected,
    RemainderDiagnostics, SolveOptions, SolveResult, GEOMETRIC_TOL, LOCAL_SPAN,
};
pub use study::{
    convergence_orders, stability_probe, sup_distance, wong_zakai_study, StabilityProbe,
    WongZakaiLevel, WongZakaiReport,
};
