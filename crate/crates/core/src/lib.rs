//! Mass-lumped P1 finite elements for the Landau-Lifshitz equation on
//! periodic simplicial meshes.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`]: periodic triangulations, the text mesh format and quality checks.
//! * [`assembly`]: mass, stiffness and lumped-mass operators and nodal fields.
//! * [`model`]: parameters, the lower-order field and the discrete energy.
//! * [`stepper`]: the projection (theta) scheme and the midpoint variant.
//! * [`analytic`]: the exact precessing solution and error norms.
//! * [`driver`]: run configuration, convergence sweeps and CSV output.

pub mod analytic;
pub mod assembly;
pub mod driver;
pub mod error;
pub mod krylov;
pub mod mesh;
pub mod model;
pub mod stepper;
pub mod vec3;

pub use error::{Error, Result};
