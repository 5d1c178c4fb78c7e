//! Discrete Griffith fracture in two dimensions: nonlinear and linearized
//! energies on cell-wise affine fields with facet cracks, piecewise rigid
//! structure recovery and the uniaxial cleavage experiment.

// Index loops mirror the component formulas; `!(x <= bound)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cleavage;
pub mod density;
pub mod domain;
pub mod energy;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod gamma;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod partition;
pub mod rigid;
pub mod rigidity;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
