//! Data-driven finite-element magnetostatics in two dimensions.
//!
//! The solver never evaluates a constitutive law inside the iron. Instead it
//! alternates between projecting a field state onto the set of states that
//! satisfy the magnetostatic equations (two weighted Poisson solves for the
//! vector potential and a Lagrange multiplier) and projecting onto the set of
//! measured `(H, B)` samples. A conventional damped Newton solver on the
//! Brauer law provides the reference solution the data-driven result is
//! measured against.
//!
//! Module map:
//!
//! * [`geometry`] / [`mesh`]: E-I inductor cross-section and its structured triangulation.
//! * [`material`]: measurement sets, Brauer law, nearest-state search, weighting factors.
//! * [`fem`]: P1 assembly, Dirichlet elimination, preconditioned CG.
//! * [`dd`]: the data-driven fixed-point iteration.
//! * [`newton`]: the reference Newton solver.
//! * [`metrics`]: energy mismatch, air-gap energy, log-log slope fits.
//! * [`export`]: CSV and legacy VTK writers.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the element formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dd;
pub mod error;
pub mod export;
pub mod fem;
pub mod geometry;
pub mod material;
pub mod mesh;
pub mod metrics;
pub mod newton;
mod vec2;

pub use dd::{
    current_density, dd_initialize, dd_iterate, dd_run, dd_run_from, distance_functional,
    ConvergenceLog, DdConfig, DdSolution, DdState, Excitation, IterationRecord, WeightMode,
};
pub use error::{Error, Result};
pub use fem::{DofMap, DofVector, SparseSpd};
pub use geometry::{default_geometry, InductorGeometry, Rect, Region, RegionLayout};
pub use material::{
    BrauerConstants, ElementState, MaterialDataSet, Provenance, SearchBackend, WeightPair,
};
pub use mesh::{triangulate, Mesh, MeshOptions};
pub use newton::{newton_solve, MaterialLaw, NewtonOptions, ReferenceSolution};
pub use vec2::Vec2;

/// Vacuum permeability in H/m.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Vacuum reluctivity in m/H.
pub const NU0: f64 = 1.0 / MU0;
