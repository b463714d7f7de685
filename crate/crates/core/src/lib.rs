//! Discrete element engine for rigid, arbitrarily shaped particles.
//!
//! Every particle is a clump of overlapping primary spheres fixed in its body
//! frame. Contact detection and forces only ever see spheres, walls and
//! triangles; optional surface (triangle) and cell (tetrahedral) meshes ride
//! along with each particle's pose for coupling with other solvers.
//!
//! The pipeline per time step is
//! wall motion, insertion, drift, neighbor maintenance, narrow phase,
//! Hertz-Mindlin forces, kick. See [`sim::Simulation`].

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod contact;
pub mod error;
pub mod force;
pub mod integrate;
pub mod neighbor;
pub mod output;
pub mod presets;
pub mod shape;
pub mod sim;
pub mod world;

pub use error::{Error, Result};

/// World and body frame vectors, SI units.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Orientation of a body frame relative to the world frame.
pub type Rotation = nalgebra::UnitQuaternion<f64>;
