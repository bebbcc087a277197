//! Thin-shell garment simulation and inverse estimation of fabric parameters.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: triangle meshes, validation, rest-state precomputation, OBJ I/O.
//! - [`energy`]: StVK membrane, hinge bending, gravity and barrier contact.
//! - [`sim`]: implicit-Euler stepping with Dirichlet boundary vertices.
//! - [`estimate`]: finite-difference gradients of a simulation loss plus Adam.
//! - [`track`]: per-frame mesh tracking with isometry and normal regularizers.
//! - [`skinning`]: linear blend skinning and skin-weight transfer.
//! - [`synthetic`]: ground-truth scenarios for testing the whole pipeline.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod energy;
pub mod error;
pub mod estimate;
pub mod geom;
pub mod gradcheck;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod optim;
pub mod sim;
pub mod skinning;
pub mod synthetic;
pub mod track;

pub use energy::{ColliderSet, ModelConstants, PhysicsParams};
pub use error::{Error, Result};
pub use geom::Vec3;
pub use mesh::{MeshSequence, TriMesh};
