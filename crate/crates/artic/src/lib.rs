//! Discovers the articulated structure of multi-part objects through a
//! sequence of simulated interactions, and emits a complete articulated CAD
//! model (description file plus per-part meshes) along with evaluation
//! metrics.
//!
//! The pipeline alternates interaction and perception: render multi-view
//! depth of the current state, fuse into a point cloud and voxel grid, pick
//! a hold+push action, apply it quasi-statically, detect the moved region,
//! track part labels persistently across steps, and estimate the joint that
//! explains each motion. After the interaction budget is spent, per-part
//! meshes are extracted from the accumulated part-probability volume and
//! assembled into an output model.

pub mod error;
pub mod grid;
pub mod model;

pub use error::{Error, Result};
