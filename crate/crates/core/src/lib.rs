//! Shared grid types, geometry construction and field reductions.
//!
//! Everything downstream (the reference solver, dataset generation, the
//! neural surrogates and their evaluation harness) operates on the same
//! uniform collocated grid with periodic horizontal boundaries. This crate
//! owns those types plus the periodic-index arithmetic and the mask/centroid
//! reductions they all share.
//!
//! All types are immutable values after construction and all operations are
//! pure functions, so they can be copied freely between worker threads.

pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod measures;
pub mod par;
pub mod rng;

pub use error::{CoreError, Result};
pub use geometry::{
    build_geometry_mask, resample_mask, CellLabel, GeometryMask, ObstacleSpec, ScenarioParams,
    MAX_PORE_RADIUS, MIN_PORE_RADIUS, MIN_WALL_GAP, TUBE_HEIGHT, TUBE_TOP, WALL_BOTTOM,
};
pub use grid::{shift_horizontal, GridSpec, ScalarField, VectorField};
pub use measures::{droplet_center, oil_mass};
pub use rng::SplitMix64;
