//! Deterministic trajectory-feasibility toolkit.
//!
//! A candidate trajectory set is generated from a kinematic model and reduced
//! to an ε-cover, then pruned against drivable-area polygons built from HD-map
//! lane centerlines. Survivors are scored against ground truth with
//! distance-based soft targets and evaluated with the usual forecasting metrics
//! (minADE, minFDE, miss rate, drivable-area compliance).
//!
//! Modules:
//! - [`map_model`]: lanes, map JSON format, window and nearest-lane queries.
//! - [`geometry`]: frames, lane buffering, polygon union/clipping, point-in-polygon.
//! - [`trajset`]: trajectories, the `Dist` metric, pool generation, coverage reduction.
//! - [`refinement`]: the pruning layer end to end plus goal-lane search.
//! - [`scoring`]: soft targets, cross-entropy, attention reference, top-k, metrics.

pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod map_model;
pub mod refinement;
pub mod scoring;
pub mod trajset;

pub use error::{Error, Result};
pub use geometry::Vec2;
