//! Geometric kernels: frames, lane envelopes, union, clipping and
//! point-in-polygon classification. Everything is double precision; points
//! within [`BOUNDARY_EPS`] of an edge classify as boundary.

mod boolean;
mod buffer;
mod clip;
mod frame;
mod pip;
mod point;
mod polygon;

pub use boolean::merge_polygons;
pub use buffer::{buffer_centerline, MITER_LIMIT};
pub(crate) use buffer::buffer_lane;
pub use clip::{clip_with, make_local_buffer, LOCAL_BUFFER_SIDES};
pub use frame::{frame_from_tangent, to_city, to_local, FrameRecord, RotationFrame};
pub use pip::{
    distance_to_region, point_in_polygon, point_in_region, trajectory_in_region, trajectory_in_region_with,
    Containment, PipAlgorithm,
};
pub use point::{segment_distance_sq, Vec2};
pub use polygon::{ring_signed_area, Aabb, BoundaryPolygon, LocalBuffer};

/// Width of the boundary band in meters.
pub const BOUNDARY_EPS: f64 = 1e-9;
