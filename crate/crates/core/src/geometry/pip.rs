//! Point-in-polygon classification.
//!
//! Both algorithms first look for an edge within [`BOUNDARY_EPS`] of the query
//! point, in which case the answer is [`Containment::Boundary`]. Off the
//! boundary band, the +x ray-crossing parity and the winding number agree.

use super::polygon::Ring;
use super::{segment_distance_sq, BoundaryPolygon, Vec2, BOUNDARY_EPS};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const BAND_SQ: f64 = BOUNDARY_EPS * BOUNDARY_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipAlgorithm {
    /// Crossing number of a horizontal +x ray.
    #[default]
    RayCast,
    /// Signed winding number.
    Winding,
}

impl PipAlgorithm {
    pub const ALL: [PipAlgorithm; 2] = [PipAlgorithm::RayCast, PipAlgorithm::Winding];

    pub fn name(self) -> &'static str {
        match self {
            PipAlgorithm::RayCast => "ray_cast",
            PipAlgorithm::Winding => "winding",
        }
    }
}

impl fmt::Display for PipAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ray_cast" | "ray-cast" | "raycast" => Ok(PipAlgorithm::RayCast),
            "winding" => Ok(PipAlgorithm::Winding),
            other => Err(format!("unknown point-in-polygon algorithm '{other}' (expected ray_cast or winding)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Containment {
    Inside,
    Outside,
    Boundary,
}

impl Containment {
    /// Inside or on the boundary band.
    #[inline]
    pub fn is_compliant(self) -> bool {
        !matches!(self, Containment::Outside)
    }
}

#[inline]
fn near_edge(p: Vec2, a: Vec2, b: Vec2) -> bool {
    // Cheap x-extent reject before the exact distance.
    if p.x < a.x.min(b.x) - BOUNDARY_EPS || p.x > a.x.max(b.x) + BOUNDARY_EPS {
        return false;
    }
    segment_distance_sq(p, a, b).0 <= BAND_SQ
}

pub fn point_in_polygon(point: Vec2, poly: &BoundaryPolygon, algo: PipAlgorithm) -> Containment {
    match point_in_ring(point, poly.exterior_ring(), algo) {
        Containment::Inside => {}
        other => return other,
    }
    for hole in poly.hole_rings() {
        match point_in_ring(point, hole, algo) {
            Containment::Inside => return Containment::Outside,
            Containment::Boundary => return Containment::Boundary,
            Containment::Outside => {}
        }
    }
    Containment::Inside
}

#[inline]
fn point_in_ring(point: Vec2, ring: &Ring, algo: PipAlgorithm) -> Containment {
    match algo {
        PipAlgorithm::RayCast => ray_cast(point, ring),
        PipAlgorithm::Winding => winding(point, ring),
    }
}

fn ray_cast(p: Vec2, poly: &Ring) -> Containment {
    if !poly.bbox.contains_padded(p, BOUNDARY_EPS) {
        return Containment::Outside;
    }
    let ring = &poly.points;
    let mut inside = false;
    for &e in poly.index.candidates(p.y) {
        let a = ring[e as usize];
        let b = ring[e as usize + 1];
        if near_edge(p, a, b) {
            return Containment::Boundary;
        }
        // Half-open rule: one endpoint strictly above the ray, the other at or below.
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if x_cross > p.x {
                inside = !inside;
            }
        }
    }
    if inside {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

fn winding(p: Vec2, poly: &Ring) -> Containment {
    if !poly.bbox.contains_padded(p, BOUNDARY_EPS) {
        return Containment::Outside;
    }
    let ring = &poly.points;
    let mut wn: i32 = 0;
    for &e in poly.index.candidates(p.y) {
        let a = ring[e as usize];
        let b = ring[e as usize + 1];
        if near_edge(p, a, b) {
            return Containment::Boundary;
        }
        let side = (b - a).cross(p - a);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            wn -= 1;
        }
    }
    if wn != 0 {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

/// Classification against a union of polygons: boundary if on any boundary
/// without being strictly inside another.
pub fn point_in_region(point: Vec2, polys: &[BoundaryPolygon], algo: PipAlgorithm) -> Containment {
    let mut result = Containment::Outside;
    for poly in polys {
        match point_in_polygon(point, poly, algo) {
            Containment::Inside => return Containment::Inside,
            Containment::Boundary => result = Containment::Boundary,
            Containment::Outside => {}
        }
    }
    result
}

/// True iff every waypoint is inside or on the boundary of the union of `polys`.
/// Stops at the first waypoint found outside.
pub fn trajectory_in_region(waypoints: &[Vec2], polys: &[BoundaryPolygon]) -> bool {
    trajectory_in_region_with(waypoints, polys, PipAlgorithm::RayCast)
}

pub fn trajectory_in_region_with(waypoints: &[Vec2], polys: &[BoundaryPolygon], algo: PipAlgorithm) -> bool {
    waypoints
        .iter()
        .all(|&p| polys.iter().any(|poly| point_in_polygon(p, poly, algo).is_compliant()))
}

/// Euclidean distance from `point` to the region; zero inside or on the boundary.
pub fn distance_to_region(point: Vec2, polys: &[BoundaryPolygon]) -> f64 {
    if point_in_region(point, polys, PipAlgorithm::RayCast).is_compliant() {
        return 0.0;
    }
    polys
        .iter()
        .flat_map(|poly| poly.rings())
        .flat_map(|ring| ring.windows(2))
        .map(|w| segment_distance_sq(point, w[0], w[1]).0)
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}
