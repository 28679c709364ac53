//! Simple closed rings (with optional holes) used as drivable-area envelopes.

use super::{Vec2, BOUNDARY_EPS};
use crate::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn from_points(points: &[Vec2]) -> Aabb {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Aabb { min, max }
    }

    #[inline]
    pub fn contains_padded(&self, p: Vec2, pad: f64) -> bool {
        p.x >= self.min.x - pad && p.x <= self.max.x + pad && p.y >= self.min.y - pad && p.y <= self.max.y + pad
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x && other.min.x <= self.max.x && self.min.y <= other.max.y && other.min.y <= self.max.y
    }
}

/// Horizontal-band bucketing of ring edges. A band lists every edge whose
/// y-extent, padded by the boundary band, overlaps it. A query at height `y`
/// only has to visit the edges of its own band.
#[derive(Debug, Clone)]
pub(crate) struct EdgeIndex {
    y0: f64,
    inv_height: f64,
    bands: usize,
    offsets: Vec<u32>,
    edges: Vec<u32>,
}

impl EdgeIndex {
    fn build(ring: &[Vec2], bbox: &Aabb) -> EdgeIndex {
        let n_edges = ring.len() - 1;
        let bands = n_edges.clamp(1, 1024);
        let y0 = bbox.min.y - BOUNDARY_EPS;
        let span = (bbox.max.y + BOUNDARY_EPS) - y0;
        let inv_height = bands as f64 / span;
        let mut index = EdgeIndex {
            y0,
            inv_height,
            bands,
            offsets: Vec::new(),
            edges: Vec::new(),
        };
        let ranges: Vec<(usize, usize)> = ring
            .windows(2)
            .map(|w| {
                let lo = w[0].y.min(w[1].y) - BOUNDARY_EPS;
                let hi = w[0].y.max(w[1].y) + BOUNDARY_EPS;
                (index.band_of(lo), index.band_of(hi))
            })
            .collect();
        let mut counts = vec![0u32; bands + 1];
        for &(lo, hi) in &ranges {
            for b in lo..=hi {
                counts[b + 1] += 1;
            }
        }
        for b in 0..bands {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut edges = vec![0u32; counts[bands] as usize];
        for (e, &(lo, hi)) in ranges.iter().enumerate() {
            for b in lo..=hi {
                edges[fill[b] as usize] = e as u32;
                fill[b] += 1;
            }
        }
        index.offsets = counts;
        index.edges = edges;
        index
    }

    #[inline]
    fn band_of(&self, y: f64) -> usize {
        let b = ((y - self.y0) * self.inv_height).floor();
        if b <= 0.0 {
            0
        } else {
            (b as usize).min(self.bands - 1)
        }
    }

    /// Edges that can cross a horizontal line at `y` or lie within the boundary band of it.
    #[inline]
    pub(crate) fn candidates(&self, y: f64) -> &[u32] {
        let b = self.band_of(y);
        &self.edges[self.offsets[b] as usize..self.offsets[b + 1] as usize]
    }
}

/// A validated closed ring with its bounding box and edge index.
#[derive(Debug, Clone)]
pub(crate) struct Ring {
    pub(crate) points: Vec<Vec2>,
    pub(crate) bbox: Aabb,
    pub(crate) index: EdgeIndex,
}

impl Ring {
    fn new(points: Vec<Vec2>) -> Result<Ring> {
        validate_ring(&points)?;
        let bbox = Aabb::from_points(&points);
        let index = EdgeIndex::build(&points, &bbox);
        Ok(Ring { points, bbox, index })
    }
}

/// A closed, simple exterior ring bounding part of the drivable area, minus
/// the interiors of its holes.
///
/// Rings repeat their first point at the end. Construction rejects
/// self-intersecting rings and rings with fewer than three distinct vertices.
/// Holes are not required to lie inside the exterior: after clipping, a hole
/// may reach past the clipped exterior, which leaves the region unchanged.
#[derive(Debug, Clone)]
pub struct BoundaryPolygon {
    exterior: Ring,
    holes: Vec<Ring>,
    source_lane_ids: Vec<String>,
}

impl PartialEq for BoundaryPolygon {
    fn eq(&self, other: &Self) -> bool {
        self.exterior.points == other.exterior.points
            && self.holes.len() == other.holes.len()
            && self.holes.iter().zip(&other.holes).all(|(a, b)| a.points == b.points)
            && self.source_lane_ids == other.source_lane_ids
    }
}

impl BoundaryPolygon {
    /// Validates a closed ring.
    pub fn new(exterior: Vec<Vec2>, source_lane_ids: Vec<String>) -> Result<Self> {
        Self::with_holes(exterior, Vec::new(), source_lane_ids)
    }

    /// Validates a closed exterior ring and closed hole rings.
    pub fn with_holes(exterior: Vec<Vec2>, holes: Vec<Vec<Vec2>>, source_lane_ids: Vec<String>) -> Result<Self> {
        Ok(BoundaryPolygon {
            exterior: Ring::new(exterior)?,
            holes: holes.into_iter().map(Ring::new).collect::<Result<_>>()?,
            source_lane_ids,
        })
    }

    /// Closes an open ring (appending the first vertex) and validates it.
    pub fn from_open_ring(mut ring: Vec<Vec2>, source_lane_ids: Vec<String>) -> Result<Self> {
        if let Some(&first) = ring.first() {
            if ring.last() != Some(&first) || ring.len() == 1 {
                ring.push(first);
            }
        }
        Self::new(ring, source_lane_ids)
    }

    /// Closed ring; the last point equals the first.
    pub fn exterior(&self) -> &[Vec2] {
        &self.exterior.points
    }

    pub fn holes(&self) -> impl Iterator<Item = &[Vec2]> {
        self.holes.iter().map(|h| h.points.as_slice())
    }

    pub fn hole_count(&self) -> usize {
        self.holes.len()
    }

    pub(crate) fn exterior_ring(&self) -> &Ring {
        &self.exterior
    }

    pub(crate) fn hole_rings(&self) -> &[Ring] {
        &self.holes
    }

    /// Every ring, exterior first.
    pub fn rings(&self) -> impl Iterator<Item = &[Vec2]> {
        std::iter::once(self.exterior()).chain(self.holes())
    }

    pub fn source_lane_ids(&self) -> &[String] {
        &self.source_lane_ids
    }

    /// Bounding box of the exterior.
    pub fn bbox(&self) -> &Aabb {
        &self.exterior.bbox
    }

    /// Number of distinct exterior vertices.
    pub fn vertex_count(&self) -> usize {
        self.exterior.points.len() - 1
    }

    /// Shoelace area of the exterior, positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        ring_signed_area(&self.exterior.points)
    }

    /// Exterior area minus hole areas.
    pub fn area(&self) -> f64 {
        self.signed_area().abs() - self.holes().map(|h| ring_signed_area(h).abs()).sum::<f64>()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    /// Same region, exterior counter-clockwise and holes clockwise, each ring
    /// starting at its lexicographically smallest vertex; holes sorted by that vertex.
    pub fn canonicalized(&self) -> BoundaryPolygon {
        let ring = canonical_ring(&self.exterior.points);
        let mut holes: Vec<Vec<Vec2>> = self.holes().map(canonical_hole).collect();
        sort_rings(&mut holes);
        let mut ids = self.source_lane_ids.clone();
        ids.sort();
        ids.dedup();
        BoundaryPolygon::with_holes(ring, holes, ids).expect("reordering valid rings keeps them valid")
    }

    pub fn with_source_lane_ids(mut self, ids: Vec<String>) -> Self {
        self.source_lane_ids = ids;
        self
    }

    /// Keeps only the holes `keep` accepts.
    pub(crate) fn retain_holes(mut self, keep: impl Fn(&[Vec2]) -> bool) -> Self {
        self.holes.retain(|h| keep(&h.points));
        self
    }

    pub(crate) fn replace_exterior(&self, exterior: Vec<Vec2>) -> Result<BoundaryPolygon> {
        Ok(BoundaryPolygon {
            exterior: Ring::new(exterior)?,
            holes: self.holes.clone(),
            source_lane_ids: self.source_lane_ids.clone(),
        })
    }
}

/// Clipping disc approximation around the target actor.
#[derive(Debug, Clone)]
pub struct LocalBuffer {
    pub center: Vec2,
    pub radius: f64,
    pub clip_region: BoundaryPolygon,
}

/// Shoelace signed area of a closed ring.
pub fn ring_signed_area(ring: &[Vec2]) -> f64 {
    let mut acc = 0.0;
    for w in ring.windows(2) {
        acc += w[0].cross(w[1]);
    }
    0.5 * acc
}

/// Clockwise ring starting at its lexicographically smallest vertex.
pub(crate) fn canonical_hole(ring: &[Vec2]) -> Vec<Vec2> {
    let mut r = canonical_ring(ring);
    r.reverse();
    r
}

/// Orders rings by their first vertex.
pub(crate) fn sort_rings(rings: &mut [Vec<Vec2>]) {
    rings.sort_by(|a, b| a[0].x.total_cmp(&b[0].x).then(a[0].y.total_cmp(&b[0].y)));
}

/// Counter-clockwise ring starting at its lexicographically smallest vertex.
pub(crate) fn canonical_ring(ring: &[Vec2]) -> Vec<Vec2> {
    let mut open: Vec<Vec2> = ring[..ring.len() - 1].to_vec();
    if ring_signed_area(ring) < 0.0 {
        open.reverse();
    }
    let start = open
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    open.rotate_left(start);
    let first = open[0];
    open.push(first);
    open
}

#[inline]
fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

#[inline]
fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_touch(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn validate_ring(ring: &[Vec2]) -> Result<()> {
    if ring.len() < 4 {
        return Err(Error::InvalidPolygon(format!(
            "ring needs at least 4 points including closure, got {}",
            ring.len()
        )));
    }
    if ring.first() != ring.last() {
        return Err(Error::InvalidPolygon("ring is not closed".into()));
    }
    if let Some(p) = ring.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidPolygon(format!("non-finite vertex {p:?}")));
    }
    if let Some(i) = ring.windows(2).position(|w| w[0] == w[1]) {
        return Err(Error::InvalidPolygon(format!("repeated vertex at index {i}")));
    }
    if ring_signed_area(ring) == 0.0 {
        return Err(Error::InvalidPolygon("ring has zero area".into()));
    }
    if let Some((i, j)) = find_self_intersection(ring) {
        return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
    }
    Ok(())
}

/// Sweep over edges sorted by min-x; returns the first pair of non-adjacent
/// edges that touch, or adjacent edges that fold back onto each other.
pub(crate) fn find_self_intersection(ring: &[Vec2]) -> Option<(usize, usize)> {
    let n = ring.len() - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[i + 1];
        let c = ring[(i + 2) % n];
        // Adjacent edges share exactly one endpoint unless they are collinear
        // and overlapping.
        if orient(a, b, c) == 0.0 && (b - a).dot(c - b) < 0.0 {
            return Some((i, (i + 1) % n));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let min_x = |e: usize| ring[e].x.min(ring[e + 1].x);
    order.sort_by(|&e, &f| min_x(e).total_cmp(&min_x(f)));
    for (k, &e) in order.iter().enumerate() {
        let (p1, p2) = (ring[e], ring[e + 1]);
        let max_x = p1.x.max(p2.x);
        let (ylo, yhi) = (p1.y.min(p2.y), p1.y.max(p2.y));
        for &f in &order[k + 1..] {
            if min_x(f) > max_x {
                break;
            }
            let adjacent = e.abs_diff(f) == 1 || e.abs_diff(f) == n - 1;
            if adjacent {
                continue;
            }
            let (q1, q2) = (ring[f], ring[f + 1]);
            if q1.y.max(q2.y) < ylo || q1.y.min(q2.y) > yhi {
                continue;
            }
            if segments_touch(p1, p2, q1, q2) {
                return Some((e.min(f), e.max(f)));
            }
        }
    }
    None
}
