//! Union of lane envelopes, backed by `geo`'s boolean operations.
//!
//! `geo` snaps output vertices to an integer grid sized to the inputs' bounding
//! box (about 1e-7 m for a few hundred meters). Containment is always decided
//! against the merged rings themselves, never mixed with the unmerged inputs.

use super::polygon::{canonical_hole, canonical_ring, ring_signed_area, sort_rings};
use super::{distance_to_region, BoundaryPolygon, Vec2};
use crate::Result;
use geo::{Coord, LineString, Polygon};

const ASSIGN_TOL: f64 = 1e-6;
/// Holes smaller than this (m²) are slivers left by snapping and are dropped.
pub const MIN_HOLE_AREA: f64 = 1e-6;

fn line_string(ring: &[Vec2]) -> LineString<f64> {
    LineString::new(ring.iter().map(|p| Coord { x: p.x, y: p.y }).collect())
}

fn to_geo(ring: &[Vec2]) -> Polygon<f64> {
    Polygon::new(line_string(ring), vec![])
}

fn poly_to_geo(poly: &BoundaryPolygon) -> Polygon<f64> {
    Polygon::new(line_string(poly.exterior()), poly.holes().map(line_string).collect())
}

/// Unions open rings (any orientation) into canonical polygons.
pub(crate) fn union_open_rings(rings: &[Vec<Vec2>]) -> Result<Vec<BoundaryPolygon>> {
    let polys: Vec<Polygon<f64>> = rings.iter().map(|r| to_geo(r)).collect();
    union_geo(&polys)
}

fn closed_ring(ls: &LineString<f64>) -> Option<Vec<Vec2>> {
    let mut ring: Vec<Vec2> = ls.0.iter().map(|c| Vec2::new(c.x, c.y)).collect();
    ring.dedup();
    if ring.first() != ring.last() {
        let first = ring[0];
        ring.push(first);
    }
    (ring.len() >= 4).then_some(ring)
}

fn union_geo(polys: &[Polygon<f64>]) -> Result<Vec<BoundaryPolygon>> {
    let merged = geo::unary_union(polys);
    let mut out = Vec::with_capacity(merged.0.len());
    for poly in &merged.0 {
        let Some(ring) = closed_ring(poly.exterior()) else {
            continue;
        };
        let mut holes: Vec<Vec<Vec2>> = poly
            .interiors()
            .iter()
            .filter_map(closed_ring)
            .filter(|h| ring_signed_area(h).abs() >= MIN_HOLE_AREA)
            .map(|h| canonical_hole(&h))
            .collect();
        sort_rings(&mut holes);
        out.push(BoundaryPolygon::with_holes(canonical_ring(&ring), holes, Vec::new())?);
    }
    out.sort_by(|a, b| {
        let (p, q) = (a.exterior()[0], b.exterior()[0]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
    });
    Ok(out)
}

/// Merges overlapping envelopes; disjoint ones stay separate.
///
/// Each output carries the sorted ids of the inputs it absorbed. Outputs are
/// canonical (counter-clockwise from the smallest vertex) and sorted by that
/// first vertex, so the result does not depend on input order.
pub fn merge_polygons(polys: &[BoundaryPolygon]) -> Result<Vec<BoundaryPolygon>> {
    if polys.is_empty() {
        return Ok(Vec::new());
    }
    let geo_polys: Vec<Polygon<f64>> = polys.iter().map(poly_to_geo).collect();
    let merged = union_geo(&geo_polys)?;
    let mut ids: Vec<Vec<String>> = vec![Vec::new(); merged.len()];
    for input in polys {
        for (k, out) in merged.iter().enumerate() {
            if !out.bbox().intersects(input.bbox()) {
                continue;
            }
            let region = std::slice::from_ref(out);
            if input.exterior().iter().any(|&p| distance_to_region(p, region) <= ASSIGN_TOL) {
                ids[k].extend(input.source_lane_ids().iter().cloned());
            }
        }
    }
    Ok(merged
        .into_iter()
        .zip(ids)
        .map(|(poly, mut lane_ids)| {
            lane_ids.sort();
            lane_ids.dedup();
            poly.with_source_lane_ids(lane_ids)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64, id: &str) -> BoundaryPolygon {
        BoundaryPolygon::from_open_ring(
            vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)],
            vec![id.to_string()],
        )
        .unwrap()
    }

    #[test]
    fn disjoint_stay_separate() {
        let a = rect(0.0, 0.0, 10.0, 4.0, "a");
        let b = rect(20.0, 0.0, 30.0, 4.0, "b");
        let m = merge_polygons(&[b.clone(), a.clone()]).unwrap();
        assert_eq!(m, vec![a.canonicalized(), b.canonicalized()]);
    }

    #[test]
    fn identical_rectangles_merge_to_one() {
        let a = rect(0.0, 0.0, 10.0, 4.0, "a");
        let m = merge_polygons(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(m, vec![a.canonicalized()]);
    }

    #[test]
    fn half_overlap_gives_hexagon_with_inclusion_exclusion_area() {
        // 10×4 and 10×2 rectangles sharing the bottom edge, offset by half the length.
        let a = rect(0.0, 0.0, 10.0, 4.0, "a");
        let b = rect(5.0, 0.0, 15.0, 2.0, "b");
        let m = merge_polygons(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].vertex_count(), 6);
        let overlap = 5.0 * 2.0;
        assert!((m[0].area() - (a.area() + b.area() - overlap)).abs() < 1e-6);
        assert_eq!(m[0].source_lane_ids(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn enclosed_courtyard_becomes_a_hole() {
        use crate::geometry::{point_in_polygon, Containment, PipAlgorithm};
        let ring = [
            rect(0.0, 0.0, 10.0, 1.0, "s"),
            rect(9.0, 0.0, 10.0, 10.0, "e"),
            rect(0.0, 9.0, 10.0, 10.0, "n"),
            rect(0.0, 0.0, 1.0, 10.0, "w"),
        ];
        let m = merge_polygons(&ring).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].hole_count(), 1);
        assert!((m[0].area() - 36.0).abs() < 1e-6);
        assert_eq!(m[0].source_lane_ids().len(), 4);
        for algo in PipAlgorithm::ALL {
            assert_eq!(point_in_polygon(Vec2::new(5.0, 5.0), &m[0], algo), Containment::Outside);
            assert_eq!(point_in_polygon(Vec2::new(0.5, 5.0), &m[0], algo), Containment::Inside);
            assert_eq!(point_in_polygon(Vec2::new(1.0, 5.0), &m[0], algo), Containment::Boundary);
        }
        // Merging again is stable.
        assert_eq!(merge_polygons(&m).unwrap(), m);
    }
}
