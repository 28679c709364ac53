//! Lane envelopes: a centerline offset by half the lane width on both sides.

use super::{boolean, BoundaryPolygon, Vec2};
use crate::{Error, Result};

/// Maximum ratio of miter length to half-width before the outer join is beveled.
pub const MITER_LIMIT: f64 = 2.0;

const MIN_SEGMENT: f64 = 1e-9;

/// Offsets `centerline` by ±`width`/2 with miter joins (bevel past
/// [`MITER_LIMIT`]) and flat end caps.
///
/// The ring runs forward along the right-hand offset and back along the left,
/// so it is counter-clockwise. If a sharp bend folds the inner offset over
/// itself, the envelope is rebuilt as the union of per-segment rectangles and
/// outer join wedges instead.
pub fn buffer_centerline(centerline: &[Vec2], width: f64) -> Result<BoundaryPolygon> {
    buffer_lane(centerline, width, Vec::new())
}

pub(crate) fn buffer_lane(centerline: &[Vec2], width: f64, ids: Vec<String>) -> Result<BoundaryPolygon> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Precondition(format!("lane width must be positive, got {width}")));
    }
    if centerline.len() < 2 {
        return Err(Error::Precondition(format!(
            "centerline needs at least 2 points, got {}",
            centerline.len()
        )));
    }
    let mut dirs = Vec::with_capacity(centerline.len() - 1);
    for (i, w) in centerline.windows(2).enumerate() {
        let d = w[1] - w[0];
        if !d.is_finite() || d.norm() <= MIN_SEGMENT {
            return Err(Error::Precondition(format!(
                "degenerate centerline: points {i} and {} coincide",
                i + 1
            )));
        }
        dirs.push(d * (1.0 / d.norm()));
    }
    let half = 0.5 * width;
    let mut ring = offset_side(centerline, &dirs, -half);
    let mut left = offset_side(centerline, &dirs, half);
    left.reverse();
    ring.extend(left);
    ring.dedup();
    match BoundaryPolygon::from_open_ring(ring, ids.clone()) {
        Ok(poly) => Ok(poly),
        Err(_) => buffer_by_union(centerline, &dirs, half, ids),
    }
}

fn offset_side(points: &[Vec2], dirs: &[Vec2], offset: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(points.len() + 4);
    out.push(points[0] + dirs[0].perp() * offset);
    for i in 1..points.len() - 1 {
        let p = points[i];
        let (da, db) = (dirs[i - 1], dirs[i]);
        let (na, nb) = (da.perp(), db.perp());
        let turn = da.cross(db);
        let cos = na.dot(nb);
        if turn.abs() < 1e-12 && cos > 0.0 {
            out.push(p + na * offset);
            continue;
        }
        let miter_ratio_sq = 2.0 / (1.0 + cos);
        if cos > -1.0 && miter_ratio_sq <= MITER_LIMIT * MITER_LIMIT {
            out.push(p + (na + nb) * (offset / (1.0 + cos)));
        } else {
            out.push(p + na * offset);
            out.push(p + nb * offset);
        }
    }
    let last = points.len() - 1;
    out.push(points[last] + dirs[last - 1].perp() * offset);
    out
}

fn buffer_by_union(points: &[Vec2], dirs: &[Vec2], half: f64, ids: Vec<String>) -> Result<BoundaryPolygon> {
    let mut pieces: Vec<Vec<Vec2>> = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let n = d.perp() * half;
        let (a, b) = (points[i], points[i + 1]);
        pieces.push(vec![a - n, b - n, b + n, a + n]);
    }
    for i in 1..points.len() - 1 {
        let (da, db) = (dirs[i - 1], dirs[i]);
        let turn = da.cross(db);
        if turn.abs() < 1e-12 && da.dot(db) > 0.0 {
            continue;
        }
        // The outer side is to the right of a left turn.
        let side = if turn > 0.0 { -half } else { half };
        let p = points[i];
        let (na, nb) = (da.perp(), db.perp());
        let cos = na.dot(nb);
        let mut wedge = vec![p, p + na * side];
        if cos > -1.0 && 2.0 / (1.0 + cos) <= MITER_LIMIT * MITER_LIMIT {
            wedge.push(p + (na + nb) * (side / (1.0 + cos)));
        }
        wedge.push(p + nb * side);
        if turn < 0.0 {
            wedge.reverse();
        }
        pieces.push(wedge);
    }
    let mut merged = boolean::union_open_rings(&pieces)?;
    if merged.len() != 1 {
        return Err(Error::InvalidPolygon(format!(
            "lane envelope splits into {} parts",
            merged.len()
        )));
    }
    Ok(merged.remove(0).with_source_lane_ids(ids))
}
