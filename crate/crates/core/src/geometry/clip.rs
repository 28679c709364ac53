//! Local buffer: clipping envelopes to a polygonal disc around the actor.

use super::polygon::ring_signed_area;
use super::Aabb;
use super::{point_in_polygon, segment_distance_sq, BoundaryPolygon, LocalBuffer, PipAlgorithm, Vec2};
use crate::{Error, Result};
use std::f64::consts::{PI, TAU};

/// Vertex count of the disc approximation.
pub const LOCAL_BUFFER_SIDES: usize = 32;

impl LocalBuffer {
    /// Regular polygon circumscribing the circle, so the whole disc of `radius`
    /// lies inside the clip region.
    pub fn circle(center: Vec2, radius: f64) -> Result<LocalBuffer> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Precondition(format!("local buffer radius must be positive, got {radius}")));
        }
        let circumradius = radius / (PI / LOCAL_BUFFER_SIDES as f64).cos();
        let ring: Vec<Vec2> = (0..LOCAL_BUFFER_SIDES)
            .map(|k| {
                let a = TAU * k as f64 / LOCAL_BUFFER_SIDES as f64;
                center + Vec2::new(a.cos(), a.sin()) * circumradius
            })
            .collect();
        Ok(LocalBuffer {
            center,
            radius,
            clip_region: BoundaryPolygon::from_open_ring(ring, Vec::new())?,
        })
    }
}

/// Intersects every polygon with the local buffer disc around `center`.
///
/// Polygons inside the disc are returned unchanged, polygons outside it are
/// dropped. Original vertices are kept bit-exact; only the new vertices on the
/// disc boundary are computed.
pub fn make_local_buffer(center: Vec2, radius: f64, polys: &[BoundaryPolygon]) -> Result<Vec<BoundaryPolygon>> {
    let buffer = LocalBuffer::circle(center, radius)?;
    Ok(clip_with(&buffer, polys))
}

pub fn clip_with(buffer: &LocalBuffer, polys: &[BoundaryPolygon]) -> Vec<BoundaryPolygon> {
    let clip = buffer.clip_region.exterior();
    let mut out = Vec::new();
    for poly in polys {
        if !poly.bbox().intersects(buffer.clip_region.bbox()) {
            continue;
        }
        if poly.exterior().iter().all(|&p| inside_convex(clip, p)) {
            out.push(poly.clone());
            continue;
        }
        match clip_ring(poly.exterior(), clip) {
            Some(pieces) => {
                // Holes are carried over unclipped: subtracting all of a hole
                // or only its part inside the disc gives the same region.
                let built: Option<Vec<BoundaryPolygon>> = pieces
                    .into_iter()
                    .map(|mut ring| {
                        if ring.first() != ring.last() {
                            ring.push(ring[0]);
                        }
                        let piece = poly.replace_exterior(ring).ok()?;
                        let bbox = *piece.bbox();
                        Some(piece.retain_holes(|h| Aabb::from_points(h).intersects(&bbox)))
                    })
                    .collect();
                match built {
                    Some(b) => out.extend(b),
                    None => out.push(poly.clone()),
                }
            }
            // Could not resolve the crossings consistently; the unclipped
            // polygon gives the same verdicts inside the disc.
            None => out.push(poly.clone()),
        }
    }
    out
}

#[inline]
fn inside_convex(clip: &[Vec2], p: Vec2) -> bool {
    clip.windows(2).all(|w| (w[1] - w[0]).cross(p - w[0]) >= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Entry,
    Exit,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    edge: usize,
    t: f64,
    kind: Kind,
    point: Vec2,
    perimeter: f64,
}

/// Parameter interval of `a + t (b − a)`, t ∈ [0, 1], inside the convex ring.
fn cyrus_beck(clip: &[Vec2], a: Vec2, b: Vec2) -> Option<(f64, f64)> {
    let d = b - a;
    let (mut t_in, mut t_out) = (0.0f64, 1.0f64);
    for w in clip.windows(2) {
        let e = w[1] - w[0];
        let num = e.cross(a - w[0]);
        let den = e.cross(d);
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else if den > 0.0 {
            t_in = t_in.max(-num / den);
        } else {
            t_out = t_out.min(-num / den);
        }
    }
    (t_in <= t_out).then_some((t_in, t_out))
}

/// Position along the clip ring: edge index plus fraction along that edge.
fn perimeter_of(clip: &[Vec2], p: Vec2) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for (j, w) in clip.windows(2).enumerate() {
        let (d, t) = segment_distance_sq(p, w[0], w[1]);
        if d < best.0 {
            best = (d, j as f64 + t.min(1.0 - 1e-15));
        }
    }
    best.1
}

/// Weiler–Atherton walk for a convex clip ring. Returns open rings, or `None`
/// when entry and exit events fail to alternate.
fn clip_ring(subject_closed: &[Vec2], clip: &[Vec2]) -> Option<Vec<Vec<Vec2>>> {
    let mut subject: Vec<Vec2> = subject_closed[..subject_closed.len() - 1].to_vec();
    if ring_signed_area(subject_closed) < 0.0 {
        subject.reverse();
    }
    let n = subject.len();
    let m = clip.len() - 1;
    let inside: Vec<bool> = subject.iter().map(|&p| inside_convex(clip, p)).collect();

    let mut events: Vec<Event> = Vec::new();
    for i in 0..n {
        let (a, b) = (subject[i], subject[(i + 1) % n]);
        let (a_in, b_in) = (inside[i], inside[(i + 1) % n]);
        if a_in && b_in {
            continue;
        }
        let interval = cyrus_beck(clip, a, b);
        let mut push = |t: f64, kind: Kind| {
            let point = if t <= 0.0 {
                a
            } else if t >= 1.0 {
                b
            } else {
                a.lerp(b, t)
            };
            events.push(Event {
                edge: i,
                t,
                kind,
                point,
                perimeter: perimeter_of(clip, point),
            });
        };
        match (a_in, b_in, interval) {
            (true, false, Some((_, t_out))) => push(t_out.clamp(0.0, 1.0), Kind::Exit),
            (true, false, None) => push(0.0, Kind::Exit),
            (false, true, Some((t_in, _))) => push(t_in.clamp(0.0, 1.0), Kind::Entry),
            (false, true, None) => push(1.0, Kind::Entry),
            (false, false, Some((t_in, t_out))) if t_in < t_out => {
                push(t_in, Kind::Entry);
                push(t_out, Kind::Exit);
            }
            _ => {}
        }
    }

    if events.is_empty() {
        // No crossings: either the disc lies inside the subject or they are disjoint.
        let subject_poly = BoundaryPolygon::new(subject_closed.to_vec(), Vec::new()).ok()?;
        return if point_in_polygon(clip[0], &subject_poly, PipAlgorithm::RayCast).is_compliant() {
            Some(vec![clip[..m].to_vec()])
        } else {
            Some(Vec::new())
        };
    }
    let k = events.len();
    if k % 2 != 0 || (0..k).any(|e| events[e].kind == events[(e + 1) % k].kind) {
        return None;
    }

    let mut by_perimeter: Vec<usize> = (0..k).collect();
    by_perimeter.sort_by(|&a, &b| events[a].perimeter.total_cmp(&events[b].perimeter));
    let mut rank = vec![0usize; k];
    for (r, &e) in by_perimeter.iter().enumerate() {
        rank[e] = r;
    }

    let mut visited = vec![false; k];
    let mut rings = Vec::new();
    for start in 0..k {
        if events[start].kind != Kind::Entry || visited[start] {
            continue;
        }
        let mut ring: Vec<Vec2> = Vec::new();
        let mut cur = start;
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > k + 1 {
                return None;
            }
            visited[cur] = true;
            let entry = events[cur];
            ring.push(entry.point);
            let exit_idx = (cur + 1) % k;
            let exit = events[exit_idx];
            // Subject vertices strictly after the entry up to the exit's edge start.
            if !(exit.edge == entry.edge && exit.t >= entry.t) {
                let mut v = (entry.edge + 1) % n;
                loop {
                    ring.push(subject[v]);
                    if v == exit.edge {
                        break;
                    }
                    v = (v + 1) % n;
                }
            }
            ring.push(exit.point);
            let next = by_perimeter[(rank[exit_idx] + 1) % k];
            if events[next].kind != Kind::Entry {
                return None;
            }
            push_clip_vertices(&mut ring, clip, m, exit.perimeter, events[next].perimeter);
            if next == start {
                break;
            }
            if visited[next] {
                return None;
            }
            cur = next;
        }
        ring.dedup();
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() >= 3 {
            rings.push(ring);
        }
    }
    Some(rings)
}

/// Clip ring vertices passed when walking counter-clockwise from perimeter
/// position `from` to `to`.
fn push_clip_vertices(ring: &mut Vec<Vec2>, clip: &[Vec2], m: usize, from: f64, to: f64) {
    let first = from.floor() as usize + 1;
    let steps = if to > from {
        // Vertices j with from < j < to.
        (to.ceil() as usize).saturating_sub(first)
    } else {
        m - first + to.ceil() as usize
    };
    for s in 0..steps {
        ring.push(clip[(first + s) % m]);
    }
}
