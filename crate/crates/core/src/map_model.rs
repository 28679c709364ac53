//! HD-map lanes, the map JSON format, and spatial queries over lanes.
//!
//! File schema:
//!
//! ```json
//! {"frame": "city", "lanes": [{"id": "L1", "width": 3.5,
//!   "centerline": [[0.0, 0.0], [10.0, 0.0]], "successors": [], "predecessors": []}]}
//! ```

use crate::geometry::{segment_distance_sq, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

const MIN_POINT_SEPARATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneSegment {
    pub id: String,
    pub width: f64,
    pub centerline: Vec<Vec2>,
    #[serde(default)]
    pub successors: Vec<String>,
    #[serde(default)]
    pub predecessors: Vec<String>,
}

impl LaneSegment {
    fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::lane(&self.id, format!("width must be > 0, got {}", self.width)));
        }
        if self.centerline.len() < 2 {
            return Err(Error::lane(
                &self.id,
                format!("centerline needs at least 2 points, got {}", self.centerline.len()),
            ));
        }
        if self.centerline.iter().any(|p| !p.is_finite()) {
            return Err(Error::lane(&self.id, "centerline has non-finite coordinates"));
        }
        if let Some(i) = self
            .centerline
            .windows(2)
            .position(|w| w[0].distance(w[1]) <= MIN_POINT_SEPARATION)
        {
            return Err(Error::lane(
                &self.id,
                format!("centerline points {i} and {} coincide", i + 1),
            ));
        }
        Ok(())
    }

    /// Closest point on the centerline: (squared distance, segment index, segment parameter).
    pub fn closest_point(&self, p: Vec2) -> (f64, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0.0);
        for (i, w) in self.centerline.windows(2).enumerate() {
            let (d, t) = segment_distance_sq(p, w[0], w[1]);
            if d < best.0 {
                best = (d, i, t);
            }
        }
        best
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.closest_point(p).0.sqrt()
    }

    /// Unit direction of segment `i`.
    pub fn segment_direction(&self, i: usize) -> Vec2 {
        (self.centerline[i + 1] - self.centerline[i])
            .normalized()
            .expect("validated centerline has distinct points")
    }

    /// Tangent at the closest centerline point. On a vertex this is the
    /// following segment's direction, except at the final vertex where it is
    /// the preceding one.
    pub fn tangent_at(&self, p: Vec2) -> Vec2 {
        let (_, seg, t) = self.closest_point(p);
        let last_seg = self.centerline.len() - 2;
        if t >= 1.0 && seg < last_seg {
            self.segment_direction(seg + 1)
        } else {
            self.segment_direction(seg)
        }
    }

    /// Unit vector of the summed segment directions; `None` if they cancel.
    pub fn mean_direction(&self) -> Option<Vec2> {
        let sum = (0..self.centerline.len() - 1).fold(Vec2::ZERO, |acc, i| acc + self.segment_direction(i));
        sum.normalized()
    }

    pub fn length(&self) -> f64 {
        self.centerline.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Validated, immutable lane map keyed by lane id (iteration is in ascending id order).
#[derive(Debug, Clone, PartialEq)]
pub struct HdMap {
    frame: String,
    lanes: BTreeMap<String, LaneSegment>,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    frame: String,
    lanes: Vec<LaneSegment>,
}

impl HdMap {
    pub fn new(frame: impl Into<String>, lanes: Vec<LaneSegment>) -> Result<HdMap> {
        let mut by_id = BTreeMap::new();
        for lane in lanes {
            lane.validate()?;
            if by_id.contains_key(&lane.id) {
                return Err(Error::lane(&lane.id, "duplicate lane id"));
            }
            by_id.insert(lane.id.clone(), lane);
        }
        for lane in by_id.values() {
            for r in lane.successors.iter().chain(&lane.predecessors) {
                if !by_id.contains_key(r) {
                    return Err(Error::lane(&lane.id, format!("references unknown lane {r}")));
                }
            }
        }
        Ok(HdMap {
            frame: frame.into(),
            lanes: by_id,
        })
    }

    pub fn from_json(text: &str) -> Result<HdMap> {
        let file: MapFile = serde_json::from_str(text).map_err(|e| Error::parse("map JSON", e))?;
        HdMap::new(file.frame, file.lanes)
    }

    pub fn to_json(&self) -> String {
        let file = MapFile {
            frame: self.frame.clone(),
            lanes: self.lanes.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("map serializes")
    }

    pub fn frame(&self) -> &str {
        &self.frame
    }

    pub fn lane(&self, id: &str) -> Option<&LaneSegment> {
        self.lanes.get(id)
    }

    pub fn lanes(&self) -> impl Iterator<Item = &LaneSegment> {
        self.lanes.values()
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Applies a rigid transform to every centerline.
    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> HdMap {
        let lanes = self
            .lanes
            .iter()
            .map(|(id, lane)| {
                let mut lane = lane.clone();
                lane.centerline = lane.centerline.iter().map(|&p| f(p)).collect();
                (id.clone(), lane)
            })
            .collect();
        HdMap {
            frame: self.frame.clone(),
            lanes,
        }
    }
}

pub fn load_map(path: impl AsRef<Path>) -> Result<HdMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    HdMap::from_json(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

pub fn save_map(map: &HdMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, map.to_json()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryWindow {
    center: Vec2,
    radius: f64,
}

impl QueryWindow {
    pub fn new(center: Vec2, radius: f64) -> Result<QueryWindow> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::Precondition(format!(
                "query window radius must be > 0, got {radius}"
            )));
        }
        Ok(QueryWindow { center, radius })
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Lanes with at least one centerline point within the window, ascending by id.
pub fn lanes_in_window<'a>(map: &'a HdMap, window: &QueryWindow) -> Vec<&'a LaneSegment> {
    let r_sq = window.radius * window.radius;
    map.lanes()
        .filter(|lane| lane.centerline.iter().any(|p| p.distance_sq(window.center) <= r_sq))
        .collect()
}

/// Lane minimizing point-to-centerline distance (ties to the smaller id) and
/// its unit tangent at the closest point.
pub fn nearest_lane(map: &HdMap, point: Vec2) -> Result<(&LaneSegment, Vec2)> {
    let mut best: Option<(&LaneSegment, f64)> = None;
    for lane in map.lanes() {
        let d = lane.closest_point(point).0;
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((lane, d));
        }
    }
    let (lane, _) = best.ok_or(Error::EmptyMap)?;
    Ok((lane, lane.tangent_at(point)))
}

/// Ids reachable from `start` through successor links (including `start`).
pub fn reachable(map: &HdMap, start: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![start.to_string()];
    while let Some(id) = stack.pop() {
        if let Some(lane) = map.lane(&id) {
            if seen.insert(id) {
                stack.extend(lane.successors.iter().cloned());
            }
        }
    }
    seen
}
