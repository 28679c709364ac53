//! Candidate goal lanes: successor chains rooted at the target's lane.

use super::Scene;
use crate::geometry::{RotationFrame, Vec2};
use crate::map_model::{nearest_lane, HdMap, LaneSegment};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const JOINT_EPS: f64 = 1e-9;

/// `R` chains padded to a common length `N`; each station is `(x, y, valid)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalLaneBatch {
    pub lanes: Vec<Vec<[f64; 3]>>,
    pub chains: Vec<Vec<String>>,
}

impl GoalLaneBatch {
    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Stations per lane after padding.
    pub fn stations(&self) -> usize {
        self.lanes.first().map_or(0, Vec::len)
    }

    /// One id per chain, member ids joined by `>`.
    pub fn lane_ids(&self) -> Vec<String> {
        self.chains.iter().map(|c| c.join(">")).collect()
    }

    /// Valid stations of lane `r`.
    pub fn points(&self, r: usize) -> Vec<Vec2> {
        self.lanes[r]
            .iter()
            .filter(|s| s[2] != 0.0)
            .map(|s| Vec2::new(s[0], s[1]))
            .collect()
    }

    /// Applies `f` to valid stations; padding stays at zero.
    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> GoalLaneBatch {
        let lanes = self
            .lanes
            .iter()
            .map(|lane| {
                lane.iter()
                    .map(|s| {
                        if s[2] == 0.0 {
                            *s
                        } else {
                            let p = f(Vec2::new(s[0], s[1]));
                            [p.x, p.y, 1.0]
                        }
                    })
                    .collect()
            })
            .collect();
        GoalLaneBatch {
            lanes,
            chains: self.chains.clone(),
        }
    }

    pub fn to_local(&self, frame: &RotationFrame) -> GoalLaneBatch {
        self.map_points(|p| frame.point_to_local(p))
    }
}

fn heading_ok(lane: &LaneSegment, heading: Vec2, tolerance: f64) -> bool {
    lane.mean_direction()
        .is_some_and(|d| heading.cross(d).atan2(heading.dot(d)).abs() <= tolerance + 1e-12)
}

/// Enumerates successor chains from the target's nearest lane, in city coordinates.
///
/// A lane joins a chain only if its mean direction is within
/// `heading_tolerance` of the target heading and its centerline passes within
/// `radius` of the target. The root obeys the same filters; if it fails them
/// the batch is empty. Chains are root-to-leaf, acyclic, and sorted by their id
/// sequence.
pub fn goal_lane_search(scene: &Scene, map: &HdMap, radius: f64, heading_tolerance: f64) -> Result<GoalLaneBatch> {
    let heading = scene
        .target_heading()
        .ok_or_else(|| Error::Precondition(format!("target {} has no defined heading", scene.target)))?;
    let pos = scene.target_position();
    let accept = |lane: &LaneSegment| heading_ok(lane, heading, heading_tolerance) && lane.distance_to(pos) <= radius;

    let (root, _) = nearest_lane(map, pos)?;
    let mut chains: Vec<Vec<String>> = Vec::new();
    if accept(root) {
        let mut path = vec![root.id.clone()];
        extend_chains(map, &accept, &mut path, &mut chains);
    }
    chains.sort();

    let polylines: Vec<Vec<Vec2>> = chains.iter().map(|c| chain_points(map, c)).collect();
    let n = polylines.iter().map(Vec::len).max().unwrap_or(0);
    let lanes = polylines
        .iter()
        .map(|pts| {
            let mut row: Vec<[f64; 3]> = pts.iter().map(|p| [p.x, p.y, 1.0]).collect();
            row.resize(n, [0.0; 3]);
            row
        })
        .collect();
    Ok(GoalLaneBatch { lanes, chains })
}

fn extend_chains(
    map: &HdMap,
    accept: &dyn Fn(&LaneSegment) -> bool,
    path: &mut Vec<String>,
    out: &mut Vec<Vec<String>>,
) {
    let last = map.lane(path.last().expect("non-empty path")).expect("validated map");
    let mut next: Vec<&LaneSegment> = last
        .successors
        .iter()
        .filter(|id| !path.contains(id))
        .filter_map(|id| map.lane(id))
        .filter(|lane| accept(lane))
        .collect();
    next.sort_by(|a, b| a.id.cmp(&b.id));
    next.dedup_by(|a, b| a.id == b.id);
    if next.is_empty() {
        out.push(path.clone());
        return;
    }
    for lane in next {
        path.push(lane.id.clone());
        extend_chains(map, accept, path, out);
        path.pop();
    }
}

/// Concatenated centerlines; a successor's first point is dropped when it
/// repeats the previous lane's last point.
fn chain_points(map: &HdMap, chain: &[String]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = Vec::new();
    for id in chain {
        let lane = map.lane(id).expect("validated map");
        let mut line = lane.centerline.as_slice();
        if let (Some(&last), Some(&first)) = (pts.last(), line.first()) {
            if last.distance(first) <= JOINT_EPS {
                line = &line[1..];
            }
        }
        pts.extend_from_slice(line);
    }
    pts
}
