//! Map-based pruning of a trajectory set for one scene.
//!
//! The pipeline anchors a frame at the target, builds the drivable region
//! from the lanes around it, moves the set into city coordinates, keeps the
//! trajectories whose every waypoint lies on the region, and returns the
//! survivors together with the target's candidate goal lanes.

mod goal_lanes;
mod scene;

pub use goal_lanes::{goal_lane_search, GoalLaneBatch};
pub use scene::{resolve_map_path, ActorRecord, Scene, SceneFile, SCENE_HZ};

use crate::geometry::{
    buffer_lane, distance_to_region, frame_from_tangent, make_local_buffer, merge_polygons,
    trajectory_in_region_with, BoundaryPolygon, FrameRecord, PipAlgorithm, RotationFrame,
};
use crate::map_model::{lanes_in_window, nearest_lane, HdMap, LaneSegment, QueryWindow};
use crate::scoring::{ade, fde};
use crate::trajset::{filter_by_initial_speed, Trajectory, TrajectorySet};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Added to the set's largest displacement to size the default window, in m.
pub const WINDOW_MARGIN: f64 = 10.0;

/// How the merged region is clipped before containment checks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LocalBufferMode {
    Off,
    /// A disc around the target with the query window's radius.
    #[default]
    Window,
    Radius(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub algo: PipAlgorithm,
    /// Threads for the containment checks; results do not depend on it.
    pub workers: usize,
    pub local_buffer: LocalBufferMode,
    /// Trajectories returned when nothing survives.
    pub fallback_k: usize,
    pub goal_radius: f64,
    pub heading_tolerance: f64,
    /// If set, only set members whose initial speed is within this many m/s
    /// of the target's current speed are considered.
    pub speed_tolerance: Option<f64>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            algo: PipAlgorithm::RayCast,
            workers: 1,
            local_buffer: LocalBufferMode::Window,
            fallback_k: 6,
            goal_radius: 100.0,
            heading_tolerance: std::f64::consts::FRAC_PI_2,
            speed_tolerance: None,
        }
    }
}

/// Survivors of refinement, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    /// Target-anchored frame.
    pub trajectories: Vec<Trajectory>,
    pub city_trajectories: Vec<Trajectory>,
    /// Index of each survivor in the input set.
    pub source_indices: Vec<usize>,
    pub frame: RotationFrame,
    /// True when no trajectory was compliant and the least-violating ones
    /// were returned instead.
    pub fallback: bool,
}

impl FeasibleSet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub feasible: FeasibleSet,
    /// Goal lanes in the target frame.
    pub goal_lanes: GoalLaneBatch,
    /// Region the containment checks ran against, city coordinates.
    pub region: Vec<BoundaryPolygon>,
}

/// Serialized form of a [`Refinement`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutput {
    pub fallback: bool,
    pub frame: FrameRecord,
    pub survivor_indices: Vec<usize>,
    pub goal_lanes: GoalLaneOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalLaneOutput {
    pub lane_ids: Vec<String>,
    pub chains: Vec<Vec<String>>,
    pub lanes: Vec<Vec<[f64; 3]>>,
}

impl Refinement {
    pub fn output(&self) -> RefineOutput {
        RefineOutput {
            fallback: self.feasible.fallback,
            frame: self.feasible.frame.record(),
            survivor_indices: self.feasible.source_indices.clone(),
            goal_lanes: GoalLaneOutput {
                lane_ids: self.goal_lanes.lane_ids(),
                chains: self.goal_lanes.chains.clone(),
                lanes: self.goal_lanes.lanes.clone(),
            },
        }
    }
}

/// Window centered on the target, wide enough to hold every trajectory of `set`.
pub fn default_window(scene: &Scene, set: &TrajectorySet) -> Result<QueryWindow> {
    QueryWindow::new(scene.target_position(), set.max_displacement() + WINDOW_MARGIN)
}

/// Frame at the target's position, aligned with its nearest lane.
pub fn target_frame(scene: &Scene) -> Result<RotationFrame> {
    let origin = scene.target_position();
    let (_, tangent) = nearest_lane(&scene.map, origin)?;
    frame_from_tangent(origin, tangent)
}

/// Lane envelopes, merged. Each output polygon lists the lanes it came from.
pub fn lanes_region(lanes: &[&LaneSegment]) -> Result<Vec<BoundaryPolygon>> {
    let polys = lanes
        .iter()
        .map(|lane| {
            buffer_lane(&lane.centerline, lane.width, vec![lane.id.clone()])
                .map_err(|e| Error::lane(&lane.id, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    merge_polygons(&polys)
}

/// Merged envelopes of the lanes in `window`.
pub fn drivable_region(map: &HdMap, window: &QueryWindow) -> Result<Vec<BoundaryPolygon>> {
    let lanes = lanes_in_window(map, window);
    if lanes.is_empty() {
        let c = window.center();
        return Err(Error::EmptyWindow {
            x: c.x,
            y: c.y,
            radius: window.radius(),
        });
    }
    lanes_region(&lanes)
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers <= 1 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

/// Prunes `set` to the trajectories that stay on the drivable region.
pub fn refine(scene: &Scene, set: &TrajectorySet, window: &QueryWindow, config: &RefineConfig) -> Result<Refinement> {
    let frame = target_frame(scene)?;
    let merged = drivable_region(&scene.map, window)?;
    let region = match config.local_buffer {
        LocalBufferMode::Off => merged,
        LocalBufferMode::Window => make_local_buffer(frame.origin, window.radius(), &merged)?,
        LocalBufferMode::Radius(r) => make_local_buffer(frame.origin, r, &merged)?,
    };

    let candidates: Vec<usize> = match config.speed_tolerance {
        Some(tol) => filter_by_initial_speed(&set.trajectories, scene.target_speed(), tol),
        None => (0..set.len()).collect(),
    };

    let algo = config.algo;
    let (city, mask): (Vec<Trajectory>, Vec<bool>) = with_workers(config.workers, || {
        candidates
            .par_iter()
            .map(|&i| {
                let t = set.trajectories[i].to_city(&frame);
                let ok = trajectory_in_region_with(t.waypoints(), &region, algo);
                (t, ok)
            })
            .unzip()
    })?;

    let mut keep: Vec<usize> = (0..candidates.len()).filter(|&j| mask[j]).collect();
    let fallback = keep.is_empty() && !candidates.is_empty();
    if fallback {
        keep = least_violating(&city, &region, config.fallback_k, config.workers)?;
    }

    let city_trajectories: Vec<Trajectory> = keep.iter().map(|&j| city[j].clone()).collect();
    let trajectories = city_trajectories.iter().map(|t| t.to_local(&frame)).collect();
    let source_indices = keep.iter().map(|&j| candidates[j]).collect();

    let goal_lanes = goal_lane_search(scene, &scene.map, config.goal_radius, config.heading_tolerance)?.to_local(&frame);

    Ok(Refinement {
        feasible: FeasibleSet {
            trajectories,
            city_trajectories,
            source_indices,
            frame,
            fallback,
        },
        goal_lanes,
        region,
    })
}

/// Positions (ascending) of the `k` trajectories with the smallest summed
/// waypoint distance to the region; ties go to the lower position.
fn least_violating(city: &[Trajectory], region: &[BoundaryPolygon], k: usize, workers: usize) -> Result<Vec<usize>> {
    let excursion: Vec<f64> = with_workers(workers, || {
        city.par_iter()
            .map(|t| t.waypoints().iter().map(|&p| distance_to_region(p, region)).sum())
            .collect()
    })?;
    let mut order: Vec<usize> = (0..city.len()).collect();
    order.sort_by(|&a, &b| excursion[a].total_cmp(&excursion[b]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

/// Lowest ADE and FDE any member of `trajectories` reaches against `truth`.
/// Both are infinite for an empty list.
pub fn lower_bound(trajectories: &[Trajectory], truth: &Trajectory) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for t in trajectories {
        best.0 = best.0.min(ade(t, truth)?);
        best.1 = best.1.min(fde(t, truth)?);
    }
    Ok(best)
}
