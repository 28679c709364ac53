//! Scenes: observed actors, optional ground truth and the map they live on.
//!
//! File schema, with `null` observations marking padded steps and `map`
//! resolved relative to the scene file:
//!
//! ```json
//! {"target": "AV", "actors": [{"id": "AV", "observed": [[x, y], null, ...]}],
//!  "ground_truth": [[x, y], ...], "map": "map.json"}
//! ```

use crate::geometry::Vec2;
use crate::map_model::{load_map, HdMap};
use crate::trajset::{PastTrajectory, Trajectory, DT, HORIZON};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Sampling rate of scene data.
pub const SCENE_HZ: u32 = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActorRecord {
    pub id: String,
    pub observed: Vec<Option<Vec2>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub target: String,
    pub actors: Vec<ActorRecord>,
    pub ground_truth: Option<Vec<Vec2>>,
    pub map: String,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub target: String,
    pub actors: BTreeMap<String, PastTrajectory>,
    pub ground_truth: Option<Trajectory>,
    pub map: Arc<HdMap>,
    /// Map path as written in the scene file.
    pub map_ref: String,
}

impl Scene {
    pub fn new(
        target: impl Into<String>,
        actors: BTreeMap<String, PastTrajectory>,
        ground_truth: Option<Trajectory>,
        map: Arc<HdMap>,
        map_ref: impl Into<String>,
    ) -> Result<Scene> {
        let target = target.into();
        let past = actors
            .get(&target)
            .ok_or_else(|| Error::InvalidScene(format!("target actor {target} is not among the actors")))?;
        if !past.is_fully_observed() {
            return Err(Error::InvalidScene(format!(
                "target actor {target} has padded past steps"
            )));
        }
        if let Some(gt) = &ground_truth {
            if gt.len() != HORIZON {
                return Err(Error::InvalidScene(format!(
                    "ground truth has {} steps, expected {HORIZON}",
                    gt.len()
                )));
            }
        }
        Ok(Scene {
            target,
            actors,
            ground_truth,
            map,
            map_ref: map_ref.into(),
        })
    }

    pub fn from_file(file: SceneFile, map: Arc<HdMap>) -> Result<Scene> {
        let mut actors = BTreeMap::new();
        for a in file.actors {
            let past = PastTrajectory::new(a.observed)
                .map_err(|e| Error::InvalidScene(format!("actor {}: {e}", a.id)))?;
            if actors.insert(a.id.clone(), past).is_some() {
                return Err(Error::InvalidScene(format!("duplicate actor id {}", a.id)));
            }
        }
        let gt = file
            .ground_truth
            .map(Trajectory::with_len)
            .transpose()
            .map_err(|e| Error::InvalidScene(format!("ground truth: {e}")))?;
        Scene::new(file.target, actors, gt, map, file.map)
    }

    /// Loads the scene and the map it references (relative to the scene file).
    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        let path = path.as_ref();
        let file = read_scene_file(path)?;
        let map_path = resolve_map_path(path, &file.map);
        let map = Arc::new(load_map(&map_path)?);
        Scene::from_file(file, map)
    }

    /// Loads the scene but uses `map` instead of the referenced file.
    pub fn load_with_map(path: impl AsRef<Path>, map: Arc<HdMap>) -> Result<Scene> {
        Scene::from_file(read_scene_file(path.as_ref())?, map)
    }

    pub fn to_file(&self) -> SceneFile {
        SceneFile {
            target: self.target.clone(),
            actors: self
                .actors
                .iter()
                .map(|(id, past)| ActorRecord {
                    id: id.clone(),
                    observed: past.observed().to_vec(),
                })
                .collect(),
            ground_truth: self.ground_truth.as_ref().map(|t| t.waypoints().to_vec()),
            map: self.map_ref.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_file()).expect("scene serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn target_past(&self) -> &PastTrajectory {
        &self.actors[&self.target]
    }

    /// Current (last observed) position of the target.
    pub fn target_position(&self) -> Vec2 {
        self.target_past().last_observed().expect("target is fully observed")
    }

    pub fn target_heading(&self) -> Option<Vec2> {
        self.target_past().heading()
    }

    /// Speed over the last observed step.
    pub fn target_speed(&self) -> f64 {
        let obs = self.target_past().observed();
        match (obs[obs.len() - 2], obs[obs.len() - 1]) {
            (Some(a), Some(b)) => a.distance(b) / DT,
            _ => 0.0,
        }
    }

    /// The same scene with every coordinate (map, actors, ground truth) mapped through `f`.
    pub fn transformed(&self, f: impl Fn(Vec2) -> Vec2 + Copy) -> Scene {
        Scene {
            target: self.target.clone(),
            actors: self.actors.iter().map(|(id, p)| (id.clone(), p.map_points(f))).collect(),
            ground_truth: self.ground_truth.as_ref().map(|t| t.map_points(f)),
            map: Arc::new(self.map.map_points(f)),
            map_ref: self.map_ref.clone(),
        }
    }
}

fn read_scene_file(path: &Path) -> Result<SceneFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

pub fn resolve_map_path(scene_path: &Path, map_ref: &str) -> PathBuf {
    let map_path = Path::new(map_ref);
    if map_path.is_absolute() {
        map_path.to_path_buf()
    } else {
        scene_path.parent().unwrap_or(Path::new(".")).join(map_path)
    }
}
