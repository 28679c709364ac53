//! Trajectory-set files: `traj_id,step,x,y` CSV plus a JSON metadata sidecar
//! `{epsilon, dt, horizon, limits}` next to it (same stem, `.json`).

use super::{KinematicLimits, SetFrame, Trajectory, TrajectorySet, DT};
use crate::geometry::Vec2;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetMetadata {
    pub epsilon: f64,
    pub dt: f64,
    pub horizon: usize,
    pub limits: KinematicLimits,
}

#[derive(Serialize, Deserialize)]
struct Row {
    traj_id: usize,
    step: usize,
    x: f64,
    y: f64,
}

pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn save_set(set: &TrajectorySet, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let mut writer = csv::Writer::from_path(csv_path).map_err(|e| csv_error(csv_path, e))?;
    for (id, traj) in set.trajectories.iter().enumerate() {
        for (step, p) in traj.waypoints().iter().enumerate() {
            writer
                .serialize(Row {
                    traj_id: id,
                    step,
                    x: p.x,
                    y: p.y,
                })
                .map_err(|e| csv_error(csv_path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(csv_path, e))?;
    let meta = SetMetadata {
        epsilon: set.epsilon,
        dt: set.trajectories.first().map_or(DT, Trajectory::dt),
        horizon: set.trajectories.first().map_or(0, Trajectory::len),
        limits: set.limits,
    };
    let meta_path = metadata_path(csv_path);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))
}

pub fn load_set(csv_path: impl AsRef<Path>) -> Result<TrajectorySet> {
    let csv_path = csv_path.as_ref();
    let meta_path = metadata_path(csv_path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SetMetadata =
        serde_json::from_str(&meta_text).map_err(|e| Error::parse(meta_path.display().to_string(), e))?;
    meta.limits.validate()?;

    let mut reader = csv::Reader::from_path(csv_path).map_err(|e| csv_error(csv_path, e))?;
    let mut trajectories: Vec<Vec<Vec2>> = Vec::new();
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| csv_error(csv_path, e))?;
        if row.traj_id == trajectories.len() {
            trajectories.push(Vec::with_capacity(meta.horizon));
        }
        let current = trajectories.len().checked_sub(1);
        if current != Some(row.traj_id) {
            return Err(Error::parse(
                csv_path.display().to_string(),
                format!("row {}: trajectory ids must be contiguous and ascending", line + 2),
            ));
        }
        let traj = trajectories.last_mut().expect("pushed above");
        if row.step != traj.len() {
            return Err(Error::parse(
                csv_path.display().to_string(),
                format!("row {}: expected step {}, got {}", line + 2, traj.len(), row.step),
            ));
        }
        traj.push(Vec2::new(row.x, row.y));
    }
    let trajectories = trajectories
        .into_iter()
        .map(|w| {
            if w.len() != meta.horizon {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: meta.horizon,
                });
            }
            Trajectory::with_len(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectorySet {
        trajectories,
        epsilon: meta.epsilon,
        frame: SetFrame::Canonical,
        limits: meta.limits,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path.display().to_string(), format!("{other:?}")),
        }
    } else {
        Error::parse(path.display().to_string(), e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajset::{build_set, ControlGrid};

    #[test]
    fn round_trip_preserves_set() {
        let limits = KinematicLimits::default();
        let set = build_set(&limits, &ControlGrid::uniform(&limits, 4, 3, 5), 2.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.csv");
        save_set(&set, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("traj_id,step,x,y\n"));
        let back = load_set(&path).unwrap();
        assert_eq!(back, set);
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("set.json")).unwrap()).unwrap();
        assert_eq!(meta["horizon"], 30);
        assert_eq!(meta["epsilon"], 2.0);
    }

    #[test]
    fn missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_set(dir.path().join("nope.csv")).unwrap_err().is_io());
    }

    #[test]
    fn out_of_order_steps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "traj_id,step,x,y\n0,1,0.0,0.0\n").unwrap();
        let meta = SetMetadata {
            epsilon: 2.0,
            dt: 0.1,
            horizon: 1,
            limits: KinematicLimits::default(),
        };
        std::fs::write(metadata_path(&path), serde_json::to_string(&meta).unwrap()).unwrap();
        assert!(matches!(load_set(&path), Err(Error::Parse { .. })));
    }
}
