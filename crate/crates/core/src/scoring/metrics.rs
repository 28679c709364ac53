//! Displacement errors, miss rate and drivable-area compliance.

use crate::geometry::{trajectory_in_region, BoundaryPolygon};
use crate::trajset::Trajectory;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Endpoint distance (m) beyond which a prediction misses.
pub const MISS_THRESHOLD: f64 = 2.0;

fn check_len(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Mean per-step Euclidean error, m.
pub fn ade(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    check_len(a, b)?;
    let sum: f64 = a.waypoints().iter().zip(b.waypoints()).map(|(p, q)| p.distance(*q)).sum();
    Ok(sum / a.len() as f64)
}

/// Final-step Euclidean error, m.
pub fn fde(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.endpoint().distance(b.endpoint()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    #[serde(rename = "minADE")]
    pub min_ade: f64,
    #[serde(rename = "minFDE")]
    pub min_fde: f64,
    /// 1 if every endpoint misses, else 0.
    #[serde(rename = "MR")]
    pub mr: f64,
    #[serde(rename = "DAC")]
    pub dac: f64,
}

pub fn metrics(predictions: &[Trajectory], gt: &Trajectory, map_region: &[BoundaryPolygon]) -> Result<SceneMetrics> {
    if predictions.is_empty() {
        return Err(Error::Precondition("no predictions to evaluate".into()));
    }
    let mut min_ade = f64::INFINITY;
    let mut min_fde = f64::INFINITY;
    let mut off_road = 0usize;
    for p in predictions {
        min_ade = min_ade.min(ade(p, gt)?);
        min_fde = min_fde.min(fde(p, gt)?);
        if !trajectory_in_region(p.waypoints(), map_region) {
            off_road += 1;
        }
    }
    let a = predictions.len() as f64;
    Ok(SceneMetrics {
        min_ade,
        min_fde,
        mr: if min_fde > MISS_THRESHOLD { 1.0 } else { 0.0 },
        dac: (a - off_road as f64) / a,
    })
}

/// Per-metric means over scenes; MR becomes the fraction of missed scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    #[serde(flatten)]
    pub mean: SceneMetrics,
    pub scenes: usize,
}

pub fn aggregate(scenes: &[SceneMetrics]) -> Result<BatchMetrics> {
    if scenes.is_empty() {
        return Err(Error::Precondition("no scenes to aggregate".into()));
    }
    let n = scenes.len() as f64;
    let mean = |f: fn(&SceneMetrics) -> f64| scenes.iter().map(f).sum::<f64>() / n;
    Ok(BatchMetrics {
        mean: SceneMetrics {
            min_ade: mean(|m| m.min_ade),
            min_fde: mean(|m| m.min_fde),
            mr: mean(|m| m.mr),
            dac: mean(|m| m.dac),
        },
        scenes: scenes.len(),
    })
}
