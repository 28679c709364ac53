//! Constant-control rollouts of the kinematic bicycle model.
//!
//! State (x, y, heading, speed) with controls (longitudinal acceleration,
//! path curvature). Within a step the path is an exact circular arc whose
//! length comes from the trapezoidal speed profile, so Menger curvature over
//! any three waypoints equals the commanded curvature.

use super::{coverage_reduce, kinematic_filter, KinematicLimits, Trajectory, TrajectorySet, DT, HORIZON};
use crate::geometry::Vec2;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    /// Initial speeds, m/s.
    pub speeds: Vec<f64>,
    /// Constant longitudinal accelerations, m/s².
    pub accels: Vec<f64>,
    /// Constant path curvatures, 1/m.
    pub curvatures: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl ControlGrid {
    /// Evenly spaced grid spanning `[0, max_speed] × [−max_accel, max_accel] × [−max_curvature, max_curvature]`.
    pub fn uniform(limits: &KinematicLimits, n_speeds: usize, n_accels: usize, n_curvatures: usize) -> ControlGrid {
        ControlGrid {
            speeds: linspace(0.0, limits.max_speed, n_speeds),
            accels: linspace(-limits.max_accel, limits.max_accel, n_accels),
            curvatures: linspace(-limits.max_curvature, limits.max_curvature, n_curvatures),
        }
    }

    /// Grid used for the shipped set; reduces to 2,994 trajectories at ε = 2 m.
    pub fn default_for(limits: &KinematicLimits) -> ControlGrid {
        ControlGrid::uniform(limits, 26, 9, 41)
    }

    pub fn len(&self) -> usize {
        self.speeds.len() * self.accels.len() * self.curvatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Waypoints after each of `horizon` steps from the canonical state
/// (origin, heading +x, speed `v0`). Speed is held within `[0, max_speed]`.
pub fn rollout(v0: f64, accel: f64, curvature: f64, limits: &KinematicLimits, horizon: usize) -> Vec<Vec2> {
    let mut pos = Vec2::ZERO;
    let mut heading = 0.0f64;
    let mut v = v0.clamp(0.0, limits.max_speed);
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let v_next = (v + accel * DT).clamp(0.0, limits.max_speed);
        let s = 0.5 * (v + v_next) * DT;
        let turn = curvature * s;
        let step = if turn.abs() < 1e-12 {
            Vec2::new(s * heading.cos(), s * heading.sin())
        } else {
            Vec2::new(
                ((heading + turn).sin() - heading.sin()) / curvature,
                (heading.cos() - (heading + turn).cos()) / curvature,
            )
        };
        pos += step;
        heading += turn;
        v = v_next;
        out.push(pos);
    }
    out
}

/// One rollout per grid point, ordered speed-major, then acceleration, then
/// curvature. Controls outside `limits` are skipped.
pub fn generate_pool(limits: &KinematicLimits, horizon: usize, grid: &ControlGrid) -> Result<Vec<Trajectory>> {
    limits.validate()?;
    if grid.is_empty() || horizon == 0 {
        return Err(Error::Precondition("control grid is empty".into()));
    }
    let mut controls = Vec::with_capacity(grid.len());
    for &v in &grid.speeds {
        for &a in &grid.accels {
            for &k in &grid.curvatures {
                let within = (0.0..=limits.max_speed).contains(&v)
                    && a.abs() <= limits.max_accel
                    && k.abs() <= limits.max_curvature;
                if within {
                    controls.push((v, a, k));
                }
            }
        }
    }
    if controls.is_empty() {
        return Err(Error::Precondition("no control in the grid satisfies the limits".into()));
    }
    controls
        .par_iter()
        .map(|&(v, a, k)| Trajectory::with_len(rollout(v, a, k, limits, horizon)))
        .collect()
}

/// Pool generation, kinematic filtering and ε-coverage reduction in one step.
pub fn build_set(limits: &KinematicLimits, grid: &ControlGrid, epsilon: f64) -> Result<TrajectorySet> {
    let pool = generate_pool(limits, HORIZON, grid)?;
    let feasible = kinematic_filter(&pool, limits);
    if feasible.is_empty() {
        return Err(Error::Precondition("no generated trajectory is kinematically feasible".into()));
    }
    let mut set = coverage_reduce(&feasible, epsilon)?;
    set.limits = *limits;
    Ok(set)
}
