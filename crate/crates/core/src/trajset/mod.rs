//! Candidate trajectory sets: the trajectory types, the `Dist` metric,
//! kinematic pool generation, ε-coverage reduction and set files.

mod coverage;
mod generate;
mod io;
mod kinematics;
mod resample;

pub use coverage::{coverage_radius, coverage_reduce};
pub use generate::{build_set, generate_pool, rollout, ControlGrid};
pub use io::{load_set, metadata_path, save_set, SetMetadata};
pub use kinematics::{is_kinematically_feasible, kinematic_filter, menger_curvature};
pub use resample::resample;

use crate::geometry::{RotationFrame, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Prediction horizon in steps (3 s at 10 Hz).
pub const HORIZON: usize = 30;
/// Observed past in steps (2 s at 10 Hz).
pub const PAST_STEPS: usize = 20;
/// Timestep in seconds.
pub const DT: f64 = 0.1;

/// Future waypoints `s_1 .. s_n`; the current position is not included.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Vec2>,
    dt: f64,
}

impl Trajectory {
    /// A full-horizon trajectory of exactly [`HORIZON`] waypoints.
    pub fn new(waypoints: Vec<Vec2>) -> Result<Trajectory> {
        if waypoints.len() != HORIZON {
            return Err(Error::LengthMismatch {
                left: waypoints.len(),
                right: HORIZON,
            });
        }
        Self::with_len(waypoints)
    }

    /// Any non-empty length, for inputs that still have to be resampled.
    pub fn with_len(waypoints: Vec<Vec2>) -> Result<Trajectory> {
        if waypoints.is_empty() {
            return Err(Error::Precondition("trajectory has no waypoints".into()));
        }
        if waypoints.iter().any(|p| !p.is_finite()) {
            return Err(Error::Precondition("trajectory has non-finite coordinates".into()));
        }
        Ok(Trajectory { waypoints, dt: DT })
    }

    pub fn waypoints(&self) -> &[Vec2] {
        &self.waypoints
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn endpoint(&self) -> Vec2 {
        *self.waypoints.last().expect("non-empty")
    }

    /// Local (set) coordinates to city coordinates.
    pub fn to_city(&self, frame: &RotationFrame) -> Trajectory {
        self.map_points(|p| frame.point_to_city(p))
    }

    pub fn to_local(&self, frame: &RotationFrame) -> Trajectory {
        self.map_points(|p| frame.point_to_local(p))
    }

    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> Trajectory {
        Trajectory {
            waypoints: self.waypoints.iter().map(|&p| f(p)).collect(),
            dt: self.dt,
        }
    }

    pub fn into_waypoints(self) -> Vec<Vec2> {
        self.waypoints
    }
}

/// `Dist(a, b) = max_t ‖a_t − b_t‖²`, in m².
pub fn dist(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a
        .waypoints
        .iter()
        .zip(&b.waypoints)
        .map(|(p, q)| p.distance_sq(*q))
        .fold(0.0, f64::max))
}

/// `Dist(a, b) ≤ limit_sq`, stopping at the first step over the limit.
/// Lengths must match.
#[inline]
pub(crate) fn dist_within(a: &[Vec2], b: &[Vec2], limit_sq: f64) -> bool {
    a.iter().zip(b).all(|(p, q)| p.distance_sq(*q) <= limit_sq)
}

/// Observed past of an actor. `None` entries are padding (unobserved steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PastTrajectory {
    observed: Vec<Option<Vec2>>,
}

impl PastTrajectory {
    pub fn new(observed: Vec<Option<Vec2>>) -> Result<PastTrajectory> {
        if observed.len() != PAST_STEPS {
            return Err(Error::LengthMismatch {
                left: observed.len(),
                right: PAST_STEPS,
            });
        }
        if observed.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::Precondition("past trajectory has non-finite coordinates".into()));
        }
        Ok(PastTrajectory { observed })
    }

    pub fn observed(&self) -> &[Option<Vec2>] {
        &self.observed
    }

    /// `true` at padded steps.
    pub fn padding_mask(&self) -> Vec<bool> {
        self.observed.iter().map(Option::is_none).collect()
    }

    /// Waypoints with padded steps set to the origin.
    pub fn zero_padded(&self) -> Vec<Vec2> {
        self.observed.iter().map(|p| p.unwrap_or(Vec2::ZERO)).collect()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.observed.iter().all(Option::is_some)
    }

    pub fn last_observed(&self) -> Option<Vec2> {
        self.observed.iter().rev().flatten().next().copied()
    }

    /// Direction between the last two observed waypoints, if they differ.
    pub fn heading(&self) -> Option<Vec2> {
        let mut obs = self.observed.iter().rev().flatten();
        let last = *obs.next()?;
        let prev = *obs.next()?;
        (last - prev).normalized()
    }

    /// Observed points mapped through `f`; padding stays padding.
    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> PastTrajectory {
        PastTrajectory {
            observed: self.observed.iter().map(|p| p.map(&f)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// 1/m
    pub max_curvature: f64,
    /// m/s²
    pub max_accel: f64,
    /// m/s
    pub max_speed: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        KinematicLimits {
            max_curvature: 0.3,
            max_accel: 8.0,
            max_speed: 25.0,
        }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.max_curvature) && ok(self.max_accel) && ok(self.max_speed) {
            Ok(())
        } else {
            Err(Error::Precondition(format!("kinematic limits must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetFrame {
    /// Origin-anchored, heading +x.
    #[default]
    Canonical,
    Local,
    City,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub trajectories: Vec<Trajectory>,
    pub epsilon: f64,
    pub frame: SetFrame,
    pub limits: KinematicLimits,
}

impl TrajectorySet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Largest distance of any waypoint from the origin.
    pub fn max_displacement(&self) -> f64 {
        self.trajectories
            .iter()
            .flat_map(|t| t.waypoints())
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    }
}

/// Speed over the first step from the origin, for sets in the canonical frame.
pub fn initial_speed(traj: &Trajectory) -> f64 {
    traj.waypoints()[0].norm() / traj.dt()
}

/// Keeps trajectories whose initial speed is within `tolerance` of `speed`.
/// Indices refer to the input order, which is preserved.
pub fn filter_by_initial_speed(trajs: &[Trajectory], speed: f64, tolerance: f64) -> Vec<usize> {
    trajs
        .iter()
        .enumerate()
        .filter(|(_, t)| (initial_speed(t) - speed).abs() <= tolerance)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn straight(offset_y: f64, speed: f64) -> Trajectory {
        Trajectory::new((1..=HORIZON).map(|k| Vec2::new(speed * DT * k as f64, offset_y)).collect()).unwrap()
    }

    fn random_traj(rng: &mut ChaCha8Rng) -> Trajectory {
        Trajectory::new((0..HORIZON).map(|_| Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0))).collect())
            .unwrap()
    }

    #[test]
    fn dist_self_is_zero_and_constant_offset_is_squared() {
        let a = straight(0.0, 10.0);
        assert_eq!(dist(&a, &a).unwrap(), 0.0);
        let b = straight(2.0, 10.0);
        assert_eq!(dist(&a, &b).unwrap(), 4.0);
    }

    #[test]
    fn dist_length_mismatch() {
        let a = straight(0.0, 10.0);
        let b = Trajectory::with_len(vec![Vec2::ZERO; 5]).unwrap();
        assert!(matches!(dist(&a, &b), Err(Error::LengthMismatch { left: 30, right: 5 })));
    }

    #[test]
    fn dist_matches_elementwise_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = random_traj(&mut rng);
            let b = random_traj(&mut rng);
            let mut best = 0.0f64;
            for t in 0..HORIZON {
                let dx = a.waypoints()[t].x - b.waypoints()[t].x;
                let dy = a.waypoints()[t].y - b.waypoints()[t].y;
                best = best.max(dx * dx + dy * dy);
            }
            assert_eq!(dist(&a, &b).unwrap(), best);
            assert_eq!(dist(&b, &a).unwrap(), best);
        }
    }

    #[test]
    fn sqrt_dist_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let (a, b, c) = (random_traj(&mut rng), random_traj(&mut rng), random_traj(&mut rng));
            let ab = dist(&a, &b).unwrap().sqrt();
            let bc = dist(&b, &c).unwrap().sqrt();
            let ac = dist(&a, &c).unwrap().sqrt();
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn trajectory_invariants() {
        assert!(Trajectory::new(vec![Vec2::ZERO; 29]).is_err());
        let mut pts = vec![Vec2::ZERO; 30];
        pts[3].x = f64::NAN;
        assert!(Trajectory::new(pts).is_err());
    }

    #[test]
    fn past_trajectory_mask_and_heading() {
        let mut obs: Vec<Option<Vec2>> = (0..PAST_STEPS).map(|k| Some(Vec2::new(k as f64, 0.0))).collect();
        obs[0] = None;
        obs[1] = None;
        let past = PastTrajectory::new(obs).unwrap();
        assert_eq!(past.padding_mask().iter().filter(|&&m| m).count(), 2);
        assert!(!past.is_fully_observed());
        assert_eq!(past.zero_padded()[0], Vec2::ZERO);
        assert_eq!(past.last_observed(), Some(Vec2::new(19.0, 0.0)));
        assert_eq!(past.heading(), Some(Vec2::new(1.0, 0.0)));
        assert!(PastTrajectory::new(vec![None; 3]).is_err());
    }

    #[test]
    fn initial_speed_filter() {
        let set = vec![straight(0.0, 5.0), straight(0.0, 10.0), straight(0.0, 10.5)];
        assert_eq!(filter_by_initial_speed(&set, 10.0, 1.0), vec![1, 2]);
    }
}
