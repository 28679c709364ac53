use super::{KinematicLimits, Trajectory};
use crate::geometry::Vec2;

const SLACK: f64 = 1e-6;

/// Curvature of the circle through three points, 4·area / (|ab|·|bc|·|ca|).
/// Zero when two of the points coincide.
pub fn menger_curvature(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let ab = a.distance(b);
    let bc = b.distance(c);
    let ca = c.distance(a);
    let denom = ab * bc * ca;
    if ab < 1e-12 || bc < 1e-12 || ca < 1e-12 {
        return 0.0;
    }
    2.0 * (b - a).cross(c - a).abs() / denom
}

/// Per-step speed, acceleration magnitude and Menger curvature within limits
/// (each with 1e-6 slack).
pub fn is_kinematically_feasible(traj: &Trajectory, limits: &KinematicLimits) -> bool {
    let w = traj.waypoints();
    let dt = traj.dt();
    let mut prev_speed: Option<f64> = None;
    for k in 1..w.len() {
        let speed = w[k].distance(w[k - 1]) / dt;
        if speed > limits.max_speed + SLACK {
            return false;
        }
        if let Some(prev) = prev_speed {
            if ((speed - prev) / dt).abs() > limits.max_accel + SLACK {
                return false;
            }
        }
        prev_speed = Some(speed);
        if k + 1 < w.len() && menger_curvature(w[k - 1], w[k], w[k + 1]) > limits.max_curvature + SLACK {
            return false;
        }
    }
    true
}

/// Trajectories passing [`is_kinematically_feasible`], in input order.
pub fn kinematic_filter(set: &[Trajectory], limits: &KinematicLimits) -> Vec<Trajectory> {
    set.iter()
        .filter(|t| is_kinematically_feasible(t, limits))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajset::{HORIZON, DT};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn menger_on_circle() {
        let r = 7.0;
        let p = |a: f64| Vec2::new(r * a.cos(), r * a.sin());
        assert!((menger_curvature(p(0.1), p(0.5), p(1.3)) - 1.0 / r).abs() < 1e-12);
        assert_eq!(menger_curvature(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)), 0.0);
        assert_eq!(menger_curvature(Vec2::ZERO, Vec2::ZERO, Vec2::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn straight_constant_speed_kept() {
        let t = Trajectory::new((1..=HORIZON).map(|k| Vec2::new(1.5 * k as f64, 0.0)).collect()).unwrap();
        assert!(is_kinematically_feasible(&t, &KinematicLimits::default()));
    }

    #[test]
    fn right_angle_kink_dropped() {
        let mut pts: Vec<Vec2> = (1..=15).map(|k| Vec2::new(k as f64, 0.0)).collect();
        pts.extend((1..=15).map(|k| Vec2::new(15.0, k as f64)));
        let t = Trajectory::new(pts).unwrap();
        assert!(!is_kinematically_feasible(&t, &KinematicLimits::default()));
        assert!(kinematic_filter(&[t], &KinematicLimits::default()).is_empty());
    }

    #[test]
    fn speed_and_accel_limits() {
        let limits = KinematicLimits::default();
        let fast = Trajectory::new((1..=HORIZON).map(|k| Vec2::new(3.0 * k as f64, 0.0)).collect()).unwrap();
        assert!(!is_kinematically_feasible(&fast, &limits));
        // Speed jumps from 0 to 10 m/s in one step: 100 m/s².
        let mut x = 0.0;
        let jerk: Vec<Vec2> = (0..HORIZON)
            .map(|k| {
                x += if k < 10 { 0.0 } else { 1.0 };
                Vec2::new(x, 0.0)
            })
            .collect();
        assert!(!is_kinematically_feasible(&Trajectory::new(jerk).unwrap(), &limits));
    }

    #[test]
    fn filter_matches_elementwise_oracle_and_is_idempotent() {
        let limits = KinematicLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let set: Vec<Trajectory> = (0..300)
            .map(|_| {
                let v = rng.gen_range(0.0..30.0);
                let wobble = rng.gen_range(0.0..0.3);
                let mut p = Vec2::ZERO;
                let mut heading = 0.0f64;
                let pts = (0..HORIZON)
                    .map(|_| {
                        heading += rng.gen_range(-wobble..wobble);
                        p += Vec2::new(heading.cos(), heading.sin()) * (v * DT);
                        p
                    })
                    .collect();
                Trajectory::new(pts).unwrap()
            })
            .collect();
        let kept = kinematic_filter(&set, &limits);
        let oracle: Vec<Trajectory> = set
            .iter()
            .filter(|t| {
                let w = t.waypoints();
                let speeds: Vec<f64> = w.windows(2).map(|p| {
                    let d = p[1] - p[0];
                    (d.x * d.x + d.y * d.y).sqrt() / DT
                }).collect();
                let accel_ok = speeds.windows(2).all(|s| ((s[1] - s[0]) / DT).abs() <= limits.max_accel + 1e-6);
                let speed_ok = speeds.iter().all(|&s| s <= limits.max_speed + 1e-6);
                let curv_ok = w.windows(3).all(|p| {
                    let (a, b, c) = (p[0], p[1], p[2]);
                    let area2 = ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs();
                    let prod = a.distance(b) * b.distance(c) * c.distance(a);
                    prod < 1e-30 || 2.0 * area2 / prod <= limits.max_curvature + 1e-6
                });
                speed_ok && accel_ok && curv_ok
            })
            .cloned()
            .collect();
        assert_eq!(kept, oracle);
        assert!(!kept.is_empty() && kept.len() < set.len());
        assert_eq!(kinematic_filter(&kept, &limits), kept);
    }
}
