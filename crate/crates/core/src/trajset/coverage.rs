//! Greedy ε-cover of a trajectory pool under √Dist.

use super::{dist_within, SetFrame, Trajectory, TrajectorySet, KinematicLimits};
use crate::geometry::Vec2;
use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::HashMap;

/// Buckets trajectories by endpoint on an ε-sized grid. Two trajectories
/// within ε under √Dist have endpoints within ε, so only the 3×3
/// neighborhood of a cell needs checking.
struct EndpointGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl EndpointGrid {
    fn new(cell: f64) -> Self {
        EndpointGrid {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Vec2, idx: usize) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(idx);
    }

    fn neighbors(&self, p: Vec2) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = self.key(p);
        (-1..=1).flat_map(move |dx| {
            (-1..=1).flat_map(move |dy| self.buckets.get(&(cx + dx, cy + dy)).into_iter().flatten().copied())
        })
    }
}

/// Greedy set cover at radius `epsilon` (meters, compared against √Dist).
///
/// Candidates are visited in descending order of how many pool members lie
/// within ε of them, ties by pool index; a candidate is kept iff it is farther
/// than ε from everything kept so far. Every pool member therefore ends up
/// within ε of a kept trajectory. Sequential by construction.
pub fn coverage_reduce(pool: &[Trajectory], epsilon: f64) -> Result<TrajectorySet> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be > 0, got {epsilon}")));
    }
    if pool.is_empty() {
        return Err(Error::Precondition("trajectory pool is empty".into()));
    }
    let len = pool[0].len();
    if let Some(bad) = pool.iter().find(|t| t.len() != len) {
        return Err(Error::LengthMismatch {
            left: bad.len(),
            right: len,
        });
    }
    let eps_sq = epsilon * epsilon;
    // Cell size must stay finite for huge ε.
    let cell = epsilon.min(1e9);
    let mut grid = EndpointGrid::new(cell);
    for (i, t) in pool.iter().enumerate() {
        grid.insert(t.endpoint(), i);
    }
    let counts: Vec<usize> = pool
        .par_iter()
        .map(|t| {
            grid.neighbors(t.endpoint())
                .filter(|&j| dist_within(t.waypoints(), pool[j].waypoints(), eps_sq))
                .count()
        })
        .collect();
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));

    let mut kept_grid = EndpointGrid::new(cell);
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let t = pool[i].waypoints();
        let covered = kept_grid
            .neighbors(pool[i].endpoint())
            .any(|k| dist_within(t, pool[kept[k]].waypoints(), eps_sq));
        if !covered {
            kept_grid.insert(pool[i].endpoint(), kept.len());
            kept.push(i);
        }
    }
    Ok(TrajectorySet {
        trajectories: kept.into_iter().map(|i| pool[i].clone()).collect(),
        epsilon,
        frame: SetFrame::Canonical,
        limits: KinematicLimits::default(),
    })
}

/// Achieved coverage: max over the pool of the √Dist to the nearest set member.
pub fn coverage_radius(pool: &[Trajectory], set: &[Trajectory]) -> f64 {
    pool.par_iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            for s in set {
                let mut worst = 0.0f64;
                for (a, b) in p.waypoints().iter().zip(s.waypoints()) {
                    worst = worst.max(a.distance_sq(*b));
                    if worst >= best {
                        break;
                    }
                }
                best = best.min(worst);
            }
            best
        })
        .reduce(|| 0.0, f64::max)
        .sqrt()
}
