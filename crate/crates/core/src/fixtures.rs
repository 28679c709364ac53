//! Seeded synthetic scenes: a small lane map, a target driving along it at
//! constant speed, and a few other actors with padded pasts.
//!
//! Every fixture is laid out in a canonical frame and then moved by a random
//! rigid transform, so nothing downstream can rely on axis alignment.

use crate::geometry::{RotationFrame, Vec2};
use crate::map_model::{save_map, HdMap, LaneSegment};
use crate::refinement::Scene;
use crate::trajset::{PastTrajectory, Trajectory, DT, HORIZON, PAST_STEPS};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

pub const LANE_WIDTH: f64 = 3.75;
pub const TARGET_ID: &str = "AGENT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureKind {
    Straight,
    Curve,
    TIntersection,
    Fork,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 4] = [
        FixtureKind::Straight,
        FixtureKind::Curve,
        FixtureKind::TIntersection,
        FixtureKind::Fork,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Straight => "straight",
            FixtureKind::Curve => "curve",
            FixtureKind::TIntersection => "t_intersection",
            FixtureKind::Fork => "fork",
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "unknown fixture {s:?}; expected straight, curve, t_intersection or fork"
                ))
            })
    }
}

/// Arc-length parameterized polyline.
struct Path2 {
    points: Vec<Vec2>,
    stations: Vec<f64>,
}

impl Path2 {
    fn new(points: Vec<Vec2>) -> Path2 {
        let mut stations = vec![0.0];
        for w in points.windows(2) {
            stations.push(stations.last().unwrap() + w[0].distance(w[1]));
        }
        Path2 { points, stations }
    }

    fn length(&self) -> f64 {
        *self.stations.last().unwrap()
    }

    /// Point at station `s`, clamped to the path.
    fn at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let i = match self.stations.partition_point(|&x| x <= s) {
            0 => 0,
            k => (k - 1).min(self.points.len() - 2),
        };
        let seg = self.stations[i + 1] - self.stations[i];
        let t = if seg > 0.0 { (s - self.stations[i]) / seg } else { 0.0 };
        self.points[i].lerp(self.points[i + 1], t)
    }
}

fn straight(from: Vec2, to: Vec2, step: f64) -> Vec<Vec2> {
    let n = (from.distance(to) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| from.lerp(to, i as f64 / n as f64)).collect()
}

/// Arc around `center` from angle `a0` to `a1`, about 1 m between points.
fn arc(center: Vec2, radius: f64, a0: f64, a1: f64) -> Vec<Vec2> {
    let n = ((a1 - a0).abs() * radius).ceil().max(2.0) as usize;
    (0..=n)
        .map(|i| {
            let a = a0 + (a1 - a0) * i as f64 / n as f64;
            center + Vec2::new(a.cos(), a.sin()) * radius
        })
        .collect()
}

fn join(mut a: Vec<Vec2>, b: Vec<Vec2>) -> Vec<Vec2> {
    let skip = usize::from(a.last().zip(b.first()).is_some_and(|(p, q)| p.distance(*q) < 1e-9));
    a.extend(b.into_iter().skip(skip));
    a
}

fn lane(id: &str, centerline: Vec<Vec2>, successors: &[&str], predecessors: &[&str]) -> LaneSegment {
    LaneSegment {
        id: id.to_string(),
        width: LANE_WIDTH,
        centerline,
        successors: successors.iter().map(|s| s.to_string()).collect(),
        predecessors: predecessors.iter().map(|s| s.to_string()).collect(),
    }
}

struct Layout {
    lanes: Vec<LaneSegment>,
    /// Route the target follows and its current station on it.
    route: Path2,
    station: f64,
}

fn layout(kind: FixtureKind, rng: &mut ChaCha8Rng) -> Layout {
    match kind {
        FixtureKind::Straight => {
            let line = straight(Vec2::new(-80.0, 0.0), Vec2::new(160.0, 0.0), 2.0);
            Layout {
                route: Path2::new(line.clone()),
                station: 80.0,
                lanes: vec![lane("L0", line, &[], &[])],
            }
        }
        FixtureKind::Curve => {
            let r = rng.gen_range(50.0..100.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            // Lead-in, then a constant-radius bend of 150 m.
            let lead = straight(Vec2::new(-60.0, 0.0), Vec2::ZERO, 2.0);
            let sweep = 150.0 / r;
            let bend = if sign > 0.0 {
                arc(Vec2::new(0.0, r), r, -FRAC_PI_2, -FRAC_PI_2 + sweep)
            } else {
                arc(Vec2::new(0.0, -r), r, FRAC_PI_2, FRAC_PI_2 - sweep)
            };
            let line = join(lead, bend);
            Layout {
                route: Path2::new(line.clone()),
                station: rng.gen_range(40.0..90.0),
                lanes: vec![lane("C0", line, &[], &[])],
            }
        }
        FixtureKind::TIntersection => {
            let stem = straight(Vec2::new(0.0, -100.0), Vec2::ZERO, 2.0);
            let left = join(
                arc(Vec2::new(-10.0, 0.0), 10.0, 0.0, FRAC_PI_2),
                straight(Vec2::new(-10.0, 10.0), Vec2::new(-80.0, 10.0), 2.0),
            );
            let right = join(
                arc(Vec2::new(10.0, 0.0), 10.0, PI, FRAC_PI_2),
                straight(Vec2::new(10.0, 10.0), Vec2::new(80.0, 10.0), 2.0),
            );
            let main = straight(
                Vec2::new(100.0, 10.0 + LANE_WIDTH),
                Vec2::new(-100.0, 10.0 + LANE_WIDTH),
                2.0,
            );
            let turn = if rng.gen_bool(0.5) { left.clone() } else { right.clone() };
            let route = Path2::new(join(stem.clone(), turn));
            Layout {
                station: 100.0 - rng.gen_range(8.0..40.0),
                route,
                lanes: vec![
                    lane("M", main, &[], &[]),
                    lane("S", stem, &["TL", "TR"], &[]),
                    lane("TL", left, &[], &["S"]),
                    lane("TR", right, &[], &["S"]),
                ],
            }
        }
        FixtureKind::Fork => {
            let trunk = straight(Vec2::new(-100.0, 0.0), Vec2::ZERO, 2.0);
            let r = 150.0;
            let sweep = 100.0 / r;
            let up = arc(Vec2::new(0.0, r), r, -FRAC_PI_2, -FRAC_PI_2 + sweep);
            let down = arc(Vec2::new(0.0, -r), r, FRAC_PI_2, FRAC_PI_2 - sweep);
            let branch = if rng.gen_bool(0.5) { up.clone() } else { down.clone() };
            let route = Path2::new(join(trunk.clone(), branch));
            Layout {
                station: 100.0 - rng.gen_range(5.0..40.0),
                route,
                lanes: vec![
                    lane("L1", trunk, &["L2", "L3"], &[]),
                    lane("L2", up, &[], &["L1"]),
                    lane("L3", down, &[], &["L1"]),
                ],
            }
        }
    }
}

/// Positions at `s0 + k·v·dt` for `k` in `ks`.
fn drive(route: &Path2, s0: f64, v: f64, ks: impl Iterator<Item = i64>) -> Vec<Vec2> {
    ks.map(|k| route.at(s0 + k as f64 * v * DT)).collect()
}

/// Builds the fixture scene. The map reference is `map.json`.
pub fn make_fixture(kind: FixtureKind, seed: u64) -> Result<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Layout { lanes, route, station } = layout(kind, &mut rng);
    let v = rng.gen_range(3.0..14.0);
    let past_steps = PAST_STEPS as i64;

    let mut actors = BTreeMap::new();
    let past = drive(&route, station, v, -(past_steps - 1)..=0);
    actors.insert(TARGET_ID.to_string(), PastTrajectory::new(past.into_iter().map(Some).collect())?);
    let gt = drive(&route, station, v, 1..=HORIZON as i64);

    let others = rng.gen_range(1..=4);
    for a in 0..others {
        let l = &lanes[rng.gen_range(0..lanes.len())];
        let path = Path2::new(l.centerline.clone());
        let speed = rng.gen_range(0.0..12.0);
        let s = rng.gen_range(0.0..path.length());
        let pad = rng.gen_range(0..=12);
        let observed = drive(&path, s, speed, -(past_steps - 1)..=0)
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i >= pad).then_some(p))
            .collect();
        actors.insert(format!("A{}", a + 1), PastTrajectory::new(observed)?);
    }

    let theta = rng.gen_range(0.0..2.0 * PI);
    let shift = Vec2::new(rng.gen_range(-1000.0..1000.0), rng.gen_range(-1000.0..1000.0));
    let place = RotationFrame::from_angle(shift, theta);
    let to_world = |p: Vec2| place.point_to_city(p);

    let map = HdMap::new(format!("fixture-{kind}-{seed}"), lanes)?.map_points(to_world);
    let actors = actors.into_iter().map(|(id, p)| (id, p.map_points(to_world))).collect();
    let gt = Trajectory::new(gt)?.map_points(to_world);
    Scene::new(TARGET_ID, actors, Some(gt), Arc::new(map), "map.json")
}

/// Writes `<stem>_map.json` and `<stem>_scene.json` under `dir`.
pub fn write_fixture(scene: &Scene, dir: impl AsRef<Path>, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let map_name = format!("{stem}_map.json");
    let map_path = dir.join(&map_name);
    let scene_path = dir.join(format!("{stem}_scene.json"));
    save_map(&scene.map, &map_path)?;
    let mut scene = scene.clone();
    scene.map_ref = map_name;
    scene.save(&scene_path)?;
    Ok((map_path, scene_path))
}
