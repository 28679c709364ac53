//! Point-in-polygon benchmark: a correctness gate across algorithms, then
//! per-algorithm timing, then a full-set trajectory-in-region timing.

use crate::error::{CliError, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;
use trajfeas::fixtures::{make_fixture, FixtureKind, LANE_WIDTH};
use trajfeas::geometry::{
    buffer_centerline, point_in_polygon, trajectory_in_region_with, Aabb, BoundaryPolygon, Containment,
    PipAlgorithm, RotationFrame, Vec2,
};
use trajfeas::refinement::target_frame;
use trajfeas::trajset::Trajectory;

pub const DEFAULT_POINTS: usize = 1_000_000;
pub const DEFAULT_POLYS: usize = 4;
pub const DEFAULT_SET_SIZE: usize = 2800;
const TRAJECTORY_REPEATS: usize = 7;

pub struct Workload {
    pub polys: Vec<BoundaryPolygon>,
    pub points: Vec<Vec2>,
}

/// `n` lane envelopes along random gently curving centerlines, 60 m long,
/// scattered over a 100 m square.
pub fn envelopes(n: usize, rng: &mut ChaCha8Rng) -> Vec<BoundaryPolygon> {
    (0..n)
        .map(|_| {
            let mut p = Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let mut heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let curvature = rng.gen_range(-0.02..0.02);
            let mut line = vec![p];
            for _ in 0..30 {
                heading += curvature * 2.0;
                p = p + Vec2::new(heading.cos(), heading.sin()) * 2.0;
                line.push(p);
            }
            buffer_centerline(&line, LANE_WIDTH).expect("gentle centerlines buffer cleanly")
        })
        .collect()
}

/// Points drawn uniformly from the envelopes' bounding box grown by 5 m.
pub fn workload(n_points: usize, n_polys: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys = envelopes(n_polys, &mut rng);
    let corners: Vec<Vec2> = polys.iter().flat_map(|p| [p.bbox().min, p.bbox().max]).collect();
    let bb = Aabb::from_points(&corners);
    let points = (0..n_points)
        .map(|_| {
            Vec2::new(
                rng.gen_range(bb.min.x - 5.0..bb.max.x + 5.0),
                rng.gen_range(bb.min.y - 5.0..bb.max.y + 5.0),
            )
        })
        .collect();
    Workload { polys, points }
}

/// Verdicts for every (point, polygon) pair, point-major.
pub fn verdicts(w: &Workload, algo: PipAlgorithm) -> Vec<Containment> {
    w.points
        .iter()
        .flat_map(|&p| w.polys.iter().map(move |poly| point_in_polygon(p, poly, algo)))
        .collect()
}

/// Aborts on the first pair where the algorithms disagree; returns the number of checks.
pub fn correctness_gate(w: &Workload) -> Result<usize> {
    let reference = verdicts(w, PipAlgorithm::RayCast);
    for algo in PipAlgorithm::ALL.into_iter().skip(1) {
        let other = verdicts(w, algo);
        if let Some(i) = reference.iter().zip(&other).position(|(a, b)| a != b) {
            let n = w.polys.len();
            return Err(CliError::Invalid(format!(
                "{algo} disagrees with ray_cast on point {:?} against polygon {}: {:?} vs {:?}",
                w.points[i / n],
                i % n,
                other[i],
                reference[i]
            )));
        }
    }
    Ok(reference.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: String,
    pub n_points: usize,
    pub n_polys: usize,
    pub total_ns: u64,
    pub per_check_ns: f64,
}

pub fn time_algorithm(w: &Workload, algo: PipAlgorithm) -> BenchRow {
    let start = Instant::now();
    let mut inside = 0usize;
    for &p in &w.points {
        for poly in &w.polys {
            if point_in_polygon(black_box(p), poly, algo) != Containment::Outside {
                inside += 1;
            }
        }
    }
    let total_ns = (start.elapsed().as_nanos() as u64).max(1);
    black_box(inside);
    let checks = w.points.len() * w.polys.len();
    BenchRow {
        algorithm: algo.name().to_string(),
        n_points: w.points.len(),
        n_polys: w.polys.len(),
        total_ns,
        per_check_ns: total_ns as f64 / checks as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTiming {
    pub algorithm: String,
    pub n_trajectories: usize,
    pub n_polys: usize,
    /// Median over repeated runs of moving the set to the city frame and
    /// testing every trajectory.
    pub total_ns: u64,
    pub survivors: usize,
}

/// Times the containment stage of refinement: every trajectory is moved by
/// `frame` and tested against `polys`. Single-threaded.
pub fn time_trajectories(
    trajs: &[Trajectory],
    frame: &RotationFrame,
    polys: &[BoundaryPolygon],
    algo: PipAlgorithm,
) -> TrajectoryTiming {
    let mut runs = Vec::with_capacity(TRAJECTORY_REPEATS);
    let mut survivors = 0;
    for _ in 0..TRAJECTORY_REPEATS {
        let start = Instant::now();
        survivors = trajs
            .iter()
            .filter(|t| trajectory_in_region_with(t.to_city(frame).waypoints(), polys, algo))
            .count();
        runs.push(start.elapsed().as_nanos() as u64);
        black_box(survivors);
    }
    runs.sort_unstable();
    TrajectoryTiming {
        algorithm: algo.name().to_string(),
        n_trajectories: trajs.len(),
        n_polys: polys.len(),
        total_ns: runs[runs.len() / 2].max(1),
        survivors,
    }
}

/// `n` members spread evenly over the set's order.
pub fn subsample(trajs: &[Trajectory], n: usize) -> Vec<Trajectory> {
    if n >= trajs.len() {
        return trajs.to_vec();
    }
    (0..n).map(|i| trajs[i * trajs.len() / n].clone()).collect()
}

/// The T-intersection fixture: its four lane envelopes (unmerged) and target frame.
pub fn intersection_envelopes(seed: u64) -> trajfeas::Result<(Vec<BoundaryPolygon>, RotationFrame)> {
    let scene = make_fixture(FixtureKind::TIntersection, seed)?;
    let polys = scene
        .map
        .lanes()
        .map(|l| buffer_centerline(&l.centerline, l.width))
        .collect::<trajfeas::Result<Vec<_>>>()?;
    Ok((polys, target_frame(&scene)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub debug_assertions: bool,
    pub package_version: String,
}

impl Environment {
    pub fn capture() -> Environment {
        Environment {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            debug_assertions: cfg!(debug_assertions),
            package_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub environment: Environment,
    pub seed: u64,
    pub gate_checks: usize,
    pub rows: Vec<BenchRow>,
    pub trajectories: TrajectoryTiming,
}

pub fn write_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut text = String::from("algorithm,n_points,n_polys,total_ns,per_check_ns\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.algorithm, r.n_points, r.n_polys, r.total_ns, r.per_check_ns
        ));
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Runs the whole benchmark. `set` supplies the trajectories for the
/// full-set timing; the first [`DEFAULT_SET_SIZE`] spread over it are used.
pub fn run_bench(n_points: usize, n_polys: usize, seed: u64, set: &[Trajectory], algo: PipAlgorithm) -> Result<BenchReport> {
    let w = workload(n_points, n_polys, seed);
    let gate_checks = correctness_gate(&w)?;
    let rows: Vec<BenchRow> = PipAlgorithm::ALL.iter().map(|&a| time_algorithm(&w, a)).collect();
    let (polys, frame) = intersection_envelopes(seed).context(|| "bench fixture".to_string())?;
    let trajs = subsample(set, DEFAULT_SET_SIZE);
    let trajectories = time_trajectories(&trajs, &frame, &polys, algo);
    Ok(BenchReport {
        environment: Environment::capture(),
        seed,
        gate_checks,
        rows,
        trajectories,
    })
}
