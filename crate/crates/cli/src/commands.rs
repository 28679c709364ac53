//! Subcommand implementations.

use crate::config::RunConfig;
use crate::error::{CliError, Context, Result};
use crate::pipeline::{emit_json, load_scene, obtain_set, refine_scene, scene_id, scene_paths};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use trajfeas::fixtures::{make_fixture, write_fixture, FixtureKind};
use trajfeas::geometry::Vec2;
use trajfeas::refinement::{drivable_region, lower_bound, Scene};
use trajfeas::scoring::{
    aggregate, classification_loss, metrics, oracle_scores, select_topk, soft_targets, BatchMetrics, SceneMetrics,
    ScoreVector, StubScorer,
};
use trajfeas::trajset::{
    coverage_radius, coverage_reduce, generate_pool, kinematic_filter, save_set, ControlGrid, KinematicLimits,
    TrajectorySet, HORIZON,
};

/// Grid overrides for `gen-set`; unset axes keep the default resolution.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridOverrides {
    pub speeds: Option<usize>,
    pub accels: Option<usize>,
    pub curvatures: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSetSummary {
    pub pool: usize,
    pub feasible: usize,
    pub set: usize,
    pub epsilon: f64,
    /// Largest √Dist from a pool member to its nearest kept trajectory, m.
    pub coverage_radius: f64,
}

pub fn gen_set(config: &RunConfig, grid: GridOverrides) -> Result<GenSetSummary> {
    config.validate()?;
    let out = config
        .out
        .as_deref()
        .ok_or_else(|| CliError::Invalid("gen-set needs --out <csv path>".into()))?;
    let limits = KinematicLimits::default();
    let base = ControlGrid::default_for(&limits);
    let grid = ControlGrid::uniform(
        &limits,
        grid.speeds.unwrap_or(base.speeds.len()),
        grid.accels.unwrap_or(base.accels.len()),
        grid.curvatures.unwrap_or(base.curvatures.len()),
    );
    let ctx = || "set generation".to_string();
    let pool = generate_pool(&limits, HORIZON, &grid).context(ctx)?;
    let feasible = kinematic_filter(&pool, &limits);
    let mut set = coverage_reduce(&feasible, config.epsilon).context(ctx)?;
    if set.is_empty() {
        return Err(CliError::Invalid("generation spec yields an empty set".into()));
    }
    set.limits = limits;
    let radius = coverage_radius(&feasible, &set.trajectories);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    save_set(&set, out).context(|| format!("set {}", out.display()))?;
    let summary = GenSetSummary {
        pool: pool.len(),
        feasible: feasible.len(),
        set: set.len(),
        epsilon: config.epsilon,
        coverage_radius: radius,
    };
    eprintln!(
        "gen-set: {} trajectories from a pool of {} ({} feasible); max nearest-neighbor distance {:.4} m",
        summary.set, summary.pool, summary.feasible, summary.coverage_radius
    );
    Ok(summary)
}

fn single_scene(config: &RunConfig) -> Result<PathBuf> {
    let paths = scene_paths(&config.scene)?;
    match paths.as_slice() {
        [one] => Ok(one.clone()),
        _ => Err(CliError::Invalid(format!("refine takes exactly one scene, got {}", paths.len()))),
    }
}

pub fn refine_cmd(config: &RunConfig) -> Result<trajfeas::refinement::RefineOutput> {
    config.validate()?;
    let path = single_scene(config)?;
    let id = scene_id(&path);
    let scene = load_scene(&path, config)?;
    let set = obtain_set(config)?;
    let start = Instant::now();
    let (result, _) = refine_scene(&id, &scene, &set, config)?;
    let elapsed = start.elapsed();
    eprintln!(
        "refine {id}: {} of {} trajectories survive, fallback {}, {} goal lanes, {:.3} ms",
        result.feasible.len(),
        set.len(),
        result.feasible.fallback,
        result.goal_lanes.len(),
        elapsed.as_secs_f64() * 1e3
    );
    let output = result.output();
    emit_json(&output, config.out.as_deref())?;
    Ok(output)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    /// Scores equal to the soft targets built from the ground truth.
    #[default]
    Oracle,
    /// Seeded attention block over stub embeddings.
    Attention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundPair {
    #[serde(rename = "minADE")]
    pub min_ade: f64,
    #[serde(rename = "minFDE")]
    pub min_fde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub k: usize,
    #[serde(flatten)]
    pub metrics: SceneMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub scene: String,
    pub survivors: usize,
    pub fallback: bool,
    /// Cross-entropy of the scorer against the soft targets, nats.
    pub loss: f64,
    pub lower_bound: LowerBoundPair,
    pub metrics: Vec<KMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KBatch {
    pub k: usize,
    #[serde(flatten)]
    pub metrics: BatchMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metrics: Vec<KBatch>,
    pub lower_bound: LowerBoundPair,
    pub scenes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: Scorer,
    pub tau: f64,
    pub k_top: usize,
    pub scenes: Vec<SceneReport>,
    pub aggregate: Aggregate,
}

fn k_values(config: &RunConfig) -> Vec<usize> {
    let mut ks = vec![1, config.k_eval];
    ks.dedup();
    ks
}

fn attention_context(scene: &Scene, refinement: &trajfeas::refinement::Refinement) -> Vec<Vec<Vec2>> {
    let frame = &refinement.feasible.frame;
    let mut ctx: Vec<Vec<Vec2>> = (0..refinement.goal_lanes.len()).map(|r| refinement.goal_lanes.points(r)).collect();
    for past in scene.actors.values() {
        ctx.push(past.observed().iter().flatten().map(|&p| frame.point_to_local(p)).collect());
    }
    ctx
}

pub fn eval_scene(id: &str, scene: &Scene, set: &TrajectorySet, config: &RunConfig, scorer: Scorer) -> Result<SceneReport> {
    let gt = scene
        .ground_truth
        .as_ref()
        .ok_or_else(|| CliError::Invalid(format!("scene {id}: no ground truth to evaluate against")))?;
    let ctx = || format!("scene {id}");
    let (refinement, window) = refine_scene(id, scene, set, config)?;
    let feasible = &refinement.feasible;
    let targets = soft_targets(&feasible.city_trajectories, gt, config.tau, config.k_top).context(ctx)?;
    let scores: ScoreVector = match scorer {
        Scorer::Oracle => oracle_scores(&targets),
        Scorer::Attention => StubScorer::seeded(config.seed)
            .score(&feasible.trajectories, &attention_context(scene, &refinement))
            .context(ctx)?,
    };
    let loss = classification_loss(&scores, &targets).context(ctx)?;
    let region = drivable_region(&scene.map, &window).context(ctx)?;
    let mut per_k = Vec::new();
    for k in k_values(config) {
        let take = k.min(feasible.len());
        let chosen: Vec<_> = select_topk(&scores, &feasible.city_trajectories, take)
            .context(ctx)?
            .into_iter()
            .map(|s| s.trajectory)
            .collect();
        per_k.push(KMetrics {
            k,
            metrics: metrics(&chosen, gt, &region).context(ctx)?,
        });
    }
    let (min_ade, min_fde) = lower_bound(&feasible.city_trajectories, gt).context(ctx)?;
    Ok(SceneReport {
        scene: id.to_string(),
        survivors: feasible.len(),
        fallback: feasible.fallback,
        loss,
        lower_bound: LowerBoundPair { min_ade, min_fde },
        metrics: per_k,
    })
}

/// Per-k means over scenes, and the mean lower bound.
pub fn aggregate_reports(reports: &[SceneReport]) -> Result<Aggregate> {
    let ks: Vec<usize> = reports.first().map(|r| r.metrics.iter().map(|m| m.k).collect()).unwrap_or_default();
    let mut metrics_out = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let rows: Vec<SceneMetrics> = reports.iter().map(|r| r.metrics[i].metrics).collect();
        let batch = aggregate(&rows).context(|| "aggregate".to_string())?;
        metrics_out.push(KBatch { k, metrics: batch });
    }
    let n = reports.len() as f64;
    Ok(Aggregate {
        metrics: metrics_out,
        lower_bound: LowerBoundPair {
            min_ade: reports.iter().map(|r| r.lower_bound.min_ade).sum::<f64>() / n,
            min_fde: reports.iter().map(|r| r.lower_bound.min_fde).sum::<f64>() / n,
        },
        scenes: reports.len(),
    })
}

pub fn eval_cmd(config: &RunConfig, scorer: Scorer) -> Result<EvalReport> {
    config.validate()?;
    let paths = scene_paths(&config.scene)?;
    let set = obtain_set(config)?;
    // Scenes run in parallel; each refinement stays single-threaded.
    let inner = RunConfig {
        workers: 1,
        ..config.clone()
    };
    let job = || -> Result<Vec<SceneReport>> {
        paths
            .par_iter()
            .map(|path| {
                let id = scene_id(path);
                let scene = load_scene(path, &inner)?;
                eval_scene(&id, &scene, &set, &inner, scorer)
            })
            .collect()
    };
    let scenes = if config.workers > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CliError::Invalid(format!("cannot start {} workers: {e}", config.workers)))?
            .install(job)?
    } else {
        job()?
    };
    let aggregate = aggregate_reports(&scenes)?;
    for m in &aggregate.metrics {
        eprintln!(
            "eval k={}: minADE {:.4} minFDE {:.4} MR {:.4} DAC {:.4} over {} scenes",
            m.k, m.metrics.mean.min_ade, m.metrics.mean.min_fde, m.metrics.mean.mr, m.metrics.mean.dac, aggregate.scenes
        );
    }
    let report = EvalReport {
        scorer,
        tau: config.tau,
        k_top: config.k_top,
        scenes,
        aggregate,
    };
    emit_json(&report, config.out.as_deref())?;
    Ok(report)
}

/// Writes `count` fixtures with consecutive seeds; returns the scene paths.
pub fn make_fixture_cmd(kind: &str, seed: u64, count: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let kind: FixtureKind = kind.parse().context(|| "make-fixture".to_string())?;
    let mut written = Vec::new();
    for s in seed..seed + count {
        let stem = format!("{kind}_{s}");
        let scene = make_fixture(kind, s).context(|| format!("fixture {stem}"))?;
        let (_, scene_path) = write_fixture(&scene, out, &stem).context(|| format!("fixture {stem}"))?;
        println!("{}", scene_path.display());
        written.push(scene_path);
    }
    Ok(written)
}
