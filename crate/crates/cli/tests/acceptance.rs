//! End-to-end acceptance checks. Runs as a plain binary (no test harness) so
//! every check prints one PASS/FAIL line; exits non-zero if any fails.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::{Duration, Instant};
use trajfeas::fixtures::{make_fixture, FixtureKind};
use trajfeas::geometry::{
    point_in_polygon, trajectory_in_region, BoundaryPolygon, Containment, PipAlgorithm, Vec2,
};
use trajfeas::refinement::{default_window, drivable_region, refine, RefineConfig};
use trajfeas::scoring::{
    attention_forward, classification_loss, entropy, metrics, soft_targets, soft_targets_from_dist,
    AttentionBlockSpec, AttentionWeights, ScoreVector,
};
use trajfeas::trajset::{
    build_set, coverage_reduce, generate_pool, kinematic_filter, ControlGrid, KinematicLimits, Trajectory,
    TrajectorySet, DT, HORIZON,
};
use trajfeas_cli::bench;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn default_set() -> TrajectorySet {
    let limits = KinematicLimits::default();
    build_set(&limits, &ControlGrid::default_for(&limits), 2.0).expect("default set")
}

fn refinement_soundness(set: &TrajectorySet) -> Outcome {
    let start = Instant::now();
    let mut scenes = 0;
    let mut survivors = 0;
    for kind in FixtureKind::ALL {
        for seed in 0..50 {
            let scene = make_fixture(kind, seed).map_err(|e| format!("{kind} {seed}: {e}"))?;
            let window = default_window(&scene, set).map_err(|e| e.to_string())?;
            let out = refine(&scene, set, &window, &RefineConfig::default()).map_err(|e| format!("{kind} {seed}: {e}"))?;
            ensure(!out.feasible.fallback, || format!("{kind} {seed}: nothing survived"))?;
            let region = drivable_region(&scene.map, &window).map_err(|e| e.to_string())?;
            let a = out.feasible.len();
            let b = out
                .feasible
                .city_trajectories
                .iter()
                .filter(|t| !trajectory_in_region(t.waypoints(), &region))
                .count();
            let dac = (a - b) as f64 / a as f64;
            ensure(dac == 1.0, || format!("{kind} {seed}: DAC {dac}"))?;
            scenes += 1;
            survivors += a;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{scenes} fixtures, {survivors} survivors, DAC 1.0 everywhere, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

/// Star-shaped, hence simple: sorted angles with random radii.
fn star_polygon(rng: &mut ChaCha8Rng) -> BoundaryPolygon {
    let n = rng.gen_range(4..48);
    let c = Vec2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
    let ring: Vec<Vec2> = (0..n)
        .map(|i| {
            let a = (i as f64 + rng.gen_range(0.05..0.95)) * std::f64::consts::TAU / n as f64;
            let r = rng.gen_range(1.0..20.0);
            c + Vec2::new(a.cos(), a.sin()) * r
        })
        .collect();
    BoundaryPolygon::from_open_ring(ring, vec![]).expect("star polygon is simple")
}

fn edge_distance(p: Vec2, ring: &[Vec2]) -> f64 {
    ring.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
            (a + ab * t).distance(p)
        })
        .fold(f64::INFINITY, f64::min)
}

fn pip_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checks = 0usize;
    let mut excluded = 0usize;
    let mut disagreements = 0usize;
    for _ in 0..100 {
        let poly = star_polygon(&mut rng);
        let bb = *poly.bbox();
        for _ in 0..10_000 {
            let p = Vec2::new(
                rng.gen_range(bb.min.x - 1.0..bb.max.x + 1.0),
                rng.gen_range(bb.min.y - 1.0..bb.max.y + 1.0),
            );
            if edge_distance(p, poly.exterior()) <= 1e-9 {
                excluded += 1;
                continue;
            }
            checks += 1;
            let a = point_in_polygon(p, &poly, PipAlgorithm::RayCast);
            let b = point_in_polygon(p, &poly, PipAlgorithm::Winding);
            if a != b || a == Containment::Boundary {
                disagreements += 1;
            }
        }
    }
    ensure(disagreements == 0, || format!("{disagreements} disagreements in {checks} checks"))?;
    Ok(format!("{checks} checks on 100 polygons, 0 disagreements ({excluded} near-edge points excluded)"))
}

fn max_sq(a: &Trajectory, b: &Trajectory) -> f64 {
    a.waypoints()
        .iter()
        .zip(b.waypoints())
        .map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2))
        .fold(0.0, f64::max)
}

fn coverage_property() -> Outcome {
    let start = Instant::now();
    let limits = KinematicLimits::default();
    let pool = kinematic_filter(
        &generate_pool(&limits, HORIZON, &ControlGrid::default_for(&limits)).map_err(|e| e.to_string())?,
        &limits,
    );
    ensure(pool.len() >= 5000, || format!("pool has only {} members", pool.len()))?;
    let set = coverage_reduce(&pool, 2.0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in &pool {
        let nearest = set
            .trajectories
            .iter()
            .map(|s| max_sq(t, s))
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        worst = worst.max(nearest);
    }
    let elapsed = start.elapsed();
    ensure(worst <= 2.0, || format!("a pool member is {worst} m from the set"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "pool {} -> set {}, worst nearest distance {worst:.6} m, {:.2} s",
        pool.len(),
        set.len(),
        elapsed.as_secs_f64()
    ))
}

/// Circumcircle curvature via Kahan's stable Heron formula.
fn curvature(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let mut s = [a.distance(b), b.distance(c), c.distance(a)];
    if s.iter().any(|&x| x < 1e-12) {
        return 0.0;
    }
    s.sort_by(|x, y| y.total_cmp(x));
    let [x, y, z] = s;
    let q = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    let area = 0.25 * q.max(0.0).sqrt();
    4.0 * area / (x * y * z)
}

fn kinematic_guarantee(set: &TrajectorySet) -> Outcome {
    let limits = KinematicLimits::default();
    let slack = 1e-6;
    let mut failures = 0;
    for t in &set.trajectories {
        // The origin is the current position.
        let mut pts = vec![Vec2::ZERO];
        pts.extend_from_slice(t.waypoints());
        let speeds: Vec<f64> = pts.windows(2).map(|w| w[0].distance(w[1]) / DT).collect();
        let ok_speed = speeds.iter().all(|&v| v <= limits.max_speed + slack);
        let ok_accel = speeds.windows(2).all(|w| ((w[1] - w[0]) / DT).abs() <= limits.max_accel + slack);
        let ok_curv = pts
            .windows(3)
            .all(|w| curvature(w[0], w[1], w[2]) <= limits.max_curvature + slack);
        if !(ok_speed && ok_accel && ok_curv) {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} of {} trajectories violate the limits", set.len()))?;
    Ok(format!("{} of {} trajectories pass (100%)", set.len(), set.len()))
}

fn line(offset: f64) -> Trajectory {
    Trajectory::new((1..=HORIZON).map(|i| Vec2::new(i as f64, offset)).collect()).unwrap()
}

fn loss_math() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_sum: f64 = 0.0;
    let mut worst_entropy: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..64);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..40.0)).collect();
        let t = soft_targets_from_dist(&d, rng.gen_range(0.05..20.0), 6).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max((t.psi.iter().sum::<f64>() - 1.0).abs());
        let logits: Vec<f64> = t.psi.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect();
        let loss = classification_loss(&ScoreVector::logits(logits).unwrap(), &t).map_err(|e| e.to_string())?;
        worst_entropy = worst_entropy.max((loss - entropy(&t.psi)).abs());
    }
    ensure(worst_sum <= 1e-9, || format!("soft targets sum off by {worst_sum}"))?;
    ensure(worst_entropy <= 1e-9, || format!("loss(log psi) differs from entropy by {worst_entropy}"))?;

    let mut gibbs_gap = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.gen_range(1..32);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let t = soft_targets_from_dist(&d, rng.gen_range(0.1..5.0), 6).map_err(|e| e.to_string())?;
        let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let loss = classification_loss(&ScoreVector::logits(logits).unwrap(), &t).map_err(|e| e.to_string())?;
        gibbs_gap = gibbs_gap.min(loss - entropy(&t.psi));
    }
    ensure(gibbs_gap >= -1e-9, || format!("Gibbs inequality violated by {gibbs_gap}"))?;

    let t = soft_targets(&[line(0.0), line(2.0)], &line(0.0), 1.0, 2).map_err(|e| e.to_string())?;
    let e4 = (-4.0f64).exp();
    let (p0, p1) = (1.0 / (1.0 + e4), e4 / (1.0 + e4));
    ensure((t.psi[0] - p0).abs() < 1e-5 && (t.psi[1] - p1).abs() < 1e-5, || format!("closed form {:?}", t.psi))?;
    Ok(format!(
        "sum err {worst_sum:.1e}, entropy err {worst_entropy:.1e}, min Gibbs gap {gibbs_gap:.2e}, psi = ({:.5}, {:.5})",
        t.psi[0], t.psi[1]
    ))
}

/// Loops over every index, no matrix routines.
fn naive_attention(x_q: &Array2<f64>, x_kv: &Array2<f64>, w: &AttentionWeights, heads: usize) -> Array2<f64> {
    let d = x_q.ncols();
    let d_k = d / heads;
    let proj = |x: &Array2<f64>, m: &Array2<f64>| {
        let mut out = Array2::<f64>::zeros((x.nrows(), d));
        for i in 0..x.nrows() {
            for j in 0..d {
                for t in 0..d {
                    out[[i, j]] += x[[i, t]] * m[[t, j]];
                }
            }
        }
        out
    };
    let (q, k, v) = (proj(x_q, &w.w_q), proj(x_kv, &w.w_k), proj(x_kv, &w.w_v));
    let mut heads_out = Array2::<f64>::zeros((q.nrows(), d));
    for h in 0..heads {
        let cols = h * d_k..(h + 1) * d_k;
        for i in 0..q.nrows() {
            let scores: Vec<f64> = (0..k.nrows())
                .map(|j| cols.clone().map(|t| q[[i, t]] * k[[j, t]]).sum::<f64>() / (d_k as f64).sqrt())
                .collect();
            let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
            for t in cols.clone() {
                heads_out[[i, t]] = (0..k.nrows()).map(|j| (scores[j] - m).exp() / z * v[[j, t]]).sum();
            }
        }
    }
    proj(&heads_out, &w.w_o)
}

fn attention_reference() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_row: f64 = 0.0;
    for case in 0..50u64 {
        let spec = AttentionBlockSpec::seeded(case);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + case);
        let q = Array2::from_shape_fn((4, 128), |_| rng.gen_range(-1.0..1.0));
        let kv = Array2::from_shape_fn((4, 128), |_| rng.gen_range(-1.0..1.0));
        let got = attention_forward(q.view(), kv.view(), kv.view(), &spec).map_err(|e| e.to_string())?;
        ensure(spec.n_heads == 8 && spec.d_k() == 16, || "unexpected head layout".into())?;
        let want = naive_attention(&q, &kv, spec.weights.as_ref().unwrap(), 8);
        for (a, b) in got.output.iter().zip(want.iter()) {
            worst = worst.max((a - b).abs());
        }
        for w in &got.weights {
            for row in w.rows() {
                worst_row = worst_row.max((row.sum() - 1.0).abs());
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst}"))?;
    ensure(worst_row <= 1e-9, || format!("attention row sum off by {worst_row}"))?;
    Ok(format!("50 cases, max deviation {worst:.1e}, max row-sum error {worst_row:.1e}"))
}

fn metrics_fixture() -> Outcome {
    // Road x in [-5, 40], y in [-4, 4]; ground truth along y = 0.
    let road = BoundaryPolygon::from_open_ring(
        vec![Vec2::new(-5.0, -4.0), Vec2::new(40.0, -4.0), Vec2::new(40.0, 4.0), Vec2::new(-5.0, 4.0)],
        vec![],
    )
    .unwrap();
    let gt = line(0.0);
    let preds = vec![
        line(1.0),
        Trajectory::new((1..=HORIZON).map(|i| Vec2::new(1.1 * i as f64, 0.0)).collect()).unwrap(),
        Trajectory::new((1..=HORIZON).map(|i| Vec2::new(i as f64, 0.2 * i as f64)).collect()).unwrap(),
    ];
    // Brute force: explicit loops and an axis-aligned road test.
    let mut ades = Vec::new();
    let mut fdes = Vec::new();
    let mut off = 0;
    for p in &preds {
        let mut acc = 0.0;
        let mut leaves = false;
        for (a, b) in p.waypoints().iter().zip(gt.waypoints()) {
            acc += ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            leaves |= !(a.x >= -5.0 && a.x <= 40.0 && a.y >= -4.0 && a.y <= 4.0);
        }
        ades.push(acc / HORIZON as f64);
        let (a, b) = (p.waypoints()[HORIZON - 1], gt.waypoints()[HORIZON - 1]);
        fdes.push(((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt());
        off += leaves as usize;
    }
    let min_ade = ades.iter().copied().fold(f64::INFINITY, f64::min);
    let min_fde = fdes.iter().copied().fold(f64::INFINITY, f64::min);
    let mr = if fdes.iter().all(|&f| f > 2.0) { 1.0 } else { 0.0 };
    let dac = (3 - off) as f64 / 3.0;

    let m = metrics(&preds, &gt, std::slice::from_ref(&road)).map_err(|e| e.to_string())?;
    ensure((m.min_ade - min_ade).abs() <= 1e-9, || format!("minADE {} vs {min_ade}", m.min_ade))?;
    ensure((m.min_fde - min_fde).abs() <= 1e-9, || format!("minFDE {} vs {min_fde}", m.min_fde))?;
    ensure(m.mr == mr, || format!("MR {} vs {mr}", m.mr))?;
    ensure(m.dac == dac && off == 1, || format!("DAC {} vs {dac}", m.dac))?;

    // a = 6 predictions, b = 2 leave the road.
    let six: Vec<Trajectory> = [0.0, 1.0, -1.0, 2.0, 9.0, -9.0].iter().map(|&o| line(o)).collect();
    let m6 = metrics(&six, &gt, std::slice::from_ref(&road)).map_err(|e| e.to_string())?;
    ensure(m6.dac == (6.0 - 2.0) / 6.0, || format!("DAC {} for 4 of 6 on road", m6.dac))?;

    // All endpoints 3 m off: a miss.
    let shifted: Vec<Trajectory> = [3.0, -3.0].iter().map(|&o| line(o)).collect();
    let miss = metrics(&shifted, &gt, std::slice::from_ref(&road)).map_err(|e| e.to_string())?;
    ensure(miss.mr == 1.0 && (miss.min_ade - 3.0).abs() <= 1e-9, || format!("{miss:?}"))?;
    Ok(format!(
        "minADE {:.4} minFDE {:.4} MR {} DAC {:.4}; 6-prediction DAC {:.4}",
        m.min_ade, m.min_fde, m.mr, m.dac, m6.dac
    ))
}

fn runtime(set: &TrajectorySet) -> Outcome {
    let (polys, frame) = bench::intersection_envelopes(0).map_err(|e| e.to_string())?;
    let trajs = bench::subsample(&set.trajectories, bench::DEFAULT_SET_SIZE);
    ensure(trajs.len() == 2800 && polys.len() == 4, || "unexpected workload".into())?;
    let t = bench::time_trajectories(&trajs, &frame, &polys, PipAlgorithm::RayCast);
    let set_ms = t.total_ns as f64 / 1e6;
    let w = bench::workload(bench::DEFAULT_POINTS, bench::DEFAULT_POLYS, 0);
    bench::correctness_gate(&w).map_err(|e| e.to_string())?;
    let rows: Vec<bench::BenchRow> = PipAlgorithm::ALL.iter().map(|&a| bench::time_algorithm(&w, a)).collect();
    let per_check = rows.iter().map(|r| r.per_check_ns).fold(0.0, f64::max);
    ensure(set_ms <= 10.0, || format!("2800 trajectories took {set_ms:.3} ms"))?;
    ensure(per_check <= 200.0, || format!("{per_check:.1} ns per check"))?;
    Ok(format!(
        "2800 trajectories x 4 envelopes in {set_ms:.3} ms; per check {}",
        rows.iter()
            .map(|r| format!("{} {:.1} ns", r.algorithm, r.per_check_ns))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["trajfeas"];
    full.extend_from_slice(args);
    match trajfeas_cli::main_with_args(full) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", args.join(" "))),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let s = |p: &str| d.join(p).to_string_lossy().into_owned();
    cli(&["gen-set", "--out", &s("set_a.csv")])?;
    cli(&["gen-set", "--out", &s("set_b.csv")])?;
    ensure(read(&d.join("set_a.csv"))? == read(&d.join("set_b.csv"))?, || "set files differ".into())?;
    for kind in ["straight", "curve", "t_intersection", "fork"] {
        cli(&["make-fixture", kind, "--seed", "11", "--count", "2", "--out", &s("scenes")])?;
    }
    let set = s("set_a.csv");
    let scene = s("scenes/t_intersection_11_scene.json");
    for run in ["r1", "r2"] {
        cli(&["refine", "--scene", &scene, "--set", &set, "--seed", "5", "--out", &s(&format!("{run}.json"))])?;
        cli(&["eval", "--scene", &s("scenes"), "--set", &set, "--seed", "5", "--out", &s(&format!("e_{run}.json"))])?;
        cli(&[
            "eval", "--scene", &s("scenes"), "--set", &set, "--seed", "5", "--scorer", "attention", "--out",
            &s(&format!("a_{run}.json")),
        ])?;
    }
    for (a, b) in [("r1.json", "r2.json"), ("e_r1.json", "e_r2.json"), ("a_r1.json", "a_r2.json")] {
        ensure(read(&d.join(a))? == read(&d.join(b))?, || format!("{a} and {b} differ"))?;
    }
    let base = read(&d.join("r1.json"))?;
    for workers in ["1", "4", "12"] {
        let out = s(&format!("w{workers}.json"));
        cli(&["refine", "--scene", &scene, "--set", &set, "--seed", "5", "--workers", workers, "--out", &out])?;
        ensure(read(Path::new(&out))? == base, || format!("--workers {workers} changes the output"))?;
        let eval_out = s(&format!("ew{workers}.json"));
        cli(&["eval", "--scene", &s("scenes"), "--set", &set, "--workers", workers, "--seed", "5", "--out", &eval_out])?;
        ensure(read(Path::new(&eval_out))? == read(&d.join("e_r1.json"))?, || {
            format!("eval with --workers {workers} differs")
        })?;
    }
    Ok("gen-set, refine and eval byte-identical across runs; workers 1, 4, 12 give identical output".into())
}

fn main() {
    let set = default_set();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("refinement soundness (DAC = 1 on 200 fixtures)", Box::new(|| refinement_soundness(&set))),
        ("point-in-polygon oracle equivalence (1e6 checks)", Box::new(pip_equivalence)),
        ("coverage at epsilon = 2 (exhaustive)", Box::new(coverage_property)),
        ("kinematic guarantee of the default set", Box::new(|| kinematic_guarantee(&set))),
        ("soft targets and loss math", Box::new(loss_math)),
        ("attention against naive loops", Box::new(attention_reference)),
        ("metrics on a hand-built scene", Box::new(metrics_fixture)),
        ("runtime of full-set refinement and PIP checks", Box::new(|| runtime(&set))),
        ("determinism and worker invariance", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
