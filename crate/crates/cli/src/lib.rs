//! Command-line driver for the trajfeas pipeline: fixtures, set generation,
//! refinement, evaluation and the point-in-polygon benchmark.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

use clap::{Args, Parser, Subcommand};
use commands::{GridOverrides, Scorer};
use config::RunConfig;
use error::{CliError, Result};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "trajfeas", version, about = "Trajectory-set refinement against HD-map drivable area")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a kinematic trajectory set reduced to ε-coverage.
    GenSet(GenSetArgs),
    /// Prune a trajectory set against one scene's drivable area.
    Refine(RunConfig),
    /// Refine, score and evaluate scenes with ground truth.
    Eval(EvalArgs),
    /// Time the point-in-polygon kernels.
    Bench(BenchArgs),
    /// Write a synthetic map and scene.
    MakeFixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct GenSetArgs {
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long)]
    pub speeds: Option<usize>,
    #[arg(long)]
    pub accels: Option<usize>,
    #[arg(long)]
    pub curvatures: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long, value_enum, default_value_t = Scorer::Oracle)]
    pub scorer: Scorer,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunConfig,
    /// Random points per algorithm.
    #[arg(long, default_value_t = bench::DEFAULT_POINTS)]
    pub points: usize,
    /// Lane envelopes each point is tested against.
    #[arg(long, default_value_t = bench::DEFAULT_POLYS)]
    pub polys: usize,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// straight, curve, t_intersection or fork.
    pub kind: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of fixtures, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn bench_cmd(args: &BenchArgs) -> Result<()> {
    args.run.validate()?;
    if args.points == 0 || args.polys == 0 {
        return Err(CliError::Invalid("--points and --polys must be positive".into()));
    }
    let set = pipeline::obtain_set(&args.run)?;
    let report = bench::run_bench(args.points, args.polys, args.run.seed, &set.trajectories, args.run.algo)?;
    for r in &report.rows {
        eprintln!(
            "bench {}: {} checks in {:.3} ms, {:.1} ns/check",
            r.algorithm,
            r.n_points * r.n_polys,
            r.total_ns as f64 / 1e6,
            r.per_check_ns
        );
    }
    let t = &report.trajectories;
    eprintln!(
        "bench trajectories: {} against {} envelopes in {:.3} ms ({} survive)",
        t.n_trajectories,
        t.n_polys,
        t.total_ns as f64 / 1e6,
        t.survivors
    );
    let dir = args.run.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    bench::write_csv(&report.rows, &dir.join("bench.csv"))?;
    pipeline::emit_json(&report, Some(&dir.join("bench.json")))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSet(a) => {
            let grid = GridOverrides {
                speeds: a.speeds,
                accels: a.accels,
                curvatures: a.curvatures,
            };
            commands::gen_set(&a.run, grid).map(drop)
        }
        Command::Refine(c) => commands::refine_cmd(&c).map(drop),
        Command::Eval(a) => commands::eval_cmd(&a.run, a.scorer).map(drop),
        Command::Bench(a) => bench_cmd(&a),
        Command::MakeFixture(a) => commands::make_fixture_cmd(&a.kind, a.seed, a.count, &a.out).map(drop),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
