use crate::error::{CliError, Result};
use clap::Args;
use std::path::PathBuf;
use trajfeas::geometry::PipAlgorithm;

/// Flags shared by the pipeline subcommands.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Map JSON; overrides the map referenced by the scene.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Scene JSON file, or a directory of `*_scene.json` files. Repeatable.
    #[arg(long)]
    pub scene: Vec<PathBuf>,
    /// Trajectory-set CSV; generated on the fly when omitted.
    #[arg(long)]
    pub set: Option<PathBuf>,
    /// Coverage bound (m) used when generating a set.
    #[arg(long, default_value_t = 2.0)]
    pub epsilon: f64,
    /// Soft-target temperature.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Support size of the soft targets.
    #[arg(long, default_value_t = 6)]
    pub k_top: usize,
    /// Largest k at which metrics are reported (k = 1 is always reported).
    #[arg(long, default_value_t = 6)]
    pub k_eval: usize,
    /// Query window radius (m); defaults to the set's reach plus a margin.
    #[arg(long)]
    pub window: Option<f64>,
    /// Point-in-polygon algorithm: ray_cast or winding.
    #[arg(long, default_value = "ray_cast", value_parser = parse_algo)]
    pub algo: PipAlgorithm,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path (file or directory, depending on the subcommand).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_algo(s: &str) -> std::result::Result<PipAlgorithm, String> {
    s.parse()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            map: None,
            scene: Vec::new(),
            set: None,
            epsilon: 2.0,
            tau: 1.0,
            k_top: 6,
            k_eval: 6,
            window: None,
            algo: PipAlgorithm::RayCast,
            workers: 1,
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("epsilon", self.epsilon), ("tau", self.tau)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Invalid(format!("--{name} must be positive, got {v}")));
            }
        }
        if let Some(w) = self.window {
            if !(w > 0.0 && w.is_finite()) {
                return Err(CliError::Invalid(format!("--window must be positive, got {w}")));
            }
        }
        for (name, v) in [("k-top", self.k_top), ("k-eval", self.k_eval), ("workers", self.workers)] {
            if v == 0 {
                return Err(CliError::Invalid(format!("--{name} must be positive")));
            }
        }
        Ok(())
    }
}
