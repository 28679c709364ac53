//! Loading and per-scene processing shared by the subcommands.

use crate::config::RunConfig;
use crate::error::{CliError, Context, Result};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use trajfeas::map_model::{load_map, QueryWindow};
use trajfeas::refinement::{default_window, refine, RefineConfig, Refinement, Scene};
use trajfeas::trajset::{build_set, load_set, ControlGrid, KinematicLimits, TrajectorySet};

/// Scene id: the file stem without a trailing `_scene`.
pub fn scene_id(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_suffix("_scene").map(str::to_string).unwrap_or(stem)
}

/// Expands directories into their `*_scene.json` files, sorted by name.
pub fn scene_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(CliError::Invalid("no --scene given".into()));
    }
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| CliError::io(input, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().ends_with("_scene.json")))
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(CliError::Invalid(format!("no *_scene.json files in {}", input.display())));
            }
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

pub fn load_scene(path: &Path, config: &RunConfig) -> Result<Scene> {
    let ctx = || format!("scene {}", scene_id(path));
    match &config.map {
        Some(map_path) => {
            let map = load_map(map_path).context(ctx)?;
            Scene::load_with_map(path, Arc::new(map)).context(ctx)
        }
        None => Scene::load(path).context(ctx),
    }
}

/// The `--set` file, or the default kinematic set at `--epsilon`.
pub fn obtain_set(config: &RunConfig) -> Result<TrajectorySet> {
    match &config.set {
        Some(path) => load_set(path).context(|| format!("set {}", path.display())),
        None => {
            let limits = KinematicLimits::default();
            build_set(&limits, &ControlGrid::default_for(&limits), config.epsilon)
                .context(|| "set generation".to_string())
        }
    }
}

pub fn window_for(scene: &Scene, set: &TrajectorySet, config: &RunConfig) -> trajfeas::Result<QueryWindow> {
    match config.window {
        Some(r) => QueryWindow::new(scene.target_position(), r),
        None => default_window(scene, set),
    }
}

pub fn refine_config(config: &RunConfig) -> RefineConfig {
    RefineConfig {
        algo: config.algo,
        workers: config.workers,
        fallback_k: config.k_top,
        ..RefineConfig::default()
    }
}

pub fn refine_scene(id: &str, scene: &Scene, set: &TrajectorySet, config: &RunConfig) -> Result<(Refinement, QueryWindow)> {
    let ctx = || format!("scene {id}");
    let window = window_for(scene, set, config).context(ctx)?;
    let out = refine(scene, set, &window, &refine_config(config)).context(ctx)?;
    Ok((out, window))
}

/// Pretty JSON with a trailing newline, to a file or stdout.
pub fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(path, text).map_err(|e| CliError::io(path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
