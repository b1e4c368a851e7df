//! Configuration-driven experiments and their file artifacts.
//!
//! Each `cmd_*` function mirrors a subcommand of the `ilqr-pulse` binary.
//! Artifacts are written only when an output directory is given, either as
//! an argument or as `output-dir` in the configuration.

pub mod artifacts;
pub mod config;
pub mod drag;
pub mod grid;
pub mod presets;

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;

use crate::error::Result;
use crate::ilqr::{random_controls, solve, SolveReport, Trajectory};
use crate::ocp::GateProblem;

pub use artifacts::{ArtifactPaths, Summary};
pub use config::{CostSpec, Diagonal, RunConfig};
pub use drag::{drag_analysis, DragReport};
pub use grid::{CellResult, GridCell, GridRow, GridSpec};
pub use presets::Experiment;

use artifacts::SolverStats;

fn output_dir(config: &RunConfig, out: Option<&Path>) -> Option<PathBuf> {
    out.map(Path::to_path_buf).or_else(|| config.output_dir.clone())
}

/// Seeded initial controls of a configuration.
pub fn initial_controls(config: &RunConfig, stream: u64) -> Vec<DVector<f64>> {
    let channels = 2 * config.system.transmons();
    random_controls(config.seed, stream, config.n.saturating_sub(1), channels, config.init_bound)
}

#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub report: SolveReport,
    pub summary: Summary,
    pub paths: Option<ArtifactPaths>,
}

/// Runs one optimization from seeded random controls.
pub fn cmd_optimize(config: &RunConfig, out: Option<&Path>) -> Result<OptimizeOutcome> {
    let problem = config.problem()?;
    let start = Instant::now();
    let report = solve(&problem, initial_controls(config, 0), &config.solver)?;
    let stats = SolverStats {
        cost: Some(report.cost),
        termination: Some(report.termination),
        iterations: Some(report.log.len()),
        accepted_steps: Some(report.accepted),
        wall_ms: Some(start.elapsed().as_secs_f64() * 1e3),
    };
    let summary = artifacts::summarize(config, &problem, &report.trajectory, stats)?;
    let paths = match output_dir(config, out) {
        Some(dir) => Some(artifacts::write_run(&dir, config, &problem, &report.trajectory, Some(&report.log), &summary)?),
        None => None,
    };
    Ok(OptimizeOutcome { report, summary, paths })
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    /// Cells ranked by trace infidelity, failures last.
    pub results: Vec<CellResult>,
    pub rows: Vec<GridRow>,
    /// Summaries of the top cells, in rank order.
    pub top: Vec<Summary>,
}

/// Name of the artifact directory of a grid cell.
pub fn cell_dir(index: usize) -> String {
    format!("cell_{index:04}")
}

/// Sweeps the cost grid of `spec` around the configured costs.
pub fn cmd_gridsearch(config: &RunConfig, spec: &GridSpec, out: Option<&Path>) -> Result<GridOutcome> {
    gridsearch_cells(config, spec, &spec.cells(), out)
}

/// [`cmd_gridsearch`] restricted to some cells of `spec`.
pub fn gridsearch_cells(config: &RunConfig, spec: &GridSpec, cells: &[GridCell], out: Option<&Path>) -> Result<GridOutcome> {
    let results = grid::run_cells(config, spec, cells)?;
    let rows = grid::rows(&results);
    let dir = output_dir(config, out);
    if let Some(dir) = &dir {
        std::fs::create_dir_all(dir)?;
        grid::write_rows(&dir.join("grid_results.csv"), &rows)?;
    }
    let mut top = Vec::new();
    for r in results.iter().take(spec.keep_top) {
        let Ok(solution) = &r.outcome else { continue };
        let cell_config = r.cell.config(config);
        let (problem, traj) = replay(&cell_config, &solution.controls)?;
        let stats = SolverStats {
            cost: Some(solution.cost),
            termination: Some(solution.termination),
            iterations: Some(solution.log.len()),
            accepted_steps: Some(solution.accepted),
            wall_ms: Some(solution.wall_ms),
        };
        let summary = artifacts::summarize(&cell_config, &problem, &traj, stats)?;
        if let Some(dir) = &dir {
            let cell = dir.join("cells").join(cell_dir(r.cell.index));
            artifacts::write_run(&cell, &cell_config, &problem, &traj, Some(&solution.log), &summary)?;
        }
        top.push(summary);
    }
    Ok(GridOutcome { results, rows, top })
}

/// Open-loop rollout of given stage controls.
pub fn replay(config: &RunConfig, controls: &[DVector<f64>]) -> Result<(GateProblem, Trajectory)> {
    let problem = config.problem()?;
    let dynamics = problem.dynamics();
    let rollout = dynamics.rollout(&dynamics.initial_state(), controls)?;
    Ok((problem, rollout.trajectory))
}

/// Reads the stage controls of `controls.csv` for a configuration.
pub fn load_controls(config: &RunConfig, path: &Path) -> Result<Vec<DVector<f64>>> {
    let sys = config.transmon_system();
    artifacts::read_controls(path, config.mode, &sys.channel_names(), config.n.saturating_sub(1))
}

/// Replays a controls file without optimizing.
pub fn cmd_rollout(config: &RunConfig, controls: &Path, out: Option<&Path>) -> Result<Summary> {
    config.problem()?;
    let controls = load_controls(config, controls)?;
    let (problem, traj) = replay(config, &controls)?;
    let summary = artifacts::summarize(config, &problem, &traj, SolverStats::default())?;
    if let Some(dir) = output_dir(config, out) {
        std::fs::create_dir_all(&dir)?;
        for &input in &config.population_states {
            let path = dir.join(artifacts::populations_file(&problem.system.basis_label(input)));
            artifacts::write_populations(&path, &problem, &traj, input)?;
        }
        artifacts::write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(summary)
}

/// DRAG relation of the first transmon's envelopes in a controls file.
pub fn cmd_drag_check(config: &RunConfig, controls: &Path, out: Option<&Path>) -> Result<DragReport> {
    let loaded = load_controls(config, controls)?;
    let (problem, traj) = replay(config, &loaded)?;
    let envelopes = problem.dynamics().applied_envelopes(&traj);
    let ux: Vec<f64> = envelopes.iter().map(|u| u[0]).collect();
    let uy: Vec<f64> = envelopes.iter().map(|u| u[1]).collect();
    let report = drag_analysis(&ux, &uy, problem.system.dt, problem.system.delta[0]);
    if let Some(dir) = output_dir(config, out) {
        artifacts::write_json(&dir.join("drag.json"), &report)?;
    }
    Ok(report)
}
