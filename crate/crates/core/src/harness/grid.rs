use std::cmp::Ordering;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ilqr::{random_controls, solve, IterationRecord, Termination};
use crate::ocp::FidelityReport;

use super::config::{CostSpec, Diagonal, RunConfig};

pub const COARSE_MULTIPLIERS: [f64; 5] = [0.1, 0.5, 1.0, 5.0, 10.0];
pub const FINE_MULTIPLIERS: [f64; 9] = [0.1, 0.25, 0.5, 0.75, 1.0, 2.5, 5.0, 7.5, 10.0];

/// One of the four cost matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKey {
    QF,
    RD,
    RC,
    RF,
}

/// Multiplier lists applied to the base cost diagonals of a run.
///
/// A list with the single entry `1` keeps that matrix fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct GridSpec {
    pub q_f: Vec<f64>,
    pub r_d: Vec<f64>,
    pub r_c: Vec<f64>,
    pub r_f: Vec<f64>,
    /// Worker threads.
    pub jobs: usize,
    /// Independent random initializations per cell; the best one is kept.
    pub restarts: usize,
    /// Cells whose full artifacts are written.
    pub keep_top: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::coarse()
    }
}

impl GridSpec {
    /// `{1/10, 1/2, 1, 5, 10}` on all four matrices, 625 cells.
    pub fn coarse() -> Self {
        let list = COARSE_MULTIPLIERS.to_vec();
        Self {
            q_f: list.clone(),
            r_d: list.clone(),
            r_c: list.clone(),
            r_f: list,
            jobs: 1,
            restarts: 1,
            keep_top: 10,
        }
    }

    /// Nine-point lists on three matrices with `fixed` held at its base
    /// value, 729 cells.
    pub fn fine(fixed: CostKey) -> Self {
        let mut spec = Self {
            q_f: FINE_MULTIPLIERS.to_vec(),
            r_d: FINE_MULTIPLIERS.to_vec(),
            r_c: FINE_MULTIPLIERS.to_vec(),
            r_f: FINE_MULTIPLIERS.to_vec(),
            ..Self::coarse()
        };
        *spec.list_mut(fixed) = vec![1.0];
        spec
    }

    /// Grid with exactly one cell at the base costs.
    pub fn single() -> Self {
        Self {
            q_f: vec![1.0],
            r_d: vec![1.0],
            r_c: vec![1.0],
            r_f: vec![1.0],
            ..Self::coarse()
        }
    }

    fn list_mut(&mut self, key: CostKey) -> &mut Vec<f64> {
        match key {
            CostKey::QF => &mut self.q_f,
            CostKey::RD => &mut self.r_d,
            CostKey::RC => &mut self.r_c,
            CostKey::RF => &mut self.r_f,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, list) in [("grid.q-f", &self.q_f), ("grid.r-d", &self.r_d), ("grid.r-c", &self.r_c), ("grid.r-f", &self.r_f)] {
            if list.is_empty() {
                return Err(Error::config(field, "multiplier list must not be empty"));
            }
            if list.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                return Err(Error::config(field, "multipliers must be positive"));
            }
        }
        if self.jobs == 0 {
            return Err(Error::config("grid.jobs", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::config("grid.restarts", "must be at least 1"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.q_f.len() * self.r_d.len() * self.r_c.len() * self.r_f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in row-major order over `(q-f, r-d, r-c, r-f)`.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::with_capacity(self.len());
        for &a in &self.q_f {
            for &b in &self.r_d {
                for &c in &self.r_c {
                    for &d in &self.r_f {
                        out.push(GridCell {
                            index: out.len(),
                            multipliers: [a, b, c, d],
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub index: usize,
    /// Multipliers of `(Q_f, R_d, R_c, R_f)`.
    pub multipliers: [f64; 4],
}

fn scale(d: &Diagonal, s: f64) -> Diagonal {
    match d {
        Diagonal::Uniform(v) => Diagonal::Uniform(v * s),
        Diagonal::Entries(v) => Diagonal::Entries(v.iter().map(|x| x * s).collect()),
    }
}

impl GridCell {
    pub fn costs(&self, base: &CostSpec) -> CostSpec {
        let [a, b, c, d] = self.multipliers;
        CostSpec {
            q_f: scale(&base.q_f, a),
            r_d: scale(&base.r_d, b),
            r_c: scale(&base.r_c, c),
            r_f: scale(&base.r_f, d),
        }
    }

    /// Configuration of this cell; everything except the costs is shared.
    pub fn config(&self, base: &RunConfig) -> RunConfig {
        RunConfig {
            costs: self.costs(&base.costs),
            grid: None,
            ..base.clone()
        }
    }

    /// ChaCha stream of restart `r`; cell 0, restart 0 uses stream 0 like a
    /// plain optimize run.
    pub fn stream(&self, restarts: usize, r: usize) -> u64 {
        (self.index * restarts + r) as u64
    }
}

/// Outcome of one solved cell.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub fidelity: FidelityReport,
    pub cost: f64,
    pub termination: Termination,
    pub accepted: usize,
    pub controls: Vec<DVector<f64>>,
    pub log: Vec<IterationRecord>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: GridCell,
    pub outcome: std::result::Result<CellSolution, String>,
}

impl CellResult {
    pub fn infidelity(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|s| s.fidelity.trace_infidelity)
    }
}

/// One row of `grid_results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rank: usize,
    pub cell: usize,
    pub q_f: f64,
    pub r_d: f64,
    pub r_c: f64,
    pub r_f: f64,
    pub trace_infidelity: Option<f64>,
    pub frobenius_cost: Option<f64>,
    pub cost: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_ms: Option<f64>,
    pub termination: Option<String>,
    pub error: Option<String>,
}

fn solve_cell(base: &RunConfig, spec: &GridSpec, cell: GridCell) -> CellResult {
    let start = Instant::now();
    let config = cell.config(base);
    let outcome = (|| -> Result<CellSolution> {
        let problem = config.problem()?;
        let channels = problem.system.channels();
        let mut best: Option<CellSolution> = None;
        for r in 0..spec.restarts {
            let init = random_controls(config.seed, cell.stream(spec.restarts, r), config.n - 1, channels, config.init_bound);
            let report = solve(&problem, init, &config.solver)?;
            let candidate = CellSolution {
                fidelity: report.fidelity,
                cost: report.cost,
                termination: report.termination,
                accepted: report.accepted,
                controls: report.trajectory.controls,
                log: report.log,
                wall_ms: 0.0,
            };
            let better = best
                .as_ref()
                .is_none_or(|b| candidate.fidelity.trace_infidelity < b.fidelity.trace_infidelity);
            if better {
                best = Some(candidate);
            }
        }
        let mut best = best.expect("at least one restart");
        best.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(best)
    })();
    match &outcome {
        Ok(s) => log::info!(
            "cell {} {:?}: infidelity {:.3e} after {} iterations",
            cell.index,
            cell.multipliers,
            s.fidelity.trace_infidelity,
            s.log.len()
        ),
        Err(e) => log::warn!("cell {} {:?} failed: {e}", cell.index, cell.multipliers),
    }
    CellResult {
        cell,
        outcome: outcome.map_err(|e| e.to_string()),
    }
}

/// Solves every cell, ranked by trace infidelity with failures last.
pub fn run_grid(base: &RunConfig, spec: &GridSpec) -> Result<Vec<CellResult>> {
    run_cells(base, spec, &spec.cells())
}

/// Solves selected cells of `spec`, keeping their grid indices and streams.
pub fn run_cells(base: &RunConfig, spec: &GridSpec, cells: &[GridCell]) -> Result<Vec<CellResult>> {
    spec.validate()?;
    base.problem()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::config("grid.jobs", e.to_string()))?;
    let mut results: Vec<CellResult> = pool.install(|| cells.par_iter().map(|c| solve_cell(base, spec, *c)).collect());
    results.sort_by(|a, b| match (a.infidelity(), b.infidelity()) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.cell.index.cmp(&b.cell.index)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.cell.index.cmp(&b.cell.index),
    });
    Ok(results)
}

pub fn rows(results: &[CellResult]) -> Vec<GridRow> {
    results
        .iter()
        .enumerate()
        .map(|(rank, r)| {
            let [q_f, r_d, r_c, r_f] = r.cell.multipliers;
            let mut row = GridRow {
                rank: rank + 1,
                cell: r.cell.index,
                q_f,
                r_d,
                r_c,
                r_f,
                trace_infidelity: None,
                frobenius_cost: None,
                cost: None,
                iterations: None,
                wall_ms: None,
                termination: None,
                error: None,
            };
            match &r.outcome {
                Ok(s) => {
                    row.trace_infidelity = Some(s.fidelity.trace_infidelity);
                    row.frobenius_cost = Some(s.fidelity.frobenius_cost);
                    row.cost = Some(s.cost);
                    row.iterations = Some(s.log.len());
                    row.wall_ms = Some(s.wall_ms);
                    row.termination = Some(format!("{:?}", s.termination));
                }
                Err(e) => row.error = Some(e.clone()),
            }
            row
        })
        .collect()
}

pub fn write_rows(path: &Path, rows: &[GridRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<GridRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_sizes() {
        assert_eq!(GridSpec::coarse().len(), 625);
        assert_eq!(GridSpec::fine(CostKey::RC).len(), 729);
        assert_eq!(GridSpec::fine(CostKey::RC).r_c, vec![1.0]);
        assert_eq!(GridSpec::single().len(), 1);
    }

    #[test]
    fn cells_are_row_major() {
        let spec = GridSpec {
            q_f: vec![1.0, 2.0],
            r_d: vec![3.0],
            r_c: vec![4.0, 5.0],
            r_f: vec![6.0],
            ..GridSpec::coarse()
        };
        let cells = spec.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[1].multipliers, [1.0, 3.0, 5.0, 6.0]);
        assert_eq!(cells[2].multipliers, [2.0, 3.0, 4.0, 6.0]);
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
    }

    #[test]
    fn validation() {
        assert!(GridSpec::coarse().validate().is_ok());
        let bad = GridSpec { r_d: vec![], ..GridSpec::coarse() };
        assert!(bad.validate().is_err());
        let bad = GridSpec { q_f: vec![1.0, -1.0], ..GridSpec::coarse() };
        assert!(bad.validate().is_err());
        let bad = GridSpec { jobs: 0, ..GridSpec::coarse() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cell_costs_scale_base() {
        let base = CostSpec {
            q_f: Diagonal::Entries(vec![1.0, 2.0]),
            ..CostSpec::uniform(1.0, 2.0, 3.0, 4.0)
        };
        let cell = GridCell {
            index: 0,
            multipliers: [10.0, 0.5, 1.0, 0.1],
        };
        let c = cell.costs(&base);
        assert_eq!(c.q_f, Diagonal::Entries(vec![10.0, 20.0]));
        assert_eq!(c.r_d, Diagonal::Uniform(1.0));
        assert_eq!(c.r_f, Diagonal::Uniform(0.4));
    }
}
