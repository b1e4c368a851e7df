use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlMode, TransmonDynamics};
use crate::error::{Error, Result};
use crate::ilqr::{IterationRecord, Termination, Trajectory};
use crate::ocp::{fidelity, FidelityReport, GateProblem};
use crate::transmon::{unitarity_defect, GateName, SystemKind};

use super::config::RunConfig;

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub system: SystemKind,
    pub mode: ControlMode,
    pub goal: GateName,
    pub knots: usize,
    pub dt: f64,
    pub trace_infidelity: f64,
    pub frobenius_cost: f64,
    /// Total optimization cost; absent for replays.
    pub cost: Option<f64>,
    /// `sum_k u_k dt` per channel.
    pub pulse_area: BTreeMap<String, f64>,
    /// `sum_k |du_k/dt|^2 dt` over all channels.
    pub smoothness: f64,
    /// Envelope held in the final state (smoothed mode only).
    pub final_envelope: Option<Vec<f64>>,
    /// Mean population outside the computational levels along each
    /// requested basis-state trajectory, keyed by ket label.
    pub mean_leakage: BTreeMap<String, f64>,
    pub unitarity_drift: f64,
    pub termination: Option<Termination>,
    pub iterations: Option<usize>,
    pub accepted_steps: Option<usize>,
    pub wall_ms: Option<f64>,
    pub config: RunConfig,
}

impl Summary {
    pub fn fidelity(&self) -> FidelityReport {
        FidelityReport {
            frobenius_cost: self.frobenius_cost,
            trace_infidelity: self.trace_infidelity,
        }
    }
}

/// Solver details copied into a summary.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolverStats {
    pub cost: Option<f64>,
    pub termination: Option<Termination>,
    pub iterations: Option<usize>,
    pub accepted_steps: Option<usize>,
    pub wall_ms: Option<f64>,
}

/// Derived per-trajectory quantities.
pub fn summarize(config: &RunConfig, problem: &GateProblem, traj: &Trajectory, stats: SolverStats) -> Result<Summary> {
    let dynamics = problem.dynamics();
    let sys = &problem.system;
    let final_unitary = dynamics.unitary(traj.last_state());
    let FidelityReport {
        frobenius_cost,
        trace_infidelity,
    } = fidelity(&final_unitary, &problem.goal)?;

    let envelopes = dynamics.applied_envelopes(traj);
    let names = sys.channel_names();
    let pulse_area = names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), envelopes.iter().map(|u| u[j]).sum::<f64>() * sys.dt))
        .collect();

    let final_envelope = match problem.mode {
        ControlMode::Smoothed => dynamics.split(traj.last_state())?.envelope.map(|u| u.as_slice().to_vec()),
        ControlMode::Direct => None,
    };
    let smoothness = match problem.mode {
        ControlMode::Smoothed => traj.controls.iter().map(|v| v.norm_squared()).sum::<f64>() * sys.dt,
        ControlMode::Direct => envelopes
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| ((b - a) / sys.dt).powi(2)).sum::<f64>())
            .sum::<f64>()
            * sys.dt,
    };

    let leak = sys.leakage_indices();
    let mut unitarity_drift: f64 = 0.0;
    let mut leakage_sums = vec![0.0; config.population_states.len()];
    for z in &traj.states {
        let u = dynamics.unitary(z);
        unitarity_drift = unitarity_drift.max(unitarity_defect(&u));
        for (sum, &input) in leakage_sums.iter_mut().zip(&config.population_states) {
            *sum += leak.iter().map(|&j| u[(j, input)].norm_sqr()).sum::<f64>();
        }
    }
    let mean_leakage = config
        .population_states
        .iter()
        .zip(leakage_sums)
        .map(|(&input, sum)| (sys.basis_label(input), sum / traj.states.len() as f64))
        .collect();

    Ok(Summary {
        system: sys.kind,
        mode: problem.mode,
        goal: problem.goal.name,
        knots: problem.knots,
        dt: sys.dt,
        trace_infidelity,
        frobenius_cost,
        cost: stats.cost,
        pulse_area,
        smoothness,
        final_envelope,
        mean_leakage,
        unitarity_drift,
        termination: stats.termination,
        iterations: stats.iterations,
        accepted_steps: stats.accepted_steps,
        wall_ms: stats.wall_ms,
        config: config.clone(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn rate_name(channel: &str) -> String {
    format!("{channel}_rate")
}

/// `controls.csv`: `k, t_ns`, the stage controls, and in smoothed mode the
/// applied envelopes.
pub fn write_controls(path: &Path, dynamics: &TransmonDynamics, names: &[String], traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["k".to_string(), "t_ns".to_string()];
    match dynamics.mode() {
        ControlMode::Direct => header.extend(names.iter().cloned()),
        ControlMode::Smoothed => {
            header.extend(names.iter().map(|n| rate_name(n)));
            header.extend(names.iter().cloned());
        }
    }
    w.write_record(&header)?;
    for (k, (z, v)) in traj.states.iter().zip(&traj.controls).enumerate() {
        let mut row = vec![k.to_string(), fmt(k as f64 * dynamics.dt())];
        row.extend(v.iter().map(|x| fmt(*x)));
        if dynamics.mode() == ControlMode::Smoothed {
            row.extend(dynamics.applied_envelope(z, v).iter().map(|x| fmt(*x)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the stage controls of a `controls.csv` written for the same system
/// and mode. Extra columns are ignored.
pub fn read_controls(path: &Path, mode: ControlMode, names: &[String], expected_rows: usize) -> Result<Vec<DVector<f64>>> {
    let fail = |message: String| Error::ControlsFile {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let wanted: Vec<String> = match mode {
        ControlMode::Direct => names.to_vec(),
        ControlMode::Smoothed => names.iter().map(|n| rate_name(n)).collect(),
    };
    let columns: Vec<usize> = wanted
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| fail(format!("missing column `{name}`")))
        })
        .collect::<Result<_>>()?;
    let mut controls = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut v = DVector::zeros(columns.len());
        for (j, &c) in columns.iter().enumerate() {
            let cell = record.get(c).ok_or_else(|| fail(format!("row {row} is missing column `{}`", wanted[j])))?;
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|_| fail(format!("row {row}, column `{}`: `{cell}` is not a number", wanted[j])))?;
            if !x.is_finite() {
                return Err(fail(format!("row {row}, column `{}` is not finite", wanted[j])));
            }
            v[j] = x;
        }
        controls.push(v);
    }
    if controls.len() != expected_rows {
        return Err(fail(format!("expected {expected_rows} control rows (n - 1), found {}", controls.len())));
    }
    Ok(controls)
}

/// File name used for the population trace of one basis input state.
pub fn populations_file(ket: &str) -> String {
    format!("populations_{ket}.csv")
}

/// `t_ns` and `|<j|U_k|input>|^2` for every basis state `j` at every knot.
pub fn write_populations(path: &Path, problem: &GateProblem, traj: &Trajectory, input: usize) -> Result<()> {
    let dynamics = problem.dynamics();
    let sys = &problem.system;
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["t_ns".to_string()];
    header.extend((0..sys.dim()).map(|j| format!("p{}", sys.basis_label(j))));
    w.write_record(&header)?;
    for (k, z) in traj.states.iter().enumerate() {
        let u = dynamics.unitary(z);
        let mut row = vec![fmt(k as f64 * sys.dt)];
        row.extend((0..sys.dim()).map(|j| fmt(u[(j, input)].norm_sqr())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence(path: &Path, log: &[IterationRecord]) -> Result<()> {
    let mut w = create(path)?;
    for rec in log {
        serde_json::to_writer(&mut w, rec)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_convergence(path: &Path) -> Result<Vec<IterationRecord>> {
    std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Paths of the files written for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ArtifactPaths {
    pub controls: PathBuf,
    pub populations: Vec<PathBuf>,
    pub convergence: Option<PathBuf>,
    pub summary: PathBuf,
}

/// Writes controls, populations, the optional iteration log and the summary.
pub fn write_run(
    dir: &Path,
    config: &RunConfig,
    problem: &GateProblem,
    traj: &Trajectory,
    log: Option<&[IterationRecord]>,
    summary: &Summary,
) -> Result<ArtifactPaths> {
    std::fs::create_dir_all(dir)?;
    let dynamics = problem.dynamics();
    let controls = dir.join("controls.csv");
    write_controls(&controls, &dynamics, &problem.system.channel_names(), traj)?;
    let mut populations = Vec::new();
    for &input in &config.population_states {
        let path = dir.join(populations_file(&problem.system.basis_label(input)));
        write_populations(&path, problem, traj, input)?;
        populations.push(path);
    }
    let convergence = match log {
        Some(log) => {
            let path = dir.join("convergence.jsonl");
            write_convergence(&path, log)?;
            Some(path)
        }
        None => None,
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, summary)?;
    Ok(ArtifactPaths {
        controls,
        populations,
        convergence,
        summary: summary_path,
    })
}
