use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::ControlMode;
use crate::error::{Error, Result};
use crate::ilqr::SolverSettings;
use crate::ocp::{CostMatrices, GateProblem};
use crate::propagator::PadeScaling;
use crate::transmon::{DeviceParameters, GateName, SystemKind, TransmonSystem, DEFAULT_DT};

use super::grid::GridSpec;

/// A cost diagonal given as one scalar or as the full list of entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Diagonal {
    Uniform(f64),
    Entries(Vec<f64>),
}

impl Diagonal {
    fn expand(&self, len: usize, field: &str) -> Result<DVector<f64>> {
        match self {
            Diagonal::Uniform(v) => Ok(DVector::from_element(len, *v)),
            Diagonal::Entries(v) if v.len() == len => Ok(DVector::from_column_slice(v)),
            Diagonal::Entries(v) => Err(Error::config(field, format!("expected 1 or {len} entries, found {}", v.len()))),
        }
    }
}

impl From<f64> for Diagonal {
    fn from(v: f64) -> Self {
        Diagonal::Uniform(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct CostSpec {
    pub q_f: Diagonal,
    pub r_d: Diagonal,
    pub r_c: Diagonal,
    pub r_f: Diagonal,
}

impl Default for CostSpec {
    fn default() -> Self {
        Self {
            q_f: 100.0.into(),
            r_d: 1.0.into(),
            r_c: 0.1.into(),
            r_f: 1.0.into(),
        }
    }
}

impl CostSpec {
    pub fn uniform(q_f: f64, r_d: f64, r_c: f64, r_f: f64) -> Self {
        Self {
            q_f: q_f.into(),
            r_d: r_d.into(),
            r_c: r_c.into(),
            r_f: r_f.into(),
        }
    }

    pub fn matrices(&self, dim: usize, channels: usize) -> Result<CostMatrices> {
        Ok(CostMatrices {
            q_f: self.q_f.expand(2 * dim * dim, "costs.q-f")?,
            r_d: self.r_d.expand(channels, "costs.r-d")?,
            r_c: self.r_c.expand(channels, "costs.r-c")?,
            r_f: self.r_f.expand(channels, "costs.r-f")?,
        })
    }
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_bound() -> f64 {
    0.01
}

fn default_population_states() -> Vec<usize> {
    vec![0]
}

/// Everything needed to run one experiment, read from a TOML file.
///
/// ```toml
/// system = "1q2l"
/// mode = "direct"
/// n = 81
///
/// [costs]
/// q-f = 1.0
/// r-c = 1e-6
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemKind,
    /// Device parameter overrides in GHz.
    #[serde(default)]
    pub parameters: DeviceParameters,
    #[serde(default)]
    pub mode: ControlMode,
    /// Defaults to the gate paired with `system`.
    #[serde(default)]
    pub goal: Option<GateName>,
    /// Number of knot points; there are `n - 1` piecewise-constant intervals.
    pub n: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub costs: CostSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub seed: u64,
    /// Initial controls are drawn uniformly from `[-bound, bound]`.
    #[serde(default = "default_bound")]
    pub init_bound: f64,
    #[serde(default)]
    pub pade_scaling: PadeScaling,
    /// Basis indices whose trajectories go to `populations_<ket>.csv`.
    #[serde(default = "default_population_states")]
    pub population_states: Vec<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl RunConfig {
    pub fn new(system: SystemKind, mode: ControlMode, n: usize) -> Self {
        Self {
            system,
            parameters: DeviceParameters::default(),
            mode,
            goal: None,
            n,
            dt: DEFAULT_DT,
            costs: CostSpec::default(),
            solver: SolverSettings::default(),
            seed: 0,
            init_bound: default_bound(),
            pade_scaling: PadeScaling::default(),
            population_states: default_population_states(),
            output_dir: None,
            grid: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn goal(&self) -> GateName {
        self.goal.unwrap_or_else(|| self.system.default_goal())
    }

    pub fn transmon_system(&self) -> TransmonSystem {
        TransmonSystem::new(self.system, &self.parameters, self.dt)
    }

    /// Checks every field and builds the problem.
    pub fn problem(&self) -> Result<GateProblem> {
        self.problem_with_costs(&self.costs)
    }

    pub(crate) fn problem_with_costs(&self, costs: &CostSpec) -> Result<GateProblem> {
        if self.n < 2 {
            return Err(Error::config("n", format!("need at least 2 knot points, got {}", self.n)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.init_bound >= 0.0 && self.init_bound.is_finite()) {
            return Err(Error::config("init-bound", "must be finite and non-negative"));
        }
        let sys = self.transmon_system();
        if let Some(&bad) = self.population_states.iter().find(|&&j| j >= sys.dim()) {
            return Err(Error::config(
                "population-states",
                format!("basis index {bad} is outside the {}-dimensional space", sys.dim()),
            ));
        }
        self.solver.validate()?;
        let matrices = costs.matrices(sys.dim(), sys.channels())?;
        let mut problem = GateProblem::new(sys, self.mode, self.goal(), matrices, self.n)?;
        problem.scaling = self.pade_scaling;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem()?;
        if let Some(grid) = &self.grid {
            grid.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let c = RunConfig::from_toml_str("system = \"1q2l\"\nn = 81\n").unwrap();
        assert_eq!(c.mode, ControlMode::Smoothed);
        assert_eq!(c.goal(), GateName::X2);
        assert_eq!(c.dt, 0.5);
        assert_eq!(c.init_bound, 0.01);
        assert_eq!(c.costs, CostSpec::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("system = \"1q2l\"\nn = 81\n[costs]\nqf = 3\n").unwrap_err();
        assert!(err.to_string().contains("qf"), "{err}");
        assert!(RunConfig::from_toml_str("system = \"1q2l\"\nn = 81\nnn = 2\n").is_err());
    }

    #[test]
    fn n_below_two_names_the_field() {
        match RunConfig::from_toml_str("system = \"1q2l\"\nn = 1\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "n"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonal_lengths_are_checked() {
        let text = "system = \"1q2l\"\nn = 5\n[costs]\nr-c = [1.0, 2.0]\nq-f = [1.0, 2.0]\n";
        match RunConfig::from_toml_str(text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "costs.q-f"),
            other => panic!("{other:?}"),
        }
        let text = "system = \"1q2l\"\nn = 5\n[costs]\nr-c = [1.0, 2.0]\n";
        let c = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(c.problem().unwrap().costs.r_c.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn incompatible_goal_is_rejected() {
        match RunConfig::from_toml_str("system = \"1q2l\"\ngoal = \"CR4\"\nn = 5\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "goal"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::new(SystemKind::TwoQubitThreeLevel, ControlMode::Direct, 12);
        c.costs.q_f = Diagonal::Entries(vec![2.0; 162]);
        c.parameters.coupling_ghz = 0.003;
        c.grid = Some(GridSpec::coarse());
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }
}
