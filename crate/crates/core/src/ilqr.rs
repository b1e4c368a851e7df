//! Iterative linear quadratic regulator.
//!
//! Each iteration linearizes the dynamics along the current trajectory,
//! runs a Gauss-Newton backward pass over the value function (second-order
//! dynamics terms are dropped), and applies the resulting affine control law
//! in a line-searched closed-loop forward rollout. Invertibility of `Q_uu`
//! is enforced with Levenberg-Marquardt regularization `Q_uu + mu I`, and
//! steps are accepted with a Goldstein-type sufficient-decrease test against
//! the quadratic model `alpha * d1 + alpha^2 / 2 * d2`.
//!
//! The engine is generic over [`Dynamics`] and [`Objective`]; the gate
//! problem is wired up by [`solve`].

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iso::CMatrix;
use crate::ocp::{fidelity, CostDerivatives, FidelityReport, GateProblem};
use crate::transmon::unitarity_defect;

/// First-order model of one dynamics stage.
pub trait Linearization: Send + Sync {
    /// `m * f_x`.
    fn mul_fx(&self, m: &DMatrix<f64>) -> DMatrix<f64>;
    /// `f_x^T v`.
    fn fx_transpose_mul(&self, v: &DVector<f64>) -> DVector<f64>;
    fn fu(&self) -> &DMatrix<f64>;
    /// `m * f_u`.
    fn mul_fu(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m * self.fu()
    }
    /// `f_u^T m`.
    fn fu_transpose_mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.fu().tr_mul(m)
    }
}

pub trait Dynamics: Sync {
    type Jacobians: Linearization;

    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn step(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>>;
    fn linearize(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<Self::Jacobians>;
}

pub trait Objective: Sync {
    fn stage(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<CostDerivatives>;
    fn terminal(&self, z: &DVector<f64>) -> Result<CostDerivatives>;
    fn stage_value(&self, z: &DVector<f64>, v: &DVector<f64>) -> f64;
    fn terminal_value(&self, z: &DVector<f64>) -> f64;
}

/// Dense Jacobians, for small or generic problems.
#[derive(Clone, Debug)]
pub struct DenseJacobians {
    pub fx: DMatrix<f64>,
    pub fu: DMatrix<f64>,
}

impl Linearization for DenseJacobians {
    fn mul_fx(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m * &self.fx
    }

    fn fx_transpose_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.fx.tr_mul(v)
    }

    fn fu(&self) -> &DMatrix<f64> {
        &self.fu
    }
}

/// States `z_1 .. z_N` and stage controls `v_1 .. v_{N-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn knots(&self) -> usize {
        self.states.len()
    }

    pub fn last_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least one state")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this.
    pub cost_tolerance: f64,
    /// Stop when `max_k |Q_u,k|_inf` falls below this.
    pub gradient_tolerance: f64,
    pub mu_init: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_factor: f64,
    /// Line-search step lengths, tried in order.
    pub alphas: Vec<f64>,
    /// Fraction of the predicted decrease an accepted step must achieve.
    pub goldstein: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            cost_tolerance: 1e-12,
            gradient_tolerance: 1e-9,
            mu_init: 1e-6,
            mu_min: 1e-9,
            mu_max: 1e10,
            mu_factor: 10.0,
            alphas: (0..=10).map(|i| 0.5_f64.powi(i)).collect(),
            goldstein: 0.1,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("solver.cost-tolerance", self.cost_tolerance),
            ("solver.gradient-tolerance", self.gradient_tolerance),
            ("solver.mu-init", self.mu_init),
            ("solver.mu-min", self.mu_min),
            ("solver.mu-max", self.mu_max),
            ("solver.goldstein", self.goldstein),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::config("solver.max-iterations", "must be positive"));
        }
        if self.goldstein >= 1.0 {
            return Err(Error::config("solver.goldstein", "must be below 1"));
        }
        if self.mu_factor <= 1.0 {
            return Err(Error::config("solver.mu-factor", "must exceed 1"));
        }
        if self.mu_min > self.mu_max || self.mu_init > self.mu_max {
            return Err(Error::config("solver.mu-max", "must bound mu-init and mu-min"));
        }
        let decreasing = self.alphas.windows(2).all(|w| w[1] < w[0]);
        if self.alphas.first() != Some(&1.0) || !decreasing || self.alphas.iter().any(|a| *a <= 0.0) {
            return Err(Error::config("solver.alphas", "must start at 1 and decrease strictly towards 0"));
        }
        Ok(())
    }
}

/// Gains and model-decrease terms from one backward sweep.
#[derive(Clone, Debug)]
pub struct BackwardPassResult {
    pub feedforward: Vec<DVector<f64>>,
    pub feedback: Vec<DMatrix<f64>>,
    /// `sum_k kappa_k' Q_u,k`; never positive.
    pub expected_linear: f64,
    /// `sum_k kappa_k' Q_uu,k kappa_k`.
    pub expected_quadratic: f64,
    /// `max_k |Q_u,k|_inf`.
    pub gradient_norm: f64,
}

impl BackwardPassResult {
    /// Model cost change for step length `alpha`.
    pub fn expected_change(&self, alpha: f64) -> f64 {
        alpha * self.expected_linear + 0.5 * alpha * alpha * self.expected_quadratic
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Backward recursion of the value function along a trajectory.
///
/// `jacobians[k]` and `stage[k]` belong to stage `k`; `terminal` is the final
/// cost expansion. Fails with [`Error::FactorizationFailure`] when
/// `Q_uu + mu I` is not positive definite at some stage.
pub fn backward_pass<J: Linearization>(
    jacobians: &[J],
    stage: &[CostDerivatives],
    terminal: &CostDerivatives,
    mu: f64,
) -> Result<BackwardPassResult> {
    let horizon = jacobians.len();
    if stage.len() != horizon {
        return Err(Error::dims("backward_pass stage costs", horizon, stage.len()));
    }
    let mut v_x = terminal.l_x.clone();
    let mut v_xx = terminal.l_xx.clone();
    let mut feedforward = vec![DVector::zeros(0); horizon];
    let mut feedback = vec![DMatrix::zeros(0, 0); horizon];
    let mut expected_linear = 0.0;
    let mut expected_quadratic = 0.0;
    let mut gradient_norm: f64 = 0.0;

    for k in (0..horizon).rev() {
        let jac = &jacobians[k];
        let cost = &stage[k];
        let fu = jac.fu();
        let m = fu.ncols();

        let q_x = &cost.l_x + jac.fx_transpose_mul(&v_x);
        let q_u = &cost.l_u + fu.tr_mul(&v_x);
        // V_xx is symmetric, so (V_xx f_x)^T = f_x^T V_xx
        let vxx_fx = jac.mul_fx(&v_xx);
        let q_xx = &cost.l_xx + jac.mul_fx(&vxx_fx.transpose());
        let q_ux = &cost.l_ux + jac.fu_transpose_mul(&vxx_fx);
        let vxx_fu = jac.mul_fu(&v_xx);
        let mut q_uu = &cost.l_uu + jac.fu_transpose_mul(&vxx_fu);
        symmetrize(&mut q_uu);

        let regularized = &q_uu + DMatrix::<f64>::identity(m, m) * mu;
        let chol = regularized
            .cholesky()
            .ok_or(Error::FactorizationFailure { stage: k })?;
        let kappa = -chol.solve(&q_u);
        let gain = -chol.solve(&q_ux);

        expected_linear += kappa.dot(&q_u);
        expected_quadratic += kappa.dot(&(&q_uu * &kappa));
        gradient_norm = gradient_norm.max(q_u.amax());

        // V_x = Q_x - Q_xu Q_uu^-1 Q_u,  V_xx = Q_xx - Q_xu Q_uu^-1 Q_ux
        v_x = q_x + q_ux.tr_mul(&kappa);
        v_xx = q_xx;
        for r in 0..m {
            v_xx.ger(1.0, &q_ux.row(r).transpose(), &gain.row(r).transpose(), 1.0);
        }
        symmetrize(&mut v_xx);

        feedforward[k] = kappa;
        feedback[k] = gain;
    }

    Ok(BackwardPassResult {
        feedforward,
        feedback,
        expected_linear,
        expected_quadratic,
        gradient_norm,
    })
}

/// Total cost of a trajectory.
pub fn trajectory_cost<O: Objective>(objective: &O, traj: &Trajectory) -> f64 {
    let running: f64 = traj
        .controls
        .iter()
        .zip(&traj.states)
        .map(|(v, z)| objective.stage_value(z, v))
        .sum();
    running + objective.terminal_value(traj.last_state())
}

/// Open-loop rollout for any [`Dynamics`].
pub fn rollout<D: Dynamics>(dynamics: &D, z1: &DVector<f64>, controls: &[DVector<f64>]) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(z1.clone());
    for v in controls {
        let next = dynamics.step(states.last().expect("non-empty"), v)?;
        states.push(next);
    }
    Ok(Trajectory {
        states,
        controls: controls.to_vec(),
    })
}

/// Closed-loop rollout `v_new = v + alpha kappa + K (z_new - z)` from the
/// fixed initial state. Returns the new trajectory and its total cost.
pub fn forward_pass<D: Dynamics, O: Objective>(
    dynamics: &D,
    objective: &O,
    traj: &Trajectory,
    gains: &BackwardPassResult,
    alpha: f64,
) -> Result<(Trajectory, f64)> {
    let horizon = traj.controls.len();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    states.push(traj.states[0].clone());
    let mut cost = 0.0;
    for k in 0..horizon {
        let z = &states[k];
        let dz = z - &traj.states[k];
        let v = &traj.controls[k] + &gains.feedforward[k] * alpha + &gains.feedback[k] * dz;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteCost);
        }
        cost += objective.stage_value(z, &v);
        let next = dynamics.step(z, &v)?;
        controls.push(v);
        states.push(next);
    }
    cost += objective.terminal_value(states.last().expect("non-empty"));
    if !cost.is_finite() {
        return Err(Error::NonFiniteCost);
    }
    Ok((Trajectory { states, controls }, cost))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// An accepted step changed the cost by less than the cost tolerance.
    CostTolerance,
    /// The largest `|Q_u|` entry fell below the gradient tolerance.
    GradientTolerance,
    MaxIterations,
    /// Regularization exceeded `mu_max` without an acceptable step.
    NoProgress,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Termination::CostTolerance | Termination::GradientTolerance)
    }
}

/// One row of the iteration log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Cost after this iteration.
    #[serde(rename = "J")]
    pub cost: f64,
    pub grad_norm: f64,
    /// Regularization used by the backward pass of this iteration.
    pub mu: f64,
    /// Accepted step length, `None` when the line search failed.
    pub alpha: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct IlqrOutcome {
    pub trajectory: Trajectory,
    pub cost: f64,
    pub log: Vec<IterationRecord>,
    pub termination: Termination,
    /// Number of accepted steps.
    pub accepted: usize,
}

/// Runs iLQR from the given initial controls.
pub fn optimize<D: Dynamics, O: Objective>(
    dynamics: &D,
    objective: &O,
    z1: &DVector<f64>,
    controls: Vec<DVector<f64>>,
    settings: &SolverSettings,
) -> Result<IlqrOutcome> {
    settings.validate()?;
    let start = Instant::now();
    let mut traj = rollout(dynamics, z1, &controls)?;
    let mut cost = trajectory_cost(objective, &traj);
    if !cost.is_finite() {
        return Err(Error::NonFiniteCost);
    }
    let mut mu = settings.mu_init;
    let mut log = Vec::new();
    let mut accepted = 0;
    let mut termination = Termination::MaxIterations;

    'outer: for iter in 0..settings.max_iterations {
        let jacobians: Vec<D::Jacobians> = traj
            .states
            .par_iter()
            .zip(traj.controls.par_iter())
            .map(|(z, v)| dynamics.linearize(z, v))
            .collect::<Result<_>>()?;
        let stage: Vec<CostDerivatives> = traj
            .states
            .par_iter()
            .zip(traj.controls.par_iter())
            .map(|(z, v)| objective.stage(z, v))
            .collect::<Result<_>>()?;
        let terminal = objective.terminal(traj.last_state())?;

        let gains = loop {
            match backward_pass(&jacobians, &stage, &terminal, mu) {
                Ok(g) => break g,
                Err(Error::FactorizationFailure { .. }) => {
                    mu *= settings.mu_factor;
                    if mu > settings.mu_max {
                        termination = Termination::NoProgress;
                        break 'outer;
                    }
                }
                Err(e) => return Err(e),
            }
        };

        if gains.gradient_norm <= settings.gradient_tolerance {
            log.push(record(iter, cost, &gains, mu, None, start));
            termination = Termination::GradientTolerance;
            break;
        }

        let mut step = None;
        for &alpha in &settings.alphas {
            let predicted = -gains.expected_change(alpha);
            if predicted <= 0.0 {
                continue;
            }
            match forward_pass(dynamics, objective, &traj, &gains, alpha) {
                Ok((candidate, new_cost)) => {
                    if cost - new_cost >= settings.goldstein * predicted {
                        step = Some((alpha, candidate, new_cost));
                        break;
                    }
                }
                Err(Error::NonFiniteCost | Error::SingularDenominator) => continue,
                Err(e) => return Err(e),
            }
        }

        match step {
            Some((alpha, candidate, new_cost)) => {
                let improvement = cost - new_cost;
                traj = candidate;
                cost = new_cost;
                accepted += 1;
                log.push(record(iter, cost, &gains, mu, Some(alpha), start));
                mu = (mu / settings.mu_factor).max(settings.mu_min);
                if improvement < settings.cost_tolerance {
                    termination = Termination::CostTolerance;
                    break;
                }
            }
            None => {
                log.push(record(iter, cost, &gains, mu, None, start));
                mu *= settings.mu_factor;
                if mu > settings.mu_max {
                    termination = Termination::NoProgress;
                    break;
                }
            }
        }
    }

    Ok(IlqrOutcome {
        trajectory: traj,
        cost,
        log,
        termination,
        accepted,
    })
}

fn record(iter: usize, cost: f64, gains: &BackwardPassResult, mu: f64, alpha: Option<f64>, start: Instant) -> IterationRecord {
    IterationRecord {
        iter,
        cost,
        grad_norm: gains.gradient_norm,
        mu,
        alpha,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Initial controls drawn uniformly from `[-bound, bound]`.
///
/// `stream` selects an independent ChaCha stream for the same seed, so grid
/// cell `i` can use stream `i` while stream 0 matches a plain run.
pub fn random_controls(seed: u64, stream: u64, count: usize, channels: usize, bound: f64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|_| {
            DVector::from_fn(channels, |_, _| {
                if bound > 0.0 {
                    rng.gen_range(-bound..=bound)
                } else {
                    0.0
                }
            })
        })
        .collect()
}

/// Result of solving a [`GateProblem`].
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub cost: f64,
    pub log: Vec<IterationRecord>,
    pub termination: Termination,
    pub accepted: usize,
    pub fidelity: FidelityReport,
    pub final_unitary: CMatrix,
    pub unitarity_drift: f64,
}

/// Optimizes a gate problem from the given stage controls.
pub fn solve(problem: &GateProblem, initial_controls: Vec<DVector<f64>>, settings: &SolverSettings) -> Result<SolveReport> {
    let expected = problem.knots - 1;
    if initial_controls.len() != expected {
        return Err(Error::dims("solve initial controls", expected, initial_controls.len()));
    }
    let dynamics = problem.dynamics();
    let objective = problem.objective();
    let outcome = optimize(&dynamics, &objective, &dynamics.initial_state(), initial_controls, settings)?;
    let final_unitary = dynamics.unitary(outcome.trajectory.last_state());
    let unitarity_drift = outcome
        .trajectory
        .states
        .iter()
        .map(|z| unitarity_defect(&dynamics.unitary(z)))
        .fold(0.0, f64::max);
    let fidelity = fidelity(&final_unitary, &problem.goal)?;
    Ok(SolveReport {
        trajectory: outcome.trajectory,
        cost: outcome.cost,
        log: outcome.log,
        termination: outcome.termination,
        accepted: outcome.accepted,
        fidelity,
        final_unitary,
        unitarity_drift,
    })
}
