//! Quadratic gate-synthesis costs and fidelity metrics.
//!
//! Smoothed mode (controls `v` are envelope rates, state `z = (x, u)`):
//!
//! ```text
//! l(z, v)  = v' R_d v + u' R_c u
//! l_f(z_N) = (x_N - x_g)' Q_f (x_N - x_g) + u_N' R_f u_N
//! ```
//!
//! Direct mode uses `l = v' R_c v` and drops the envelope terms.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlMode, TransmonDynamics};
use crate::error::{Error, Result};
use crate::ilqr::Objective;
use crate::iso::CMatrix;
use crate::propagator::PadeScaling;
use crate::transmon::{goal_gate, unitarity_defect, GateName, GoalGate, TransmonSystem};

/// Inputs to [`fidelity`] must be unitary to this tolerance.
pub const UNITARY_TOLERANCE: f64 = 1e-6;

/// Diagonals of the four cost matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrices {
    /// Final unitary penalty, length `2d^2`.
    pub q_f: DVector<f64>,
    /// Envelope-rate penalty, length `m`.
    pub r_d: DVector<f64>,
    /// Envelope amplitude penalty, length `m`.
    pub r_c: DVector<f64>,
    /// Final envelope penalty, length `m`.
    pub r_f: DVector<f64>,
}

impl CostMatrices {
    /// Uniform diagonals.
    pub fn uniform(dim: usize, channels: usize, q_f: f64, r_d: f64, r_c: f64, r_f: f64) -> Self {
        Self {
            q_f: DVector::from_element(2 * dim * dim, q_f),
            r_d: DVector::from_element(channels, r_d),
            r_c: DVector::from_element(channels, r_c),
            r_f: DVector::from_element(channels, r_f),
        }
    }

    /// Starting point before any tuning: `Q_f = 100, R_d = 1, R_c = 0.1, R_f = 1`.
    pub fn default_for(dim: usize, channels: usize) -> Self {
        Self::uniform(dim, channels, 100.0, 1.0, 0.1, 1.0)
    }

    /// Scales each matrix by its multiplier.
    pub fn scaled(&self, q_f: f64, r_d: f64, r_c: f64, r_f: f64) -> Self {
        Self {
            q_f: &self.q_f * q_f,
            r_d: &self.r_d * r_d,
            r_c: &self.r_c * r_c,
            r_f: &self.r_f * r_f,
        }
    }

    pub fn validate(&self, dim: usize, channels: usize, mode: ControlMode) -> Result<()> {
        let checks: [(&str, &DVector<f64>, usize); 4] = [
            ("costs.q-f", &self.q_f, 2 * dim * dim),
            ("costs.r-d", &self.r_d, channels),
            ("costs.r-c", &self.r_c, channels),
            ("costs.r-f", &self.r_f, channels),
        ];
        for (field, diag, len) in checks {
            if diag.len() != len {
                return Err(Error::config(field, format!("expected {len} diagonal entries, found {}", diag.len())));
            }
            if diag.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::config(field, "diagonal entries must be finite and non-negative"));
            }
        }
        if mode == ControlMode::Smoothed && self.r_d.iter().any(|v| *v <= 0.0) {
            return Err(Error::config("costs.r-d", "rate penalty must be positive definite"));
        }
        Ok(())
    }
}

/// Value and derivatives of a stage or final cost at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct CostDerivatives {
    pub l: f64,
    pub l_x: DVector<f64>,
    pub l_u: DVector<f64>,
    pub l_xx: DMatrix<f64>,
    pub l_uu: DMatrix<f64>,
    pub l_ux: DMatrix<f64>,
}

fn quad(diag: &DVector<f64>, v: &[f64]) -> f64 {
    diag.iter().zip(v).map(|(q, x)| q * x * x).sum()
}

/// Stage cost `l(z, v)` and its derivatives.
pub fn stage_cost(z: &DVector<f64>, v: &DVector<f64>, costs: &CostMatrices, mode: ControlMode) -> Result<CostDerivatives> {
    let m = costs.r_c.len();
    let nx = costs.q_f.len();
    let n = match mode {
        ControlMode::Direct => nx,
        ControlMode::Smoothed => nx + m,
    };
    if z.len() != n {
        return Err(Error::dims("stage_cost state", n, z.len()));
    }
    if v.len() != m {
        return Err(Error::dims("stage_cost control", m, v.len()));
    }
    let mut out = CostDerivatives {
        l: 0.0,
        l_x: DVector::zeros(n),
        l_u: DVector::zeros(m),
        l_xx: DMatrix::zeros(n, n),
        l_uu: DMatrix::zeros(m, m),
        l_ux: DMatrix::zeros(m, n),
    };
    let rate = match mode {
        ControlMode::Direct => &costs.r_c,
        ControlMode::Smoothed => &costs.r_d,
    };
    out.l += quad(rate, v.as_slice());
    for j in 0..m {
        out.l_u[j] = 2.0 * rate[j] * v[j];
        out.l_uu[(j, j)] = 2.0 * rate[j];
    }
    if mode == ControlMode::Smoothed {
        let u = &z.as_slice()[nx..];
        out.l += quad(&costs.r_c, u);
        for j in 0..m {
            out.l_x[nx + j] = 2.0 * costs.r_c[j] * u[j];
            out.l_xx[(nx + j, nx + j)] = 2.0 * costs.r_c[j];
        }
    }
    Ok(out)
}

/// Final cost `l_f(z_N)` and its derivatives; control blocks are empty.
pub fn final_cost(z: &DVector<f64>, goal: &GoalGate, costs: &CostMatrices, mode: ControlMode) -> Result<CostDerivatives> {
    let m = costs.r_f.len();
    let nx = costs.q_f.len();
    let n = match mode {
        ControlMode::Direct => nx,
        ControlMode::Smoothed => nx + m,
    };
    if goal.vectorized.as_real().len() != nx {
        return Err(Error::dims("final_cost goal", nx, goal.vectorized.as_real().len()));
    }
    if z.len() != n {
        return Err(Error::dims("final_cost state", n, z.len()));
    }
    let xg = goal.vectorized.as_real();
    let mut out = CostDerivatives {
        l: 0.0,
        l_x: DVector::zeros(n),
        l_u: DVector::zeros(0),
        l_xx: DMatrix::zeros(n, n),
        l_uu: DMatrix::zeros(0, 0),
        l_ux: DMatrix::zeros(0, n),
    };
    for i in 0..nx {
        let e = z[i] - xg[i];
        out.l += costs.q_f[i] * e * e;
        out.l_x[i] = 2.0 * costs.q_f[i] * e;
        out.l_xx[(i, i)] = 2.0 * costs.q_f[i];
    }
    if mode == ControlMode::Smoothed {
        for j in 0..m {
            let u = z[nx + j];
            out.l += costs.r_f[j] * u * u;
            out.l_x[nx + j] = 2.0 * costs.r_f[j] * u;
            out.l_xx[(nx + j, nx + j)] = 2.0 * costs.r_f[j];
        }
    }
    Ok(out)
}

/// Gate error of a final unitary measured two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// `|vec(U_N) - vec(U_g)|^2`, sensitive to global phase.
    pub frobenius_cost: f64,
    /// `1 - |Tr(U_g^dagger U_N)|^2 / d^2`, global-phase invariant.
    pub trace_infidelity: f64,
}

pub fn fidelity(u: &CMatrix, goal: &GoalGate) -> Result<FidelityReport> {
    let d = goal.unitary.nrows();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::dims("fidelity", d, u.nrows()));
    }
    for m in [u, &goal.unitary] {
        let deviation = unitarity_defect(m);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NonUnitaryInput { deviation });
        }
    }
    let frobenius_cost = (u - &goal.unitary).iter().map(|z| z.norm_sqr()).sum();
    let trace = (goal.unitary.adjoint() * u).trace();
    let trace_infidelity = (1.0 - trace.norm_sqr() / (d * d) as f64).max(0.0);
    Ok(FidelityReport {
        frobenius_cost,
        trace_infidelity,
    })
}

/// A complete gate-synthesis problem.
#[derive(Clone, Debug)]
pub struct GateProblem {
    pub system: TransmonSystem,
    pub mode: ControlMode,
    pub goal: GoalGate,
    pub costs: CostMatrices,
    /// Number of knot points; there are `knots - 1` stage controls.
    pub knots: usize,
    pub scaling: PadeScaling,
}

impl GateProblem {
    pub fn new(system: TransmonSystem, mode: ControlMode, goal: GateName, costs: CostMatrices, knots: usize) -> Result<Self> {
        if knots < 2 {
            return Err(Error::config("n", format!("need at least 2 knot points, got {knots}")));
        }
        if !(system.dt > 0.0 && system.dt.is_finite()) {
            return Err(Error::config("dt", "time step must be positive"));
        }
        let goal = goal_gate(goal, &system).map_err(|_| {
            Error::config("goal", format!("goal {goal} does not fit the {} system", system.kind))
        })?;
        costs.validate(system.dim(), system.channels(), mode)?;
        Ok(Self {
            system,
            mode,
            goal,
            costs,
            knots,
            scaling: PadeScaling::default(),
        })
    }

    pub fn dynamics(&self) -> TransmonDynamics {
        TransmonDynamics::new(&self.system, self.mode, self.scaling)
    }

    pub fn objective(&self) -> GateObjective<'_> {
        GateObjective {
            goal: &self.goal,
            costs: &self.costs,
            mode: self.mode,
        }
    }
}

/// [`Objective`] view over a problem's costs.
#[derive(Clone, Copy, Debug)]
pub struct GateObjective<'a> {
    pub goal: &'a GoalGate,
    pub costs: &'a CostMatrices,
    pub mode: ControlMode,
}

impl Objective for GateObjective<'_> {
    fn stage(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<CostDerivatives> {
        stage_cost(z, v, self.costs, self.mode)
    }

    fn terminal(&self, z: &DVector<f64>) -> Result<CostDerivatives> {
        final_cost(z, self.goal, self.costs, self.mode)
    }

    fn stage_value(&self, z: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let nx = self.costs.q_f.len();
        match self.mode {
            ControlMode::Direct => quad(&self.costs.r_c, v.as_slice()),
            ControlMode::Smoothed => quad(&self.costs.r_d, v.as_slice()) + quad(&self.costs.r_c, &z.as_slice()[nx..]),
        }
    }

    fn terminal_value(&self, z: &DVector<f64>) -> f64 {
        let nx = self.costs.q_f.len();
        let xg = self.goal.vectorized.as_real();
        let mut l: f64 = (0..nx).map(|i| self.costs.q_f[i] * (z[i] - xg[i]).powi(2)).sum();
        if self.mode == ControlMode::Smoothed {
            l += quad(&self.costs.r_f, &z.as_slice()[nx..]);
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::vectorize_unitary;
    use crate::transmon::SystemKind;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn qubit() -> (TransmonSystem, GoalGate) {
        let sys = TransmonSystem::standard(SystemKind::OneQubitTwoLevel);
        let goal = goal_gate(GateName::X2, &sys).unwrap();
        (sys, goal)
    }

    #[test]
    fn zero_point_has_zero_stage_cost() {
        let costs = CostMatrices::default_for(2, 2);
        let out = stage_cost(&DVector::zeros(10), &DVector::zeros(2), &costs, ControlMode::Smoothed).unwrap();
        assert_eq!(out.l, 0.0);
        assert!(out.l_x.iter().chain(out.l_u.iter()).all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_rate_penalty() {
        let costs = CostMatrices {
            q_f: DVector::zeros(2),
            r_d: DVector::from_element(1, 2.0),
            r_c: DVector::zeros(1),
            r_f: DVector::zeros(1),
        };
        let out = stage_cost(&DVector::zeros(3), &DVector::from_element(1, 3.0), &costs, ControlMode::Smoothed).unwrap();
        assert_eq!(out.l, 18.0);
        assert_eq!(out.l_u[0], 12.0);
        assert_eq!(out.l_uu[(0, 0)], 4.0);
    }

    #[test]
    fn final_cost_identity_vs_x2() {
        let (_, goal) = qubit();
        let costs = CostMatrices::uniform(2, 2, 1.0, 1.0, 0.0, 0.0);
        let z = vectorize_unitary(&CMatrix::identity(2, 2)).into_real();
        let out = final_cost(&z, &goal, &costs, ControlMode::Direct).unwrap();
        assert_eq!(out.l, 4.0);
        let at_goal = final_cost(goal.vectorized.as_real(), &goal, &costs, ControlMode::Direct).unwrap();
        assert_eq!(at_goal.l, 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (_, goal) = qubit();
        let costs = CostMatrices::uniform(2, 2, 3.0, 0.7, 0.2, 1.5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let z = DVector::from_fn(10, |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
        let h = 1e-6;
        let stage = stage_cost(&z, &v, &costs, ControlMode::Smoothed).unwrap();
        let term = final_cost(&z, &goal, &costs, ControlMode::Smoothed).unwrap();
        let objective = GateObjective { goal: &goal, costs: &costs, mode: ControlMode::Smoothed };
        assert!((objective.stage_value(&z, &v) - stage.l).abs() < 1e-14);
        assert!((objective.terminal_value(&z) - term.l).abs() < 1e-14);
        for i in 0..10 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let fd = (objective.stage_value(&zp, &v) - objective.stage_value(&zm, &v)) / (2.0 * h);
            assert!((fd - stage.l_x[i]).abs() <= 1e-8);
            let fd = (objective.terminal_value(&zp) - objective.terminal_value(&zm)) / (2.0 * h);
            assert!((fd - term.l_x[i]).abs() <= 1e-8);
            let grad_p = final_cost(&zp, &goal, &costs, ControlMode::Smoothed).unwrap().l_x;
            let grad_m = final_cost(&zm, &goal, &costs, ControlMode::Smoothed).unwrap().l_x;
            let col = (grad_p - grad_m) / (2.0 * h);
            assert!((col - term.l_xx.column(i)).amax() <= 1e-8);
        }
        for j in 0..2 {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[j] += h;
            vm[j] -= h;
            let fd = (objective.stage_value(&z, &vp) - objective.stage_value(&z, &vm)) / (2.0 * h);
            assert!((fd - stage.l_u[j]).abs() <= 1e-8);
        }
        assert!(stage.l_ux.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn global_phase_splits_the_metrics() {
        let (_, goal) = qubit();
        let exact = fidelity(&goal.unitary, &goal).unwrap();
        assert_eq!(exact.trace_infidelity, 0.0);
        assert_eq!(exact.frobenius_cost, 0.0);
        let phased = goal.unitary.map(|z| z * Complex64::from_polar(1.0, 0.3));
        let report = fidelity(&phased, &goal).unwrap();
        assert!(report.trace_infidelity < 1e-15);
        assert!(report.frobenius_cost > 0.1);
    }

    #[test]
    fn fidelity_rejects_non_unitary() {
        let (_, goal) = qubit();
        let u = CMatrix::identity(2, 2) * Complex64::new(1.1, 0.0);
        assert!(matches!(fidelity(&u, &goal), Err(Error::NonUnitaryInput { .. })));
    }

    #[test]
    fn problem_validation() {
        let sys = TransmonSystem::standard(SystemKind::OneQubitTwoLevel);
        let costs = CostMatrices::default_for(2, 2);
        let err = GateProblem::new(sys.clone(), ControlMode::Smoothed, GateName::X2, costs.clone(), 1).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "n"));
        let err = GateProblem::new(sys.clone(), ControlMode::Smoothed, GateName::Cr9, costs.clone(), 10).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "goal"));
        let mut bad = costs.clone();
        bad.r_c[0] = -1.0;
        assert!(GateProblem::new(sys, ControlMode::Smoothed, GateName::X2, bad, 10).is_err());
    }
}
