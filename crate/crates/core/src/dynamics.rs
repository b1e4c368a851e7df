//! Discrete-time gate dynamics in two control modes.
//!
//! In [`ControlMode::Direct`] the optimizer's controls are the envelopes and
//! the state is the flattened unitary `x`. In [`ControlMode::Smoothed`] the
//! controls are envelope rates; the envelopes join the state, `z = (x, u)`,
//! and advance by `u+ = u + v dt` while the unitary advances with the
//! envelope held during the interval.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ilqr::{Dynamics, Linearization, Trajectory};
use crate::iso::{apply_left, devectorize_slice, mul_kron_right, mul_kron_right_into, vectorize_unitary, CMatrix, IsoMatrix, StateVectorization};
use crate::propagator::{step_propagator, ControlGenerators, PadeScaling};
use crate::transmon::{unitarity_defect, TransmonSystem};

/// Rollouts report a unitarity drift above this as a warning.
pub const UNITARITY_WARNING: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlMode {
    /// Controls are the envelope amplitudes.
    Direct,
    /// Controls are envelope derivatives; envelopes are part of the state.
    #[default]
    Smoothed,
}

/// Structured view of a state vector `z = (x, u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedState {
    pub unitary: StateVectorization,
    /// Envelope values, present only in smoothed mode.
    pub envelope: Option<DVector<f64>>,
}

impl AugmentedState {
    pub fn to_flat(&self) -> DVector<f64> {
        let x = self.unitary.as_real();
        match &self.envelope {
            None => x.clone(),
            Some(u) => DVector::from_iterator(x.len() + u.len(), x.iter().chain(u.iter()).copied()),
        }
    }
}

/// Gate dynamics for a transmon model.
#[derive(Clone, Debug)]
pub struct TransmonDynamics {
    generators: ControlGenerators,
    dim: usize,
    channels: usize,
    dt: f64,
    mode: ControlMode,
    scaling: PadeScaling,
}

impl TransmonDynamics {
    pub fn new(sys: &TransmonSystem, mode: ControlMode, scaling: PadeScaling) -> Self {
        Self {
            generators: sys.generators(),
            dim: sys.dim(),
            channels: sys.channels(),
            dt: sys.dt,
            mode,
            scaling,
        }
    }

    pub fn mode(&self) -> ControlMode {
        self.mode
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Hilbert space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Length `2d^2` of the unitary block of the state.
    pub fn unitary_len(&self) -> usize {
        2 * self.dim * self.dim
    }

    pub fn state_len(&self) -> usize {
        match self.mode {
            ControlMode::Direct => self.unitary_len(),
            ControlMode::Smoothed => self.unitary_len() + self.channels,
        }
    }

    pub fn generators(&self) -> &ControlGenerators {
        &self.generators
    }

    /// Identity unitary with zero envelopes.
    pub fn initial_state(&self) -> DVector<f64> {
        let x = vectorize_unitary(&CMatrix::identity(self.dim, self.dim));
        let mut z = DVector::zeros(self.state_len());
        z.rows_mut(0, x.as_real().len()).copy_from(x.as_real());
        z
    }

    pub fn split(&self, z: &DVector<f64>) -> Result<AugmentedState> {
        self.check_state(z)?;
        let n = self.unitary_len();
        let unitary = StateVectorization::from_real(self.dim, z.rows(0, n).into_owned())?;
        let envelope = match self.mode {
            ControlMode::Direct => None,
            ControlMode::Smoothed => Some(z.rows(n, self.channels).into_owned()),
        };
        Ok(AugmentedState { unitary, envelope })
    }

    pub fn unitary(&self, z: &DVector<f64>) -> CMatrix {
        devectorize_slice(self.dim, &z.as_slice()[..self.unitary_len()])
    }

    /// Envelope applied to the drive during the interval that starts at `z`.
    pub fn applied_envelope<'a>(&self, z: &'a DVector<f64>, v: &'a DVector<f64>) -> &'a [f64] {
        match self.mode {
            ControlMode::Direct => v.as_slice(),
            ControlMode::Smoothed => &z.as_slice()[self.unitary_len()..],
        }
    }

    fn check_state(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.state_len() {
            return Err(Error::dims("state", self.state_len(), z.len()));
        }
        Ok(())
    }

    fn check(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
        self.check_state(z)?;
        if v.len() != self.channels {
            return Err(Error::dims("control", self.channels, v.len()));
        }
        Ok(())
    }

    /// One step of the discrete dynamics.
    pub fn step(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(z, v)?;
        let envelope = self.applied_envelope(z, v);
        let g = self.generators.generator(envelope)?;
        let p = crate::propagator::pade_expm(&g, self.dt, self.scaling)?;
        Ok(self.advance(z, v, &p))
    }

    fn advance(&self, z: &DVector<f64>, v: &DVector<f64>, p: &IsoMatrix) -> DVector<f64> {
        let n = self.unitary_len();
        let x_next = apply_left(p.as_real(), self.dim, &z.as_slice()[..n]);
        match self.mode {
            ControlMode::Direct => x_next,
            ControlMode::Smoothed => {
                let mut out = DVector::zeros(self.state_len());
                out.rows_mut(0, n).copy_from(&x_next);
                for j in 0..self.channels {
                    out[n + j] = z[n + j] + v[j] * self.dt;
                }
                out
            }
        }
    }

    /// Jacobians of [`TransmonDynamics::step`] with respect to state and control.
    pub fn stage_jacobians(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<StageJacobians> {
        self.check(z, v)?;
        let n = self.unitary_len();
        let envelope = self.applied_envelope(z, v);
        let prop = step_propagator(&self.generators, envelope, self.dt, self.scaling)?;
        let x = &z.as_slice()[..n];
        let mut sensitivity = DMatrix::zeros(n, self.channels);
        for (j, dp) in prop.derivatives.iter().enumerate() {
            sensitivity
                .column_mut(j)
                .copy_from(&apply_left(dp.as_real(), self.dim, x));
        }
        let fu = match self.mode {
            ControlMode::Direct => sensitivity.clone(),
            ControlMode::Smoothed => {
                let mut fu = DMatrix::zeros(self.state_len(), self.channels);
                for j in 0..self.channels {
                    fu[(n + j, j)] = self.dt;
                }
                fu
            }
        };
        Ok(StageJacobians {
            mode: self.mode,
            dim: self.dim,
            propagator: prop.propagator.into_real(),
            sensitivity,
            fu,
        })
    }

    /// Open-loop rollout from `z1`; the step map holds exactly along the result.
    pub fn rollout(&self, z1: &DVector<f64>, controls: &[DVector<f64>]) -> Result<Rollout> {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(z1.clone());
        let mut drift = unitarity_defect(&self.unitary(z1));
        for v in controls {
            let next = self.step(states.last().expect("non-empty"), v)?;
            drift = drift.max(unitarity_defect(&self.unitary(&next)));
            states.push(next);
        }
        if drift > UNITARITY_WARNING {
            log::warn!("unitarity drift {drift:e} exceeds {UNITARITY_WARNING:e}");
        }
        Ok(Rollout {
            trajectory: Trajectory {
                states,
                controls: controls.to_vec(),
            },
            unitarity_drift: drift,
        })
    }

    /// Envelope sequence `u_1 .. u_{N-1}` applied during each interval.
    pub fn applied_envelopes(&self, traj: &Trajectory) -> Vec<Vec<f64>> {
        traj.controls
            .iter()
            .zip(&traj.states)
            .map(|(v, z)| self.applied_envelope(z, v).to_vec())
            .collect()
    }
}

impl Dynamics for TransmonDynamics {
    type Jacobians = StageJacobians;

    fn state_dim(&self) -> usize {
        self.state_len()
    }

    fn control_dim(&self) -> usize {
        self.channels
    }

    fn step(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        TransmonDynamics::step(self, z, v)
    }

    fn linearize(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<StageJacobians> {
        self.stage_jacobians(z, v)
    }
}

/// Result of [`TransmonDynamics::rollout`].
#[derive(Clone, Debug)]
pub struct Rollout {
    pub trajectory: Trajectory,
    /// Largest `|U^dagger U - I|` entry over all states.
    pub unitarity_drift: f64,
}

/// Stage Jacobians kept in factored form.
///
/// `f_x` is `P ⊗ I_d` in direct mode and `[[P ⊗ I_d, S], [0, I]]` in
/// smoothed mode, where `P` is the real propagator and column `j` of `S` is
/// `dP/du_j` applied to the current unitary.
#[derive(Clone, Debug)]
pub struct StageJacobians {
    mode: ControlMode,
    dim: usize,
    propagator: DMatrix<f64>,
    sensitivity: DMatrix<f64>,
    fu: DMatrix<f64>,
}

impl StageJacobians {
    fn unitary_len(&self) -> usize {
        2 * self.dim * self.dim
    }

    fn state_len(&self) -> usize {
        match self.mode {
            ControlMode::Direct => self.unitary_len(),
            ControlMode::Smoothed => self.unitary_len() + self.sensitivity.ncols(),
        }
    }

    /// Column `j` is `dP/du_j` applied to the unitary at this stage.
    pub fn sensitivity(&self) -> &DMatrix<f64> {
        &self.sensitivity
    }

    pub fn propagator(&self) -> &DMatrix<f64> {
        &self.propagator
    }

    // f_u is dt on the envelope rows in smoothed mode
    fn dt_control(&self) -> f64 {
        self.fu[(self.unitary_len(), 0)]
    }

    pub fn fx_dense(&self) -> DMatrix<f64> {
        let n = self.state_len();
        self.mul_fx(&DMatrix::identity(n, n))
    }

    pub fn fu_dense(&self) -> DMatrix<f64> {
        self.fu.clone()
    }
}

impl Linearization for StageJacobians {
    fn mul_fx(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let nx = self.unitary_len();
        match self.mode {
            ControlMode::Direct => mul_kron_right(m, &self.propagator, self.dim),
            ControlMode::Smoothed => {
                let nu = self.sensitivity.ncols();
                let rows = m.nrows();
                let mut out = DMatrix::zeros(rows, nx + nu);
                mul_kron_right_into(
                    &m.as_slice()[..rows * nx],
                    rows,
                    &self.propagator,
                    self.dim,
                    &mut out.as_mut_slice()[..rows * nx],
                );
                let mut tail = out.columns_mut(nx, nu);
                tail.copy_from(&m.columns(nx, nu));
                tail.gemm(1.0, &m.columns(0, nx), &self.sensitivity, 1.0);
                out
            }
        }
    }

    fn fx_transpose_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        let nx = self.unitary_len();
        let vx = &v.as_slice()[..nx];
        let head = apply_left(&self.propagator.transpose(), self.dim, vx);
        match self.mode {
            ControlMode::Direct => head,
            ControlMode::Smoothed => {
                let nu = self.sensitivity.ncols();
                let mut out = DVector::zeros(nx + nu);
                out.rows_mut(0, nx).copy_from(&head);
                let vx = v.rows(0, nx);
                for j in 0..nu {
                    out[nx + j] = v[nx + j] + self.sensitivity.column(j).dot(&vx);
                }
                out
            }
        }
    }

    fn fu(&self) -> &DMatrix<f64> {
        &self.fu
    }

    fn mul_fu(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self.mode {
            ControlMode::Direct => m * &self.fu,
            ControlMode::Smoothed => {
                let nu = self.sensitivity.ncols();
                m.columns(self.unitary_len(), nu) * self.dt_control()
            }
        }
    }

    fn fu_transpose_mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self.mode {
            ControlMode::Direct => self.fu.tr_mul(m),
            ControlMode::Smoothed => {
                let nu = self.sensitivity.ncols();
                m.rows(self.unitary_len(), nu) * self.dt_control()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::vectorize_unitary;
    use crate::transmon::SystemKind;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn dyn_for(kind: SystemKind, mode: ControlMode) -> TransmonDynamics {
        TransmonDynamics::new(&TransmonSystem::standard(kind), mode, PadeScaling::Auto)
    }

    #[test]
    fn smoothed_zero_step_is_identity_on_qubit() {
        let d = dyn_for(SystemKind::OneQubitTwoLevel, ControlMode::Smoothed);
        let z = d.initial_state();
        let next = d.step(&z, &DVector::zeros(2)).unwrap();
        assert_eq!(next, z);
    }

    #[test]
    fn smoothed_envelope_euler_update() {
        let d = dyn_for(SystemKind::OneQubitTwoLevel, ControlMode::Smoothed);
        let mut z = d.initial_state();
        z[8] = 0.01;
        let next = d.step(&z, &DVector::from_vec(vec![0.02, 0.0])).unwrap();
        assert!((next[8] - 0.02).abs() < 1e-17);
        assert_eq!(next[9], 0.0);
    }

    #[test]
    fn constant_bang_bang_gives_x_gate() {
        let d = dyn_for(SystemKind::OneQubitTwoLevel, ControlMode::Direct);
        let mut z = d.initial_state();
        let v = DVector::from_vec(vec![-0.135722, 0.0]);
        for _ in 0..80 {
            z = d.step(&z, &v).unwrap();
        }
        let i = Complex64::new(0.0, 1.0);
        let o = Complex64::new(0.0, 0.0);
        let target = vectorize_unitary(&CMatrix::from_row_slice(2, 2, &[o, i, i, o]));
        assert!((z - target.as_real()).amax() <= 1e-6);
    }

    #[test]
    fn direct_fx_is_propagator() {
        let d = dyn_for(SystemKind::OneQubitThreeLevel, ControlMode::Direct);
        let z = d.initial_state();
        let v = DVector::from_vec(vec![0.05, -0.03]);
        let jac = d.stage_jacobians(&z, &v).unwrap();
        let p = crate::propagator::pade_expm(&d.generators.generator(v.as_slice()).unwrap(), 0.5, PadeScaling::Auto).unwrap();
        let n = d.unitary_len();
        let fx = jac.fx_dense();
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let expected = apply_left(p.as_real(), 3, &e);
            assert!((fx.column(col) - expected).amax() < 1e-15);
        }
    }

    #[test]
    fn smoothed_fu_has_zero_unitary_block() {
        let d = dyn_for(SystemKind::OneQubitThreeLevel, ControlMode::Smoothed);
        let jac = d.stage_jacobians(&d.initial_state(), &DVector::from_vec(vec![0.1, 0.2])).unwrap();
        let fu = jac.fu_dense();
        assert!(fu.rows(0, d.unitary_len()).iter().all(|v| *v == 0.0));
        assert_eq!(fu[(18, 0)], 0.5);
        assert_eq!(fu[(19, 1)], 0.5);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        for mode in [ControlMode::Direct, ControlMode::Smoothed] {
            let d = dyn_for(SystemKind::OneQubitThreeLevel, mode);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
            let mut z = d.initial_state();
            for _ in 0..5 {
                let v = DVector::from_fn(2, |_, _| rng.gen_range(-0.2..0.2));
                z = d.step(&z, &v).unwrap();
            }
            if mode == ControlMode::Smoothed {
                z[18] = 0.07;
                z[19] = -0.04;
            }
            let v = DVector::from_fn(2, |_, _| rng.gen_range(-0.2..0.2));
            let jac = d.stage_jacobians(&z, &v).unwrap();
            let h = 1e-6;
            let fx = jac.fx_dense();
            for i in 0..z.len() {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                let fd = (d.step(&zp, &v).unwrap() - d.step(&zm, &v).unwrap()) / (2.0 * h);
                for r in 0..z.len() {
                    let err = (fd[r] - fx[(r, i)]).abs();
                    assert!(err <= 1e-9 || err <= 1e-5 * fx[(r, i)].abs(), "{mode:?} f_x[{r},{i}]");
                }
            }
            let fu = jac.fu_dense();
            for j in 0..2 {
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[j] += h;
                vm[j] -= h;
                let fd = (d.step(&z, &vp).unwrap() - d.step(&z, &vm).unwrap()) / (2.0 * h);
                for r in 0..z.len() {
                    let err = (fd[r] - fu[(r, j)]).abs();
                    assert!(err <= 1e-9 || err <= 1e-5 * fu[(r, j)].abs(), "{mode:?} f_u[{r},{j}] fd {} an {}", fd[r], fu[(r, j)]);
                }
            }
        }
    }

    #[test]
    fn structured_products_match_dense() {
        let d = dyn_for(SystemKind::TwoQubitTwoLevel, ControlMode::Smoothed);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let z = d.initial_state();
        let v = DVector::from_fn(4, |_, _| rng.gen_range(-0.2..0.2));
        let jac = d.stage_jacobians(&z, &v).unwrap();
        let n = d.state_len();
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let fx = jac.fx_dense();
        assert!((jac.mul_fx(&m) - &m * &fx).amax() < 1e-13);
        let w = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        assert!((jac.fx_transpose_mul(&w) - fx.transpose() * &w).amax() < 1e-13);
    }

    #[test]
    fn zero_controls_keep_qubit_state() {
        let d = dyn_for(SystemKind::OneQubitTwoLevel, ControlMode::Direct);
        let controls = vec![DVector::zeros(2); 10];
        let r = d.rollout(&d.initial_state(), &controls).unwrap();
        assert!(r.trajectory.states.iter().all(|z| z == &d.initial_state()));
        assert_eq!(r.unitarity_drift, 0.0);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let d = dyn_for(SystemKind::OneQubitTwoLevel, ControlMode::Direct);
        let z = d.initial_state();
        assert!(matches!(d.step(&z, &DVector::zeros(3)), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(d.step(&DVector::zeros(5), &DVector::zeros(2)), Err(Error::DimensionMismatch { .. })));
    }
}
