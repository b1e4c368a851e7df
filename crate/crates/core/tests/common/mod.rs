#![allow(dead_code)]

use ilqr_pulse::ilqr::{DenseJacobians, Dynamics, Objective};
use ilqr_pulse::iso::CMatrix;
use ilqr_pulse::ocp::CostDerivatives;
use ilqr_pulse::transmon::{control_hamiltonians, drift_hamiltonian};
use ilqr_pulse::{Result, TransmonSystem};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// `H(u) = H_0 + sum_j u_j H_j` as a complex matrix.
pub fn hamiltonian(sys: &TransmonSystem, u: &[f64]) -> CMatrix {
    let mut h = drift_hamiltonian(sys);
    for (uj, hj) in u.iter().zip(control_hamiltonians(sys)) {
        h += hj * Complex64::new(*uj, 0.0);
    }
    h
}

/// `exp(-i H dt)` through the eigendecomposition of the Hermitian `H`.
pub fn exact_propagator(h: &CMatrix, dt: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| Complex64::new(0.0, -l * dt).exp()),
    );
    &eig.eigenvectors * CMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Plain triple-loop complex product.
pub fn naive_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut c = CMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..a.ncols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            c[(i, j)] = acc;
        }
    }
    c
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entry-wise acceptance used for Jacobian checks: relative error within
/// `rel`, or absolute error within `abs` for entries near zero.
pub fn close(fd: f64, analytic: f64, rel: f64, abs: f64) -> bool {
    let err = (fd - analytic).abs();
    err <= abs || err <= rel * analytic.abs()
}

/// `z+ = A z + B v`, `l = z'Qz + v'Rv`, `l_f = z'Q_f z`.
pub struct Linear {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    qf: DMatrix<f64>,
}

impl Linear {
    pub fn new() -> Self {
        Self {
            a: DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, -0.2, 0.9, 0.3, 0.05, 0.0, 1.1]),
            b: DMatrix::from_row_slice(3, 2, &[0.0, 0.4, 1.0, 0.0, 0.2, -0.5]),
            q: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 2.0])),
            r: DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.7])),
            qf: DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 5.0, 20.0])),
        }
    }

    /// Minimizer over the stacked controls by a dense solve.
    pub fn batch_optimum(&self, z0: &DVector<f64>, horizon: usize) -> Vec<DVector<f64>> {
        let (n, m) = (3, 2);
        // z_k = Phi_k z0 + Gamma_k v
        let mut phi = vec![DMatrix::identity(n, n)];
        let mut gamma = vec![DMatrix::zeros(n, m * horizon)];
        for k in 0..horizon {
            phi.push(&self.a * &phi[k]);
            let mut g = &self.a * &gamma[k];
            g.view_mut((0, m * k), (n, m)).copy_from(&self.b);
            gamma.push(g);
        }
        let mut h = DMatrix::zeros(m * horizon, m * horizon);
        let mut c = DVector::zeros(m * horizon);
        for k in 0..=horizon {
            let w = if k == horizon { &self.qf } else { &self.q };
            h += gamma[k].transpose() * w * &gamma[k];
            c += gamma[k].transpose() * w * &phi[k] * z0;
        }
        for k in 0..horizon {
            h.view_mut((m * k, m * k), (m, m)).add_assign(&self.r);
        }
        let v = h.cholesky().unwrap().solve(&(-c));
        (0..horizon).map(|k| v.rows(m * k, m).into_owned()).collect()
    }
}

trait AddAssign {
    fn add_assign(&mut self, rhs: &DMatrix<f64>);
}

impl AddAssign for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(&mut self, rhs: &DMatrix<f64>) {
        for (a, b) in self.iter_mut().zip(rhs.iter()) {
            *a += b;
        }
    }
}

impl Dynamics for Linear {
    type Jacobians = DenseJacobians;

    fn state_dim(&self) -> usize {
        3
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn step(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.a * z + &self.b * v)
    }

    fn linearize(&self, _: &DVector<f64>, _: &DVector<f64>) -> Result<DenseJacobians> {
        Ok(DenseJacobians {
            fx: self.a.clone(),
            fu: self.b.clone(),
        })
    }
}

impl Objective for Linear {
    fn stage(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<CostDerivatives> {
        Ok(CostDerivatives {
            l: self.stage_value(z, v),
            l_x: 2.0 * &self.q * z,
            l_u: 2.0 * &self.r * v,
            l_xx: 2.0 * &self.q,
            l_uu: 2.0 * &self.r,
            l_ux: DMatrix::zeros(2, 3),
        })
    }

    fn terminal(&self, z: &DVector<f64>) -> Result<CostDerivatives> {
        Ok(CostDerivatives {
            l: self.terminal_value(z),
            l_x: 2.0 * &self.qf * z,
            l_u: DVector::zeros(0),
            l_xx: 2.0 * &self.qf,
            l_uu: DMatrix::zeros(0, 0),
            l_ux: DMatrix::zeros(0, 3),
        })
    }

    fn stage_value(&self, z: &DVector<f64>, v: &DVector<f64>) -> f64 {
        z.dot(&(&self.q * z)) + v.dot(&(&self.r * v))
    }

    fn terminal_value(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.qf * z))
    }
}
