//! Step propagators `exp(G dt)` from the degree-4 diagonal Padé approximant,
//! together with their exact control sensitivities.
//!
//! The approximant is `B(G, dt)^-1 F(G, dt)` with
//!
//! ```text
//! F = I + (dt/2) G + (3 dt^2/28) G^2 + (dt^3/84) G^3 + (dt^4/1680) G^4
//! B = F evaluated at -G
//! ```
//!
//! Sensitivities are derivatives of this rational function itself, not of
//! the exact exponential, so the Jacobians seen by the optimizer are exact for
//! the discretized dynamics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::iso::IsoMatrix;

/// Numerator coefficients of the degree-4 diagonal approximant. The
/// denominator uses the same values with alternating signs.
pub const PADE_COEFFICIENTS: [f64; 5] = [1.0, 1.0 / 2.0, 3.0 / 28.0, 1.0 / 84.0, 1.0 / 1680.0];

/// 1-norm of `G dt` above which automatic scaling starts halving the step.
pub const SCALING_THRESHOLD: f64 = 0.5;

const MAX_SQUARINGS: u32 = 40;

/// How the approximant treats large `|G dt|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PadeScaling {
    /// Plain approximant at the full step; on a singular denominator the
    /// step falls back to [`PadeScaling::Auto`].
    Off,
    /// Scale `G dt` by `2^-s` until its 1-norm is below
    /// [`SCALING_THRESHOLD`], then square `s` times.
    #[default]
    Auto,
    /// Fixed number of squarings.
    Squarings(u32),
}

impl PadeScaling {
    fn squarings(self, norm: f64) -> u32 {
        match self {
            PadeScaling::Off => 0,
            PadeScaling::Squarings(s) => s,
            PadeScaling::Auto => {
                let mut s = 0;
                let mut scaled = norm;
                while scaled > SCALING_THRESHOLD && s < MAX_SQUARINGS {
                    scaled *= 0.5;
                    s += 1;
                }
                s
            }
        }
    }
}

/// Affine generator `G(u) = G_0 + sum_j u_j G_j` with every term stored as
/// the embedding of `-i H`.
#[derive(Clone, Debug)]
pub struct ControlGenerators {
    pub drift: IsoMatrix,
    pub controls: Vec<IsoMatrix>,
}

impl ControlGenerators {
    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn channels(&self) -> usize {
        self.controls.len()
    }

    pub fn generator(&self, u: &[f64]) -> Result<IsoMatrix> {
        if u.len() != self.controls.len() {
            return Err(Error::dims("ControlGenerators::generator", self.controls.len(), u.len()));
        }
        let mut g = self.drift.as_real().clone();
        for (uj, gj) in u.iter().zip(&self.controls) {
            if *uj != 0.0 {
                add_scaled(&mut g, *uj, gj.as_real());
            }
        }
        Ok(IsoMatrix::from_real_unchecked(g))
    }
}

/// Step propagator and its derivative with respect to each control channel.
#[derive(Clone, Debug)]
pub struct PropagatorWithDerivatives {
    pub propagator: IsoMatrix,
    pub derivatives: Vec<IsoMatrix>,
}

/// `acc += scale * m`.
fn add_scaled(acc: &mut DMatrix<f64>, scale: f64, m: &DMatrix<f64>) {
    acc.zip_apply(m, |a, b| *a += scale * b);
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn series(powers: &[DMatrix<f64>], alternate: bool) -> DMatrix<f64> {
    let n = powers[0].nrows();
    let mut acc = DMatrix::identity(n, n);
    for (k, p) in powers.iter().enumerate() {
        let c = PADE_COEFFICIENTS[k + 1];
        let sign = if alternate && k % 2 == 0 { -1.0 } else { 1.0 };
        add_scaled(&mut acc, sign * c, p);
    }
    acc
}

fn powers_of(a: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let a2 = a * a;
    let a3 = &a2 * a;
    let a4 = &a2 * &a2;
    vec![a.clone(), a2, a3, a4]
}

/// Rational approximant at an already-scaled argument. Returns the
/// denominator factorization with the result so sensitivities can reuse it.
fn approximant(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, Vec<DMatrix<f64>>)> {
    let powers = powers_of(a);
    let numerator = series(&powers, false);
    let denominator = series(&powers, true);
    let lu = denominator.lu();
    let r = lu.solve(&numerator).ok_or(Error::SingularDenominator)?;
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularDenominator);
    }
    Ok((r, lu, powers))
}

/// `B(G, dt)^-1 F(G, dt)`, optionally with scaling and squaring.
pub fn pade_expm(g: &IsoMatrix, dt: f64, scaling: PadeScaling) -> Result<IsoMatrix> {
    let a = g.as_real() * dt;
    let s = scaling.squarings(one_norm(&a));
    let (mut r, _, _) = approximant(&(a * 0.5_f64.powi(s as i32)))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(IsoMatrix::from_real_unchecked(r))
}

/// Propagator `exp(G(u) dt)` and exact derivatives `dP/du_j` of the
/// implemented approximant.
pub fn step_propagator(
    generators: &ControlGenerators,
    u: &[f64],
    dt: f64,
    scaling: PadeScaling,
) -> Result<PropagatorWithDerivatives> {
    match propagate_with_sensitivities(generators, u, dt, scaling) {
        Err(Error::SingularDenominator) if scaling == PadeScaling::Off => {
            log::warn!("singular Padé denominator at dt = {dt}; retrying with scaling and squaring");
            propagate_with_sensitivities(generators, u, dt, PadeScaling::Auto)
        }
        other => other,
    }
}

fn propagate_with_sensitivities(
    generators: &ControlGenerators,
    u: &[f64],
    dt: f64,
    scaling: PadeScaling,
) -> Result<PropagatorWithDerivatives> {
    let g = generators.generator(u)?;
    let a = g.as_real() * dt;
    let s = scaling.squarings(one_norm(&a));
    let scale = dt * 0.5_f64.powi(s as i32);
    let a = a * 0.5_f64.powi(s as i32);
    let (mut r, lu, powers) = approximant(&a)?;

    let mut derivatives = Vec::with_capacity(generators.channels());
    for gj in &generators.controls {
        let e = gj.as_real() * scale;
        // d(A^k)[E] via d(A^{k+1}) = d(A^k) A + A^k E
        let mut dpowers = Vec::with_capacity(4);
        dpowers.push(e.clone());
        for k in 1..4 {
            let next = &dpowers[k - 1] * &a + &powers[k - 1] * &e;
            dpowers.push(next);
        }
        let mut df = DMatrix::zeros(a.nrows(), a.ncols());
        let mut db = DMatrix::zeros(a.nrows(), a.ncols());
        for (k, dp) in dpowers.iter().enumerate() {
            let c = PADE_COEFFICIENTS[k + 1];
            add_scaled(&mut df, c, dp);
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            add_scaled(&mut db, sign * c, dp);
        }
        let rhs = df - db * &r;
        let dr = lu.solve(&rhs).ok_or(Error::SingularDenominator)?;
        derivatives.push(dr);
    }

    for _ in 0..s {
        for dr in derivatives.iter_mut() {
            *dr = &*dr * &r + &r * &*dr;
        }
        r = &r * &r;
    }

    Ok(PropagatorWithDerivatives {
        propagator: IsoMatrix::from_real_unchecked(r),
        derivatives: derivatives
            .into_iter()
            .map(IsoMatrix::from_real_unchecked)
            .collect(),
    })
}
