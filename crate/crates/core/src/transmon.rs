//! Rotating-frame Hamiltonians for one or two fixed-frequency transmons
//! truncated to two or three levels, and the target gates.
//!
//! Frequencies are stored in angular units (rad/ns), time in ns, controls
//! are dimensionless envelope amplitudes. For two transmons, transmon 1 is
//! the left Kronecker factor, so the basis index of `|n1 n2>` is
//! `levels * n1 + n2`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iso::{embed_matrix, vectorize_unitary, CMatrix, StateVectorization};
use crate::propagator::ControlGenerators;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Device parameters in GHz (cyclic) and ns, as listed for the
/// `ibm_brisbane` qubits 0 and 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct DeviceParameters {
    pub qubit1_frequency_ghz: f64,
    pub qubit2_frequency_ghz: f64,
    pub qubit1_anharmonicity_ghz: f64,
    pub qubit2_anharmonicity_ghz: f64,
    pub coupling_ghz: f64,
    pub qubit1_rabi_ghz: f64,
    pub qubit2_rabi_ghz: f64,
    /// Use `r2` instead of `r1` on the drive lines acting on transmon 2.
    pub use_r2_on_second_drive: bool,
}

impl Default for DeviceParameters {
    fn default() -> Self {
        Self {
            qubit1_frequency_ghz: 4.7219,
            qubit2_frequency_ghz: 4.8151,
            qubit1_anharmonicity_ghz: -0.3120,
            qubit2_anharmonicity_ghz: -0.3097,
            coupling_ghz: 0.0020,
            qubit1_rabi_ghz: 0.0921,
            qubit2_rabi_ghz: 0.0974,
            use_r2_on_second_drive: false,
        }
    }
}

/// Default piecewise-constant interval in ns.
pub const DEFAULT_DT: f64 = 0.5;

/// One of the four simulated models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    #[serde(rename = "1q2l")]
    OneQubitTwoLevel,
    #[serde(rename = "1q3l")]
    OneQubitThreeLevel,
    #[serde(rename = "2q2l")]
    TwoQubitTwoLevel,
    #[serde(rename = "2q3l")]
    TwoQubitThreeLevel,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [
        SystemKind::OneQubitTwoLevel,
        SystemKind::OneQubitThreeLevel,
        SystemKind::TwoQubitTwoLevel,
        SystemKind::TwoQubitThreeLevel,
    ];

    pub fn levels(self) -> usize {
        match self {
            SystemKind::OneQubitTwoLevel | SystemKind::TwoQubitTwoLevel => 2,
            SystemKind::OneQubitThreeLevel | SystemKind::TwoQubitThreeLevel => 3,
        }
    }

    pub fn transmons(self) -> usize {
        match self {
            SystemKind::OneQubitTwoLevel | SystemKind::OneQubitThreeLevel => 1,
            SystemKind::TwoQubitTwoLevel | SystemKind::TwoQubitThreeLevel => 2,
        }
    }

    /// Goal gate paired with this model in the experiments.
    pub fn default_goal(self) -> GateName {
        match self {
            SystemKind::OneQubitTwoLevel => GateName::X2,
            SystemKind::OneQubitThreeLevel => GateName::X3,
            SystemKind::TwoQubitTwoLevel => GateName::Cr4,
            SystemKind::TwoQubitThreeLevel => GateName::Cr9,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SystemKind::OneQubitTwoLevel => "1q2l",
            SystemKind::OneQubitThreeLevel => "1q3l",
            SystemKind::TwoQubitTwoLevel => "2q2l",
            SystemKind::TwoQubitThreeLevel => "2q3l",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::config("system", format!("unknown system `{s}` (expected 1q2l, 1q3l, 2q2l or 2q3l)")))
    }
}

/// A transmon model with parameters converted to angular units.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmonSystem {
    pub kind: SystemKind,
    pub levels: usize,
    pub transmons: usize,
    /// Dressed angular frequencies (rad/ns).
    pub omega: [f64; 2],
    /// Anharmonicities (rad/ns).
    pub delta: [f64; 2],
    /// Effective coupling J12 (rad/ns).
    pub coupling: f64,
    /// Rabi strengths (rad/ns).
    pub rabi: [f64; 2],
    pub dt: f64,
    pub use_r2_on_second_drive: bool,
}

impl TransmonSystem {
    pub fn new(kind: SystemKind, params: &DeviceParameters, dt: f64) -> Self {
        Self {
            kind,
            levels: kind.levels(),
            transmons: kind.transmons(),
            omega: [TAU * params.qubit1_frequency_ghz, TAU * params.qubit2_frequency_ghz],
            delta: [TAU * params.qubit1_anharmonicity_ghz, TAU * params.qubit2_anharmonicity_ghz],
            coupling: TAU * params.coupling_ghz,
            rabi: [TAU * params.qubit1_rabi_ghz, TAU * params.qubit2_rabi_ghz],
            dt,
            use_r2_on_second_drive: params.use_r2_on_second_drive,
        }
    }

    /// Model with the default device parameters and `dt = 0.5 ns`.
    pub fn standard(kind: SystemKind) -> Self {
        Self::new(kind, &DeviceParameters::default(), DEFAULT_DT)
    }

    /// Total Hilbert space dimension.
    pub fn dim(&self) -> usize {
        self.levels.pow(self.transmons as u32)
    }

    /// Number of control channels, ordered `(uX1, uY1[, uX2, uY2])`.
    pub fn channels(&self) -> usize {
        2 * self.transmons
    }

    pub fn channel_names(&self) -> Vec<String> {
        if self.transmons == 1 {
            vec!["ux".into(), "uy".into()]
        } else {
            vec!["ux1".into(), "uy1".into(), "ux2".into(), "uy2".into()]
        }
    }

    /// Detuning `omega2 - omega1` of the second transmon from the drive.
    pub fn detuning(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }

    /// Ket label of a basis index, e.g. `"01"` for `|0 1>`.
    pub fn basis_label(&self, index: usize) -> String {
        if self.transmons == 1 {
            index.to_string()
        } else {
            format!("{}{}", index / self.levels, index % self.levels)
        }
    }

    /// Basis indices that contain at least one excitation above level 1.
    pub fn leakage_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&j| {
                let mut rest = j;
                (0..self.transmons).any(|_| {
                    let level = rest % self.levels;
                    rest /= self.levels;
                    level >= 2
                })
            })
            .collect()
    }

    /// Annihilation operators `b_j` embedded in the full space.
    pub fn annihilators(&self) -> Vec<CMatrix> {
        let b = LadderOperators::new(self.levels).annihilation;
        if self.transmons == 1 {
            return vec![b];
        }
        let id = CMatrix::identity(self.levels, self.levels);
        vec![b.kronecker(&id), id.kronecker(&b)]
    }

    /// Affine generator `-i H(u)` in the real representation.
    pub fn generators(&self) -> ControlGenerators {
        let minus_i = |h: &CMatrix| embed_matrix(&h.map(|z| -I * z));
        ControlGenerators {
            drift: minus_i(&drift_hamiltonian(self)),
            controls: control_hamiltonians(self).iter().map(minus_i).collect(),
        }
    }
}

/// Truncated harmonic-oscillator ladder operators.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderOperators {
    pub annihilation: CMatrix,
    pub creation: CMatrix,
}

impl LadderOperators {
    pub fn new(levels: usize) -> Self {
        let mut b = CMatrix::zeros(levels, levels);
        for n in 1..levels {
            b[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        let creation = b.adjoint();
        Self {
            annihilation: b,
            creation,
        }
    }
}

/// Copies the upper triangle onto the lower one and drops imaginary parts on
/// the diagonal, making the result exactly Hermitian.
fn mirror_upper(mut m: CMatrix) -> CMatrix {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    m
}

fn number(b: &CMatrix) -> CMatrix {
    b.adjoint() * b
}

fn duffing_anharmonic(b: &CMatrix, delta: f64) -> CMatrix {
    let n = number(b);
    let id = CMatrix::identity(n.nrows(), n.ncols());
    (&n * (&n - id)) * Complex64::new(delta / 2.0, 0.0)
}

/// Control-independent part of the rotating-frame Hamiltonian.
pub fn drift_hamiltonian(sys: &TransmonSystem) -> CMatrix {
    let b = sys.annihilators();
    let h = if sys.transmons == 1 {
        duffing_anharmonic(&b[0], sys.delta[0])
    } else {
        let hop = b[0].adjoint() * &b[1] + &b[0] * b[1].adjoint();
        number(&b[1]) * Complex64::new(sys.detuning(), 0.0)
            + duffing_anharmonic(&b[0], sys.delta[0])
            + duffing_anharmonic(&b[1], sys.delta[1])
            + hop * Complex64::new(sys.coupling, 0.0)
    };
    mirror_upper(h)
}

/// `dH/du_j` for every channel: `(r/2)(b + b^dagger)` on X channels and
/// `(r/2) i (b^dagger - b)` on Y channels.
pub fn control_hamiltonians(sys: &TransmonSystem) -> Vec<CMatrix> {
    let b = sys.annihilators();
    let mut out = Vec::with_capacity(sys.channels());
    for (j, bj) in b.iter().enumerate() {
        let r = if j == 1 && sys.use_r2_on_second_drive {
            sys.rabi[1]
        } else {
            sys.rabi[0]
        };
        let half = Complex64::new(r / 2.0, 0.0);
        let bd = bj.adjoint();
        out.push(mirror_upper((&bd + bj) * half));
        out.push(mirror_upper((&bd - bj) * (I * half)));
    }
    out
}

/// Names of the supported target gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateName {
    /// `i sigma_x` on a qubit.
    X2,
    /// X on the qubit subspace of a qutrit, identity on `|2>`.
    X3,
    /// Cross-resonance gate `exp(-i pi/4 X ⊗ Z)`.
    Cr4,
    /// Cross-resonance gate extended to two qutrits.
    Cr9,
}

impl GateName {
    pub fn dim(self) -> usize {
        match self {
            GateName::X2 => 2,
            GateName::X3 => 3,
            GateName::Cr4 => 4,
            GateName::Cr9 => 9,
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateName::X2 => "X2",
            GateName::X3 => "X3",
            GateName::Cr4 => "CR4",
            GateName::Cr9 => "CR9",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoalGate {
    pub name: GateName,
    pub unitary: CMatrix,
    pub vectorized: StateVectorization,
}

fn gate_matrix(name: GateName) -> CMatrix {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let ih = Complex64::new(0.0, FRAC_1_SQRT_2);
    match name {
        GateName::X2 => CMatrix::from_row_slice(2, 2, &[ZERO, I, I, ZERO]),
        GateName::X3 => CMatrix::from_row_slice(3, 3, &[ZERO, I, ZERO, I, ZERO, ZERO, ZERO, ZERO, ONE]),
        GateName::Cr4 => {
            // (I - i X⊗Z)/sqrt(2); X⊗Z maps |0 n2> <-> |1 n2> with sign (-1)^n2
            let mut u = CMatrix::identity(4, 4) * h;
            u[(0, 2)] = -ih;
            u[(2, 0)] = -ih;
            u[(1, 3)] = ih;
            u[(3, 1)] = ih;
            u
        }
        GateName::Cr9 => {
            let mut u = CMatrix::identity(9, 9);
            for j in [0, 1, 3, 4] {
                u[(j, j)] = h;
            }
            u[(3, 0)] = -ih;
            u[(0, 3)] = -ih;
            u[(4, 1)] = ih;
            u[(1, 4)] = ih;
            u
        }
    }
}

pub fn goal_gate(name: GateName, sys: &TransmonSystem) -> Result<GoalGate> {
    if name.dim() != sys.dim() {
        return Err(Error::dims("goal_gate", sys.dim(), name.dim()));
    }
    let unitary = gate_matrix(name);
    let vectorized = vectorize_unitary(&unitary);
    Ok(GoalGate {
        name,
        unitary,
        vectorized,
    })
}

/// Largest entry of `|U^dagger U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
