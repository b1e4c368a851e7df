//! Pulse synthesis for transmon gates with the iterative linear quadratic
//! regulator.
//!
//! Unitaries evolve in the real isomorphic representation ([`iso`]), one
//! Padé step at a time ([`propagator`]), under the transmon Hamiltonians of
//! [`transmon`]. [`dynamics`] turns this into a discrete-time system with
//! optional smoothed controls, [`ocp`] adds the gate objective, and
//! [`ilqr`] optimizes it. [`harness`] provides configuration files, grid
//! searches and artifact output.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod ilqr;
pub mod iso;
pub mod ocp;
pub mod propagator;
pub mod transmon;

pub use dynamics::{ControlMode, TransmonDynamics};
pub use error::{Error, Result};
pub use ilqr::{solve, SolveReport, SolverSettings, Termination};
pub use ocp::{CostMatrices, GateProblem};
pub use propagator::PadeScaling;
pub use transmon::{DeviceParameters, GateName, SystemKind, TransmonSystem};
