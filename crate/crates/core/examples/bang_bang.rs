//! Two-level X gate with direct envelope control.
//!
//! The optimum is a constant in-phase envelope whose area is `-pi/r1`.

use std::f64::consts::PI;

use ilqr_pulse::harness::{self, Experiment};

fn main() -> ilqr_pulse::Result<()> {
    let config = Experiment::BangBang.config()?;
    let out = harness::cmd_optimize(&config, None)?;
    let controls = &out.report.trajectory.controls;
    let ux: Vec<f64> = controls.iter().map(|v| v[0]).collect();
    let (lo, hi) = ux.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let rabi = config.transmon_system().rabi[0];

    println!("termination      {:?} after {} iterations", out.report.termination, out.report.log.len());
    println!("u_x range        [{lo:.9}, {hi:.9}]");
    println!("pulse area       {:.9} ns", out.summary.pulse_area["ux"]);
    println!("-pi/r1           {:.9} ns", -PI / rabi);
    println!("trace infidelity {:.3e}", out.summary.trace_infidelity);
    Ok(())
}
