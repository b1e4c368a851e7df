//! Two-level X gate optimized through envelope rates, so the envelope starts
//! at zero and is pulled back to zero at the end.
//!
//! `cargo run --example smoothed_x -- <out-dir>` also writes the artifacts.

use std::f64::consts::PI;
use std::path::PathBuf;

use ilqr_pulse::harness::{self, Experiment};

fn main() -> ilqr_pulse::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let config = Experiment::SmoothedX.config()?;
    let out = harness::cmd_optimize(&config, out_dir.as_deref())?;
    let s = &out.summary;
    let problem = config.problem()?;
    let envelopes = problem.dynamics().applied_envelopes(&out.report.trajectory);

    println!("termination      {:?} after {} iterations", out.report.termination, out.report.log.len());
    println!("first envelope   {:?}", envelopes[0]);
    println!("final envelope   {:?}", s.final_envelope.as_deref().unwrap_or_default());
    println!("pulse area       {:.7} ns (-pi/r1 = {:.7})", s.pulse_area["ux"], -PI / config.transmon_system().rabi[0]);
    println!("trace infidelity {:.3e}", s.trace_infidelity);
    if let Some(paths) = out.paths {
        println!("controls written to {}", paths.controls.display());
    }
    Ok(())
}
