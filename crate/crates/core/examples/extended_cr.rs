//! Cross-resonance gate on two three-level transmons, with the population
//! that leaves the computational subspace along the |00> trajectory.
//!
//! `cargo run --release --example extended_cr -- [max-iterations] [out-dir]`

use std::path::PathBuf;

use ilqr_pulse::harness::{self, Experiment};

fn main() -> ilqr_pulse::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = Experiment::ExtendedCr.config()?;
    if let Some(n) = args.next().and_then(|a| a.parse().ok()) {
        config.solver.max_iterations = n;
    }
    let out_dir = args.next().map(PathBuf::from);
    let out = harness::cmd_optimize(&config, out_dir.as_deref())?;
    let s = &out.summary;
    println!("termination      {:?} after {} iterations", out.report.termination, out.report.log.len());
    println!("trace infidelity {:.3e}", s.trace_infidelity);
    println!("mean leakage     {:.3e}", s.mean_leakage["00"]);
    println!("unitarity drift  {:.1e}", s.unitarity_drift);
    Ok(())
}
