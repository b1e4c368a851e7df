//! Cross-resonance gate on two two-level transmons.
//!
//! `cargo run --release --example cross_resonance -- [max-iterations]`;
//! the preset runs 6000 iterations, which takes minutes.

use ilqr_pulse::harness::{self, Experiment};

fn main() -> ilqr_pulse::Result<()> {
    let mut config = Experiment::CrossResonance.config()?;
    if let Some(n) = std::env::args().nth(1).and_then(|a| a.parse().ok()) {
        config.solver.max_iterations = n;
    }
    let out = harness::cmd_optimize(&config, None)?;
    let s = &out.summary;
    for r in out.report.log.iter().step_by(100.max(out.report.log.len() / 20)) {
        println!("iter {:>5}  J {:.6e}  |Q_u| {:.3e}", r.iter, r.cost, r.grad_norm);
    }
    println!("termination      {:?} after {} iterations", out.report.termination, out.report.log.len());
    println!("trace infidelity {:.3e}", s.trace_infidelity);
    println!("frobenius cost   {:.3e}", s.frobenius_cost);
    for (ch, area) in &s.pulse_area {
        println!("area {ch:<4}        {area:.4} ns");
    }
    Ok(())
}
