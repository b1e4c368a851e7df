//! X gate on a three-level transmon, then the DRAG relation between the
//! quadrature envelope and the in-phase derivative.

use ilqr_pulse::harness::{self, drag_analysis, Experiment};

fn main() -> ilqr_pulse::Result<()> {
    let config = Experiment::QutritX.config()?;
    let problem = config.problem()?;
    let out = harness::cmd_optimize(&config, None)?;
    let envelopes = problem.dynamics().applied_envelopes(&out.report.trajectory);
    let ux: Vec<f64> = envelopes.iter().map(|u| u[0]).collect();
    let uy: Vec<f64> = envelopes.iter().map(|u| u[1]).collect();
    let drag = drag_analysis(&ux, &uy, config.dt, problem.system.delta[0]);

    println!("termination      {:?} after {} iterations", out.report.termination, out.report.log.len());
    println!("trace infidelity {:.3e}", out.summary.trace_infidelity);
    println!("mean |2> from |0> {:.3e}", out.summary.mean_leakage["0"]);
    match drag.correlation {
        Some(rho) => println!(
            "u_y vs du_x/dt   rho {rho:.3}, factor {:.3} ns (-1/delta = {:.3} ns)",
            drag.factor.unwrap_or(f64::NAN),
            drag.minus_inverse_anharmonicity
        ),
        None => println!("{}", drag.note.unwrap_or_default()),
    }
    Ok(())
}
