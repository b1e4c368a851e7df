//! Builds a gate problem in code, with shifted device parameters and a
//! custom solver setup, and prints the iteration log.

use ilqr_pulse::ilqr::random_controls;
use ilqr_pulse::{
    solve, ControlMode, CostMatrices, DeviceParameters, GateName, GateProblem, SolverSettings, SystemKind,
    TransmonSystem,
};

fn main() -> ilqr_pulse::Result<()> {
    let params = DeviceParameters {
        qubit1_rabi_ghz: 0.05,
        ..DeviceParameters::default()
    };
    let system = TransmonSystem::new(SystemKind::OneQubitTwoLevel, &params, 0.25);
    let costs = CostMatrices::uniform(system.dim(), system.channels(), 1000.0, 1.0, 0.01, 10.0);
    let knots = 241;
    let problem = GateProblem::new(system, ControlMode::Smoothed, GateName::X2, costs, knots)?;
    let settings = SolverSettings {
        max_iterations: 300,
        cost_tolerance: 1e-10,
        ..SolverSettings::default()
    };
    let report = solve(&problem, random_controls(7, 0, knots - 1, 2, 0.01), &settings)?;

    println!("iter  J             |Q_u|      mu       alpha");
    for r in report.log.iter().filter(|r| r.iter % 10 == 0) {
        println!(
            "{:>4}  {:.6e}  {:.2e}  {:.0e}  {}",
            r.iter,
            r.cost,
            r.grad_norm,
            r.mu,
            r.alpha.map_or("-".to_string(), |a| a.to_string())
        );
    }
    println!("termination      {:?}", report.termination);
    println!("trace infidelity {:.3e}", report.fidelity.trace_infidelity);
    Ok(())
}
