//! Writes an optimized pulse to disk, reads it back and replays it
//! open loop, then prints the |0> populations at a few times.

use ilqr_pulse::harness::{self, Experiment};

fn main() -> ilqr_pulse::Result<()> {
    let dir = std::env::temp_dir().join("ilqr-pulse-replay");
    let mut config = Experiment::QutritX.config()?;
    config.solver.max_iterations = 200;
    let optimized = harness::cmd_optimize(&config, Some(&dir))?;
    let controls = dir.join("controls.csv");
    let replayed = harness::cmd_rollout(&config, &controls, Some(&dir.join("replay")))?;
    println!("optimized infidelity {:.6e}", optimized.summary.trace_infidelity);
    println!("replayed infidelity  {:.6e}", replayed.trace_infidelity);

    let mut reader = csv::Reader::from_path(dir.join("replay").join("populations_0.csv"))?;
    println!("{}", reader.headers()?.iter().collect::<Vec<_>>().join("  "));
    for rec in reader.records().step_by(20) {
        let rec = rec?;
        let cells: Vec<String> = rec.iter().map(|x| format!("{:.4}", x.parse::<f64>().unwrap_or(f64::NAN))).collect();
        println!("{}", cells.join("  "));
    }
    Ok(())
}
