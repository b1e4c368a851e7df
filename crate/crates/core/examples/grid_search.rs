//! Sweeps cost multipliers around the smoothed X gate and ranks the cells.
//!
//! `cargo run --example grid_search -- [jobs]`

use ilqr_pulse::harness::{self, Experiment, GridSpec};

fn main() -> ilqr_pulse::Result<()> {
    let config = Experiment::SmoothedX.config()?;
    let mut spec = GridSpec::single();
    spec.q_f = vec![0.1, 1.0, 10.0];
    spec.r_d = vec![0.1, 1.0, 10.0];
    spec.jobs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    spec.keep_top = 3;
    let out = harness::cmd_gridsearch(&config, &spec, None)?;
    println!("rank cell   q_f   r_d   infidelity  iterations");
    for row in &out.rows {
        println!(
            "{:>4} {:>4} {:>5} {:>5}   {:.3e}   {}",
            row.rank,
            row.cell,
            row.q_f,
            row.r_d,
            row.trace_infidelity.unwrap_or(f64::NAN),
            row.iterations.unwrap_or(0)
        );
    }
    Ok(())
}
