use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ilqr_pulse::harness::{self, GridSpec, RunConfig};
use ilqr_pulse::{Error, Termination};

#[derive(Parser)]
#[command(name = "ilqr-pulse", version, about = "iLQR pulse synthesis for transmon gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output-dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one pulse from random initial controls.
    Optimize(Common),
    /// Sweep cost multipliers and rank the cells by infidelity.
    Gridsearch {
        #[command(flatten)]
        common: Common,
        /// Worker threads; overrides `grid.jobs`.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Replay a controls file without optimizing.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        controls: PathBuf,
    },
    /// Correlate the quadrature envelope with the in-phase derivative.
    DragCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        controls: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn report_termination(termination: Option<Termination>) -> ExitCode {
    match termination {
        Some(Termination::NoProgress) => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Optimize(common) => {
            let config = load(&common)?;
            let outcome = harness::cmd_optimize(&config, common.out.as_deref())?;
            let s = &outcome.summary;
            println!(
                "trace infidelity {:.3e}, frobenius cost {:.3e}, {} iterations, {:?}",
                s.trace_infidelity,
                s.frobenius_cost,
                s.iterations.unwrap_or(0),
                outcome.report.termination
            );
            Ok(report_termination(s.termination))
        }
        Command::Gridsearch { common, jobs } => {
            let config = load(&common)?;
            let mut spec = config.grid.clone().unwrap_or_else(GridSpec::coarse);
            if let Some(jobs) = jobs {
                spec.jobs = jobs;
            }
            let outcome = harness::cmd_gridsearch(&config, &spec, common.out.as_deref())?;
            for row in outcome.rows.iter().take(spec.keep_top) {
                match row.trace_infidelity {
                    Some(inf) => println!(
                        "#{:<3} cell {:>4} [{}, {}, {}, {}] infidelity {inf:.3e}",
                        row.rank, row.cell, row.q_f, row.r_d, row.r_c, row.r_f
                    ),
                    None => println!("#{:<3} cell {:>4} failed: {}", row.rank, row.cell, row.error.as_deref().unwrap_or("")),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rollout { common, controls } => {
            let config = load(&common)?;
            let s = harness::cmd_rollout(&config, &controls, common.out.as_deref())?;
            println!("trace infidelity {:.3e}, frobenius cost {:.3e}", s.trace_infidelity, s.frobenius_cost);
            Ok(ExitCode::SUCCESS)
        }
        Command::DragCheck { common, controls } => {
            let config = load(&common)?;
            let r = harness::cmd_drag_check(&config, &controls, common.out.as_deref())?;
            match r.correlation {
                Some(c) => println!(
                    "correlation {c:.4}, factor {:.4} (-1/delta {:.4}, -delta {:.4})",
                    r.factor.unwrap_or(f64::NAN),
                    r.minus_inverse_anharmonicity,
                    r.minus_anharmonicity
                ),
                None => println!("{}", r.note.as_deref().unwrap_or("correlation undefined")),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Io(io) = &e {
                if io.kind() == std::io::ErrorKind::NotFound {
                    eprintln!("(check the paths given to --config and --controls)");
                }
            }
            ExitCode::from(1)
        }
    }
}
