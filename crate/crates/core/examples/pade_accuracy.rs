//! Error of the one-step Padé propagator with and without scaling, against
//! a heavily squared reference, at growing drive amplitudes.

use ilqr_pulse::propagator::pade_expm;
use ilqr_pulse::{PadeScaling, SystemKind, TransmonSystem};

fn main() -> ilqr_pulse::Result<()> {
    println!("model  |u|    plain      auto       orthogonality(auto)");
    for kind in SystemKind::ALL {
        let sys = TransmonSystem::standard(kind);
        let gens = sys.generators();
        for amp in [0.05, 0.2, 1.0] {
            let u: Vec<f64> = (0..sys.channels()).map(|j| if j % 2 == 0 { amp } else { -0.5 * amp }).collect();
            let g = gens.generator(&u)?;
            let reference = pade_expm(&g, sys.dt, PadeScaling::Squarings(12))?;
            let err = |s| -> ilqr_pulse::Result<f64> {
                Ok((pade_expm(&g, sys.dt, s)?.as_real() - reference.as_real()).amax())
            };
            let auto = pade_expm(&g, sys.dt, PadeScaling::Auto)?;
            println!(
                "{:<6} {amp:<5}  {:.2e}   {:.2e}   {:.2e}",
                kind.label(),
                err(PadeScaling::Off)?,
                err(PadeScaling::Auto)?,
                auto.orthogonality_defect()
            );
        }
    }
    Ok(())
}
