//! Bisection for the smallest ball whose comparison profile has a dead core.

use deadcore::oracles::critical_radius_n2_characteristic;
use deadcore::{IqVariant, RadialPotential, RadialSolver};

fn main() -> deadcore::Result<()> {
    let solver = RadialSolver::bisection_preset();

    let p = RadialPotential::characteristic(1.0)?;
    let c = solver.critical_radius(&p, 2, 1e-3)?;
    let theory = critical_radius_n2_characteristic(1.0);
    println!(
        "characteristic, n = 2: {:.5} in [{:.5}, {:.5}] after {} solves, theory {theory:.5}",
        c.estimate, c.bracket.0, c.bracket.1, c.solves
    );

    let p = RadialPotential::power_law(1.0, 1.0)?;
    let c = solver.critical_radius(&p, 1, 1e-3)?;
    let theory = p.iq(IqVariant::Sqrt2W)?.value;
    println!("power law 1, n = 1: {:.5}, theory {theory:.5}", c.estimate);

    match solver.critical_radius(&RadialPotential::power_law(2.0, 1.0)?, 2, 1e-3) {
        Err(e) => println!("power law 2: {e}"),
        Ok(c) => println!("power law 2: unexpected estimate {}", c.estimate),
    }
    Ok(())
}
