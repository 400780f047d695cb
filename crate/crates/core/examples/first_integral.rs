//! Conservation of `½β'² − W(β)` along one-dimensional profiles.

use deadcore::diagnostics::{hamiltonian_check, CellRule};
use deadcore::{LevelSpec, RadialPotential, RadialSolver};

fn main() -> deadcore::Result<()> {
    let p = RadialPotential::power_law(1.0, 1.0)?;
    let solver = RadialSolver { cells: 4000, levels: LevelSpec::Uniform { m: 400 }, ..RadialSolver::default() };
    for radius in [1.0, 3.0] {
        let pair = solver.comparison_pair(&p, 1, radius)?;
        for rule in [CellRule::LowerNode, CellRule::Midpoint] {
            let rec = hamiltonian_check(&pair.upper, &p, solver.zero_tolerance(1.0), rule)?;
            println!(
                "R = {radius}, {rule:?}: mean {:+.3e}, max deviation {:.3e}, dead core {}",
                rec.mean, rec.max_deviation, rec.dead_core
            );
        }
    }
    Ok(())
}
